import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import f as f_dist

from qmc_metrics.errors import ConfigurationError, InsufficientSamplesError, SingularFitError
from qmc_metrics.extrapolate import InfinityConfig, ScoreSeries, batch_schedule, fit_inverse_n, score_infinity
from qmc_metrics.frechet import GaussianStats
from qmc_metrics.gaussianize import sampler_spec
from qmc_metrics.oracles import (TwoClassPosteriorOracle, extrapolation_study, generate_features,
                                 generate_posteriors, make_generator, standard_reference, true_is)

DESK = dict(pool_size=20_000, min_batch=500, num_points=15)


def normal_equations(n, y, w=None):
    """Weighted least squares of y on [1, 1/n] via the textbook matrix formulas."""
    x = np.column_stack([np.ones(len(n)), 1.0 / np.asarray(n, float)])
    w = np.ones(len(n)) if w is None else np.asarray(w, float)
    xtwx = x.T @ (w[:, None] * x)
    beta = np.linalg.solve(xtwx, x.T @ (w * y))
    r = y - x @ beta
    sigma2 = (w * r * r).sum() / (len(n) - 2)
    cov = sigma2 * np.linalg.inv(xtwx)
    return beta, np.sqrt(np.diag(cov))


def test_regular_in_n_schedule():
    cfg = InfinityConfig(pool_size=50_000, min_batch=5_000, num_points=10)
    assert batch_schedule(cfg).tolist() == list(range(5_000, 50_001, 5_000))


def test_regular_in_inv_n_schedule():
    cfg = InfinityConfig(pool_size=50_000, min_batch=5_000, num_points=3, scheme="regular_in_inv_n")
    assert batch_schedule(cfg).tolist() == [5_000, 9_091, 50_000]


def test_degenerate_schedule():
    assert batch_schedule(InfinityConfig(pool_size=102, min_batch=100, num_points=3)).tolist() == [100, 101, 102]
    with pytest.raises(ConfigurationError):
        batch_schedule(InfinityConfig(pool_size=101, min_batch=100, num_points=5))


@settings(max_examples=100)
@given(lo=st.integers(2, 5000), span=st.integers(10, 100_000), t=st.integers(3, 40),
       scheme=st.sampled_from(["regular_in_n", "regular_in_inv_n"]))
def test_schedule_properties(lo, span, t, scheme):
    cfg = InfinityConfig(pool_size=lo + span, min_batch=lo, num_points=t, scheme=scheme)
    try:
        s = batch_schedule(cfg)
    except ConfigurationError:
        return
    assert s[0] == lo and s[-1] == lo + span
    assert np.all(np.diff(s) > 0) and 3 <= s.size <= t


def test_config_validation():
    with pytest.raises(ConfigurationError):
        InfinityConfig(scheme="log")
    with pytest.raises(ConfigurationError):
        InfinityConfig(pool_size=100, min_batch=100)
    with pytest.raises(ConfigurationError):
        InfinityConfig(resample="jackknife")


def test_exact_line():
    fit = fit_inverse_n(ScoreSeries([10, 20, 40], [3 + 5 / 10, 3 + 5 / 20, 3 + 5 / 40]))
    assert fit.intercept == pytest.approx(3.0, rel=1e-14)
    assert fit.slope == pytest.approx(5.0, rel=1e-13)
    assert fit.r_squared == pytest.approx(1.0)


def test_constant_scores():
    fit = fit_inverse_n(ScoreSeries([5, 9, 30, 31], [2.5] * 4))
    assert (fit.intercept, fit.slope, fit.r_squared) == (2.5, 0.0, 1.0)


def test_singular_design():
    with pytest.raises(SingularFitError):
        fit_inverse_n(ScoreSeries([10, 20], [1.0, 2.0]))
    with pytest.raises(ConfigurationError):
        ScoreSeries([10, 10, 10], [1.0, 2.0, 3.0])


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(3, 25), weighted=st.booleans())
def test_matches_normal_equations(seed, m, weighted):
    rng = np.random.default_rng(seed)
    n = np.unique(rng.integers(2, 100_000, size=m))
    if n.size < 3:
        return
    y = 4.0 + 30.0 / n + rng.normal(0, 0.01, n.size)
    fit = fit_inverse_n(ScoreSeries(n, y), weighted=weighted)
    beta, se = normal_equations(n, y, n if weighted else None)
    assert fit.intercept == pytest.approx(beta[0], rel=1e-10, abs=1e-10)
    assert fit.slope == pytest.approx(beta[1], rel=1e-8, abs=1e-8)
    assert fit.intercept_se == pytest.approx(se[0], rel=1e-8)
    assert fit.slope_se == pytest.approx(se[1], rel=1e-8)


def _gaussian_pool(gen, sampler, seed, size):
    spec, transform = sampler_spec(sampler, gen.latent_dim, seed)
    return generate_features(gen, spec, transform, n=size)


def test_perfect_generator_intercept_near_zero():
    gen = make_generator(16, 16, 1.0, 0.0)
    ref = standard_reference(16)
    pool = _gaussian_pool(gen, "normal", 3, 20_000)
    res = score_infinity(pool, ref, InfinityConfig(**DESK, replicates=20), run_seed=1)
    assert abs(res.replicate_mean) <= 3 * res.replicate_std + 1e-3
    assert res.fit.slope > 0


def test_replicates_are_seeded_and_distinct():
    pool = _gaussian_pool(make_generator(), "normal", 0, 5_000)
    cfg = InfinityConfig(pool_size=5_000, min_batch=500, num_points=5, replicates=3)
    a = score_infinity(pool, standard_reference(16), cfg, run_seed=9)
    b = score_infinity(pool, standard_reference(16), cfg, run_seed=9)
    assert a.to_dict() == b.to_dict()
    assert len(set(a.intercepts.tolist())) == 3
    json.dumps(a.to_dict())


def test_with_replacement_flag_runs():
    pool = _gaussian_pool(make_generator(), "normal", 0, 5_000)
    cfg = InfinityConfig(pool_size=5_000, min_batch=500, num_points=5, resample="with-replacement")
    assert np.isfinite(score_infinity(pool, standard_reference(16), cfg).fit.intercept)


def test_pool_too_small():
    with pytest.raises(InsufficientSamplesError):
        score_infinity(np.zeros((100, 2)) + np.arange(2), GaussianStats(np.zeros(2), np.eye(2)),
                       InfinityConfig(pool_size=200, min_batch=10))


def test_low_r_squared_is_a_warning_not_an_error():
    pool = np.random.default_rng(0).standard_normal((2_000, 2))
    cfg = InfinityConfig(pool_size=2_000, min_batch=1_900, num_points=5, replicates=4)
    res = score_infinity(pool, GaussianStats(np.zeros(2), np.eye(2)), cfg)
    assert all("r_squared" in w for w in res.warnings)
    assert len(res.warnings) == sum(f.r_squared < 0.5 for f in res.fits)


@pytest.fixture(scope="module")
def desk_studies():
    gen = make_generator()
    out = {}
    for sampler in ("normal", "sobol_inv"):
        for scheme in ("regular_in_n", "regular_in_inv_n"):
            cfg = InfinityConfig(**DESK, scheme=scheme, sampler=sampler)
            out[sampler, scheme] = extrapolation_study(gen, cfg, replicates=30, seed=5)
    return out


def test_affine_oracle_recovered(desk_studies):
    st_ = desk_studies["normal", "regular_in_n"]
    assert abs(st_.intercepts.mean() - st_.truth) <= 3 * st_.replicate_std
    assert np.mean(np.abs(st_.intercepts - st_.truth)) < np.mean(np.abs(st_.raw - st_.truth))


def test_scheme_preference(desk_studies):
    for sampler in ("normal", "sobol_inv"):
        a = desk_studies[sampler, "regular_in_n"].replicate_std
        b = desk_studies[sampler, "regular_in_inv_n"].replicate_std
        assert a <= b


def test_sampler_comparison(desk_studies):
    sobol = desk_studies["sobol_inv", "regular_in_n"].replicate_std ** 2
    iid = desk_studies["normal", "regular_in_n"].replicate_std ** 2
    # one-sided F test at 5%: Sobol variance may exceed IID only by chance
    assert sobol / iid <= f_dist.ppf(0.95, 29, 29)


def test_fit_quality(desk_studies):
    r2 = [f.r_squared for f in desk_studies["normal", "regular_in_n"].fits]
    assert np.median(r2) >= 0.9


def test_variance_non_increasing_in_pool_size():
    gen = make_generator()
    stds = []
    for pool in (10_000, 20_000, 50_000):
        cfg = InfinityConfig(pool_size=pool, min_batch=500, num_points=15, sampler="normal")
        stds.append(extrapolation_study(gen, cfg, replicates=30, seed=2).replicate_std)
    var = np.square(stds)
    assert var[1] <= 1.1 * var[0] and var[2] <= 1.1 * var[1]


def test_posterior_oracle_intercept():
    oracle = TwoClassPosteriorOracle(2.0, 5.0)
    truth = true_is(oracle).value
    cfg = InfinityConfig(pool_size=20_000, min_batch=500, sampler="normal")
    st_ = extrapolation_study(oracle, cfg, replicates=30, seed=4, truth=truth)
    assert abs(st_.intercepts.mean() - truth) <= 3 * st_.replicate_std


def test_is_infinity_needs_no_reference():
    spec, _ = sampler_spec("sobol_inv", 1, 0)
    pool = generate_posteriors(TwoClassPosteriorOracle(), spec, n=4_000)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = score_infinity(pool, None, InfinityConfig(pool_size=4_000, min_batch=400, num_points=6))
    assert res.metric == "is" and 1.0 <= res.fit.intercept <= 2.0
