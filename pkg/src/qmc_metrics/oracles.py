"""Synthetic generators with known limiting scores, and study harnesses.

``AffineGaussianGenerator`` pushes N(0, I) latents through ``z -> A z + b``,
so its feature distribution is exactly N(b, A A^T) and the limiting FID
against any Gaussian reference has a closed form. ``TwoClassPosteriorOracle``
emits posteriors ``(p, 1 - p)`` with ``p ~ Beta(alpha, beta)``; its limiting
Inception Score is an expectation over the Beta law.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, betaln, digamma, xlogy

from ._util import derive_seed, parallel_map, rng_for
from .errors import ConfigurationError, ConstructionError, ShapeError
from .extrapolate import ExtrapolationFit, InfinityConfig, ScoreSeries, fit_inverse_n, score_infinity
from .frechet import GaussianStats, frechet_distance, gaussian_stats
from .gaussianize import normal_points, sampler_spec
from .inception import _score
from .lds import SamplerSpec, centered_l2_discrepancy, unit_points

__all__ = [
    "AffineGaussianGenerator",
    "TwoClassPosteriorOracle",
    "TrueScore",
    "StudyReport",
    "ExtrapolationStudy",
    "CrossingReport",
    "make_generator",
    "standard_reference",
    "generate_features",
    "true_fid",
    "beta_icdf",
    "generate_posteriors",
    "true_is",
    "true_is_closed_form",
    "bias_study",
    "extrapolation_study",
    "construct_crossing_pair",
    "crossing_demo",
]


@dataclass(frozen=True)
class AffineGaussianGenerator:
    weight: np.ndarray = field(repr=False)
    bias: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weight, dtype=np.float64))
        b = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if w.shape[0] != b.size:
            raise ShapeError(f"weight has {w.shape[0]} rows but bias has length {b.size}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ConfigurationError("generator parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def latent_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.weight.shape[0]

    def pushforward(self) -> GaussianStats:
        return GaussianStats(self.bias, self.weight @ self.weight.T)


def make_generator(feature_dim: int = 16, latent_dim: int = 8, scale: float = 1.0,
                   offset: float = 0.0, seed: int = 0) -> AffineGaussianGenerator:
    """``A = scale * Q`` with ``Q`` seeded orthonormal columns, ``b`` of norm ``offset``.

    Against the N(0, I) reference the limiting FID is
    ``offset**2 + latent_dim * (scale - 1)**2 + (feature_dim - latent_dim)``.
    """
    if latent_dim > feature_dim:
        raise ConfigurationError("latent_dim must not exceed feature_dim")
    rng = rng_for(seed, 0)
    q, _ = np.linalg.qr(rng.standard_normal((feature_dim, latent_dim)))
    direction = rng.standard_normal(feature_dim)
    direction /= np.linalg.norm(direction)
    return AffineGaussianGenerator(scale * q, offset * direction)


def standard_reference(dim: int) -> GaussianStats:
    return GaussianStats(np.zeros(dim), np.eye(dim))


def generate_features(gen: AffineGaussianGenerator, spec: SamplerSpec, transform: str = "icdf",
                      start_index: int | None = None, n: int = 0) -> np.ndarray:
    """Rows ``A z_i + b`` for normal points ``z_i`` from ``spec``/``transform``."""
    if spec.dimension != gen.latent_dim:
        raise ShapeError(f"sampler dimension {spec.dimension} != latent_dim {gen.latent_dim}")
    z = normal_points(spec, transform, start_index, n).points
    return z @ gen.weight.T + gen.bias


def true_fid(gen: AffineGaussianGenerator, ref_mean, ref_cov) -> float:
    return frechet_distance(gen.pushforward(), GaussianStats(ref_mean, ref_cov))


@dataclass(frozen=True)
class TwoClassPosteriorOracle:
    alpha: float = 2.0
    beta: float = 5.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigurationError("alpha and beta must be positive")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


def beta_icdf(u, a: float, b: float, iterations: int = 50, tol: float = 1e-12) -> np.ndarray:
    """Beta quantile by safeguarded Newton iteration on the regularized incomplete beta.

    Every iterate tightens a bisection bracket ``[lo, hi]`` around the root;
    a Newton step that leaves the bracket is replaced by its midpoint, so the
    iteration never does worse than plain bisection. Each entry stops once its
    step or its bracket drops below ``tol``.
    """
    u = np.asarray(u, dtype=np.float64)
    flat = u.reshape(-1)
    out = np.empty_like(flat)
    idx = np.arange(flat.size)
    lo, hi = np.zeros(flat.size), np.ones(flat.size)
    x = np.full(flat.size, a / (a + b))
    log_norm = betaln(a, b)
    for _ in range(iterations):
        if idx.size == 0:
            break
        f = betainc(a, b, x) - flat[idx]
        below = f < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            step = x - f / np.exp((a - 1) * np.log(x) + (b - 1) * np.log1p(-x) - log_norm)
        step = np.where((step > lo) & (step < hi), step, 0.5 * (lo + hi))
        done = (np.abs(step - x) < tol) | (hi - lo < tol)
        out[idx[done]] = step[done]
        keep = ~done
        idx, x, lo, hi = idx[keep], step[keep], lo[keep], hi[keep]
    out[idx] = x
    return out.reshape(u.shape)


def generate_posteriors(oracle: TwoClassPosteriorOracle, spec: SamplerSpec,
                        start_index: int | None = None, n: int = 0) -> np.ndarray:
    if spec.dimension != 1:
        raise ShapeError("the two-class oracle consumes 1-D uniforms")
    u = unit_points(spec, start_index, n).points[:, 0]
    p = beta_icdf(u, oracle.alpha, oracle.beta)
    return np.column_stack([p, 1.0 - p])


@dataclass(frozen=True)
class TrueScore:
    value: float
    std_error: float


def _entropy2(p):
    return -(p * np.log(p) + (1 - p) * np.log1p(-p))


def true_is(oracle: TwoClassPosteriorOracle, oracle_samples: int = 10**7, seed: int = 0,
            chunk: int = 10**6) -> TrueScore:
    """Brute-force limiting IS with its Monte Carlo standard error.

    ``log IS = H(mean p) - E[H(p)]`` with ``H`` the binary entropy; the mean
    of ``p`` is taken analytically and ``E[H(p)]`` by IID Beta sampling.
    """
    if oracle_samples < 10**6:
        raise ConfigurationError("oracle_samples must be >= 10**6")
    rng = rng_for(seed, 1)
    total, total_sq, done = 0.0, 0.0, 0
    while done < oracle_samples:
        m = min(chunk, oracle_samples - done)
        h = _entropy2(np.clip(rng.beta(oracle.alpha, oracle.beta, m), 1e-300, 1 - 1e-16))
        total += h.sum()
        total_sq += (h * h).sum()
        done += m
    mean_h = total / done
    se_h = np.sqrt(max(total_sq / done - mean_h**2, 0.0) / done)
    value = float(np.exp(_entropy2(oracle.mean) - mean_h))
    return TrueScore(value, float(value * se_h))


def true_is_closed_form(oracle: TwoClassPosteriorOracle) -> float:
    """Limiting IS from digamma identities for ``E[p log p]`` under a Beta law."""
    a, b = oracle.alpha, oracle.beta
    s = a + b
    e_plogp = a / s * (digamma(a + 1) - digamma(s + 1))
    e_qlogq = b / s * (digamma(b + 1) - digamma(s + 1))
    return float(np.exp(_entropy2(oracle.mean) + e_plogp + e_qlogq))


@dataclass
class StudyReport:
    metric: str
    samplers: list[str]
    n_grid: np.ndarray
    replicates: int
    seed: int
    scores: dict[str, np.ndarray] = field(repr=False)  # sampler -> (len(n_grid), replicates)
    fits: dict[str, ExtrapolationFit] = field(default_factory=dict)
    discrepancy: dict[str, dict[int, float]] = field(default_factory=dict)
    baseline: str = "normal"
    nested: bool = False

    def mean(self, sampler: str) -> np.ndarray:
        return self.scores[sampler].mean(axis=1)

    def std(self, sampler: str) -> np.ndarray:
        return self.scores[sampler].std(axis=1, ddof=1)

    def f_values(self, sampler: str) -> np.ndarray:
        """Per-cell variance ratio: baseline variance over ``sampler`` variance."""
        return self.std(self.baseline) ** 2 / self.std(sampler) ** 2

    def f_pooled(self, sampler: str) -> float:
        return float(np.sum(self.std(self.baseline) ** 2) / np.sum(self.std(sampler) ** 2))

    def rows(self):
        for s in self.samplers:
            for i, n in enumerate(self.n_grid):
                for r in range(self.replicates):
                    yield s, int(n), r, float(self.scores[s][i, r])

    def to_dict(self) -> dict:
        out = {
            "schema": 1,
            "metric": self.metric,
            "n_grid": [int(n) for n in self.n_grid],
            "replicates": self.replicates,
            "seed": int(self.seed),
            "nested": self.nested,
            "samplers": {},
        }
        for s in self.samplers:
            fit = self.fits[s]
            entry = {
                "mean": self.mean(s).tolist(),
                "std": self.std(s).tolist(),
                "slope": fit.slope,
                "slope_se": fit.slope_se,
                "intercept": fit.intercept,
                "intercept_se": fit.intercept_se,
                "r_squared": fit.r_squared,
                "discrepancy": {str(k): v for k, v in self.discrepancy.get(s, {}).items()},
            }
            if self.baseline in self.samplers and s != self.baseline:
                entry["f_values"] = self.f_values(s).tolist()
                entry["f_mean"] = float(np.mean(self.f_values(s)))
                entry["f_pooled"] = self.f_pooled(s)
            out["samplers"][s] = entry
        return out


def _prefix_is(p: np.ndarray, prefixes: np.ndarray) -> np.ndarray:
    """IS of the leading ``n`` rows for every ``n`` in ``prefixes``; ``p`` is (R, N, K)."""
    # IS_n = exp(mean_i sum_k p log p - sum_k m log m) with m the prefix marginal
    neg_ent = np.cumsum(xlogy(p, p).sum(axis=2), axis=1)[:, prefixes - 1] / prefixes
    marg = np.cumsum(p, axis=1)[:, prefixes - 1, :] / prefixes[:, None]
    return np.exp(neg_ent - xlogy(marg, marg).sum(axis=2))


def _is_block(target: TwoClassPosteriorOracle, sampler: str, seeds, prefixes: np.ndarray) -> np.ndarray:
    u = np.stack([unit_points(sampler_spec(sampler, 1, s)[0], None, int(prefixes[-1])).points[:, 0]
                  for s in seeds])
    q = beta_icdf(u, target.alpha, target.beta)
    return _prefix_is(np.stack([q, 1.0 - q], axis=2), prefixes)


def _fid_prefixes(target, sampler: str, seed: int, prefixes: np.ndarray, ref: GaussianStats) -> np.ndarray:
    spec, transform = sampler_spec(sampler, target.latent_dim, seed)
    feats = generate_features(target, spec, transform, None, int(prefixes[-1]))
    return np.array([frechet_distance(gaussian_stats(feats[:n]), ref) for n in prefixes])


def bias_study(target, samplers=("normal", "sobol_inv"), n_grid=(500, 1000, 2000, 5000, 10000, 20000),
               replicates: int = 50, seed: int = 0, ref: GaussianStats | None = None,
               discrepancy_max_n: int = 2048, nested: bool = False) -> StudyReport:
    """Score every (sampler, n, replicate) cell on freshly drawn points.

    ``target`` is an :class:`AffineGaussianGenerator` (FID against ``ref``,
    default N(0, I)) or a :class:`TwoClassPosteriorOracle` (IS). Replicate
    ``r`` of cell ``(s, i)`` uses sampler seed ``derive_seed(seed, s, i, r)``,
    which for Sobol samplers is the scramble seed.

    With ``nested=True`` replicate ``r`` instead draws a single stream of
    ``max(n_grid)`` points from ``derive_seed(seed, s, r)`` and scores its
    leading ``n`` points for every ``n``. Each cell keeps its marginal law,
    but the cells of one replicate share points, which steadies the shape of
    the mean curve.
    """
    n_grid = np.asarray(n_grid, dtype=np.int64)
    if n_grid.size == 0 or np.any(np.diff(n_grid) <= 0):
        raise ConfigurationError("n_grid must be non-empty and strictly ascending")
    if replicates < 2:
        raise ConfigurationError("replicates must be >= 2")
    is_metric = isinstance(target, TwoClassPosteriorOracle)
    if not is_metric and ref is None:
        ref = standard_reference(target.feature_dim)
    samplers = list(samplers)
    scores = {s: np.empty((n_grid.size, replicates)) for s in samplers}
    # (sampler index, grid indices, replicate seeds) per unit of work
    if nested:
        units = [(si, np.arange(n_grid.size), [derive_seed(seed, si, r) for r in range(replicates)])
                 for si in range(len(samplers))]
    else:
        units = [(si, np.array([i]), [derive_seed(seed, si, i, r) for r in range(replicates)])
                 for si in range(len(samplers)) for i in range(n_grid.size)]
    for si, cols, seeds in units:
        prefixes = n_grid[cols]
        if is_metric:
            chunk = max(1, 2_000_000 // int(prefixes[-1]))
            blocks = parallel_map(lambda lo: _is_block(target, samplers[si], seeds[lo:lo + chunk], prefixes),
                                  range(0, replicates, chunk))
            values = np.concatenate(blocks, axis=0)
        else:
            values = np.array(parallel_map(
                lambda s: _fid_prefixes(target, samplers[si], s, prefixes, ref), seeds))
        scores[samplers[si]][cols, :] = values.T
    report = StudyReport("is" if is_metric else "fid", samplers, n_grid, replicates, seed, scores,
                         nested=nested)
    dim = 1 if is_metric else target.latent_dim
    for si, s in enumerate(samplers):
        report.fits[s] = fit_inverse_n(ScoreSeries(n_grid, report.mean(s), report.metric))
        spec, _ = sampler_spec(s, dim, derive_seed(seed, si, 0, 0))
        report.discrepancy[s] = {int(n): centered_l2_discrepancy(unit_points(spec, None, int(n)))
                                 for n in n_grid if n <= discrepancy_max_n}
    return report


@dataclass
class ExtrapolationStudy:
    truth: float
    intercepts: np.ndarray
    raw: np.ndarray  # score on the whole pool, one per replicate
    fits: list[ExtrapolationFit] = field(repr=False)

    @property
    def replicate_std(self) -> float:
        return float(self.intercepts.std(ddof=1))

    @property
    def beats_raw_fraction(self) -> float:
        return float(np.mean(np.abs(self.intercepts - self.truth) < np.abs(self.raw - self.truth)))


def extrapolation_study(target, config: InfinityConfig, replicates: int = 50, seed: int = 0,
                        ref: GaussianStats | None = None, truth: float | None = None) -> ExtrapolationStudy:
    """Repeat the extrapolation on independent pools drawn with ``config.sampler``."""
    is_metric = isinstance(target, TwoClassPosteriorOracle)
    if not is_metric:
        ref = ref if ref is not None else standard_reference(target.feature_dim)
        if truth is None:
            truth = true_fid(target, ref.mean, ref.cov)
    elif truth is None:
        truth = true_is_closed_form(target)
    single = InfinityConfig(**{**config.__dict__, "replicates": 1})

    def one(r: int):
        pool_seed = derive_seed(seed, r, 0)
        if is_metric:
            spec, _ = sampler_spec(config.sampler, 1, pool_seed)
            pool = generate_posteriors(target, spec, None, config.pool_size)
            raw = _score(pool)
        else:
            spec, transform = sampler_spec(config.sampler, target.latent_dim, pool_seed)
            pool = generate_features(target, spec, transform, None, config.pool_size)
            raw = frechet_distance(gaussian_stats(pool), ref)
        result = score_infinity(pool, None if is_metric else ref, single, derive_seed(seed, r, 1))
        return result.fit, raw

    done = parallel_map(one, range(replicates))
    fits = [f for f, _ in done]
    return ExtrapolationStudy(float(truth), np.array([f.intercept for f in fits]),
                              np.array([raw for _, raw in done]), fits)


@dataclass
class CrossingReport:
    n_grid: np.ndarray
    true_fid: tuple[float, float]
    mean_fid: np.ndarray = field(repr=False)  # (2, len(n_grid))
    fid: np.ndarray = field(repr=False)  # (2, replicates, len(n_grid))
    intercepts: np.ndarray = field(repr=False)  # (2, replicates)
    crossing_n: float | None = None
    paired: bool = True

    @property
    def replicates(self) -> int:
        return self.fid.shape[1]

    @property
    def flipped(self) -> bool:
        """Mean-FID ranking at the smallest n differs from the ranking at the largest n."""
        d = self.mean_fid[0] - self.mean_fid[1]
        return bool(np.sign(d[0]) != np.sign(d[-1]))

    @property
    def flip_frequency(self) -> float:
        """Fraction of replicates whose ranking at the smallest n differs from that at the largest."""
        d = self.fid[0] - self.fid[1]
        return float(np.mean(np.sign(d[:, 0]) != np.sign(d[:, -1])))

    @property
    def intercept_agreement(self) -> float:
        """Fraction of replicates whose intercept ranking matches the true-FID ranking."""
        truth = np.sign(self.true_fid[0] - self.true_fid[1])
        return float(np.mean(np.sign(self.intercepts[0] - self.intercepts[1]) == truth))

    def rows(self):
        for g in range(2):
            for r in range(self.replicates):
                for i, n in enumerate(self.n_grid):
                    yield "AB"[g], int(n), r, float(self.fid[g, r, i])

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "n_grid": [int(n) for n in self.n_grid],
            "true_fid": list(self.true_fid),
            "mean_fid": self.mean_fid.tolist(),
            "crossing_n": self.crossing_n,
            "paired": self.paired,
            "flipped": self.flipped,
            "flip_frequency": self.flip_frequency,
            "intercept_agreement": self.intercept_agreement,
            "intercepts": self.intercepts.tolist(),
        }


def construct_crossing_pair(n_cross: float, feature_dim: int = 32, shrink: float = 1.0,
                            seed: int = 0) -> tuple[AffineGaussianGenerator, AffineGaussianGenerator]:
    """Two generators whose FID_n lines cross near ``n = n_cross`` against N(0, I).

    Generator A reproduces the reference exactly (limiting FID 0). Generator
    B is the same map scaled by ``1 - delta``: its limiting FID
    ``d * delta**2`` is worse, but its bias slope is smaller. Empirically the
    slope of a scaled map is close to ``s**2 d + s d (d + 2) / 4`` (the second
    term comes from the spread of sample eigenvalues under the square root),
    so the slope gap is about ``delta * d * (2 + (d + 2) / 4)`` and the lines
    meet at ``n_cross`` when ``delta = (2 + (d + 2) / 4) / (n_cross + 1)``.
    ``shrink`` rescales ``delta``.
    """
    if n_cross <= 1:
        raise ConstructionError("n_cross must exceed 1")
    delta = shrink * (2.0 + (feature_dim + 2) / 4.0) / (n_cross + 1.0)
    if not 0 < delta < 1:
        raise ConstructionError(f"n_cross={n_cross} needs a scale gap {delta:.3g} outside (0, 1)")
    q = make_generator(feature_dim, feature_dim, 1.0, 0.0, seed).weight
    zero = np.zeros(feature_dim)
    return AffineGaussianGenerator(q, zero), AffineGaussianGenerator((1.0 - delta) * q, zero)


def crossing_demo(gen_a: AffineGaussianGenerator | None = None, gen_b: AffineGaussianGenerator | None = None,
                  ref: GaussianStats | None = None, n_grid=None, replicates: int = 50,
                  sampler: str = "normal", seed: int = 0, weighted: bool = True, shuffles: int = 4,
                  paired: bool = True, n_cross: float = 700.0, feature_dim: int = 32) -> CrossingReport:
    """FID_n curves of two generators, their crossing point, and extrapolated rankings.

    Each replicate draws one pool of ``max(n_grid)`` samples per generator
    and runs the shuffled-prefix extrapolation with ``n_grid`` as the batch
    schedule; with ``shuffles > 1`` the replicate's intercept is the mean
    over that many independent shuffles of its pool. By default both
    generators share latent points and shuffles (common random numbers), so
    the curve difference is nearly noise free; ``paired=False`` draws them
    independently. Without explicit generators the pair comes from
    :func:`construct_crossing_pair` with ``n_cross`` and ``feature_dim``.
    Raises :class:`ConstructionError` when the mean curves do not cross
    inside the grid.
    """
    n_grid = np.asarray(n_grid if n_grid is not None else np.linspace(250, 20000, 15).round(), dtype=np.int64)
    if gen_a is None or gen_b is None:
        gen_a, gen_b = construct_crossing_pair(n_cross, feature_dim, seed=seed)
    if ref is None:
        ref = standard_reference(gen_a.feature_dim)
    truths = (true_fid(gen_a, ref.mean, ref.cov), true_fid(gen_b, ref.mean, ref.cov))
    config = InfinityConfig(pool_size=int(n_grid[-1]), batch_sizes=tuple(int(n) for n in n_grid),
                            sampler=sampler, weighted=weighted, replicates=shuffles)

    def one(task):
        g, r = task
        gen = (gen_a, gen_b)[g]
        stream = 0 if paired else g
        spec, transform = sampler_spec(sampler, gen.latent_dim, derive_seed(seed, stream, r, 0))
        pool = generate_features(gen, spec, transform, None, config.pool_size)
        res = score_infinity(pool, ref, config, derive_seed(seed, stream, r, 1))
        return res.replicate_mean, res.series[0].scores

    tasks = [(g, r) for g in range(2) for r in range(replicates)]
    done = parallel_map(one, tasks)
    intercepts = np.array([v for v, _ in done]).reshape(2, replicates)
    fid = np.array([s for _, s in done]).reshape(2, replicates, n_grid.size)
    mean_fid = fid.mean(axis=1)
    diff = mean_fid[0] - mean_fid[1]
    crossing = None
    flips = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    if flips.size:
        i = flips[0]
        # linear interpolation in 1/n between the bracketing grid points
        x0, x1 = 1.0 / n_grid[i], 1.0 / n_grid[i + 1]
        x = x0 + (x1 - x0) * diff[i] / (diff[i] - diff[i + 1])
        crossing = float(1.0 / x)
    report = CrossingReport(n_grid, truths, mean_fid, fid, intercepts, crossing, paired)
    if crossing is None and truths[0] != truths[1]:
        raise ConstructionError(
            f"mean FID curves do not cross inside n in [{n_grid[0]}, {n_grid[-1]}]; "
            f"true FIDs {truths[0]:.4g} vs {truths[1]:.4g}, mean FID_n differences "
            f"{diff[0]:.4g} at n={n_grid[0]} and {diff[-1]:.4g} at n={n_grid[-1]}")
    return report
