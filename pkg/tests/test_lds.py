import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import qmc

from qmc_metrics.errors import ConfigurationError, UnsupportedDimensionError
from qmc_metrics.lds import (MAX_SOBOL_DIMENSION, SamplerSpec, centered_l2_discrepancy, direction_numbers,
                             sobol_integers, sobol_points, uniform_points, unit_points)


def radical_inverse_gray(index: int, bits: int = 32) -> int:
    """Van der Corput point of Gray-code index ``i ^ (i >> 1)`` on a 2**bits lattice."""
    g = index ^ (index >> 1)
    out = 0
    for b in range(bits):
        if (g >> b) & 1:
            out |= 1 << (bits - 1 - b)
    return out


def sobol(d, seed=0, scrambled=False):
    return SamplerSpec("sobol", d, seed, scrambled)


def test_first_dimension_matches_radical_inverse():
    got = sobol_integers(sobol(1), 1, 4)[:, 0]
    assert [int(v) / 2**32 for v in got] == [0.5, 0.75, 0.25, 0.375]


def test_first_dimension_long_prefix_is_exact():
    got = sobol_integers(sobol(1), 0, 4096)[:, 0]
    want = np.array([radical_inverse_gray(i) for i in range(4096)], dtype=np.uint32)
    np.testing.assert_array_equal(got, want)


def test_float_points_carry_half_cell_offset():
    pts = sobol_points(sobol(1), 1, 4).points[:, 0]
    np.testing.assert_array_equal(pts, np.array([0.5, 0.75, 0.25, 0.375]) + 2.0**-33)


def test_matches_scipy_unscrambled_lattice():
    ref = qmc.Sobol(20, scramble=False, bits=32).random_base2(10)
    got = sobol_integers(sobol(20), 0, 1024).astype(np.float64) * 2.0**-32
    np.testing.assert_array_equal(got, ref)


def _one_per_cell(x: np.ndarray, m: int) -> bool:
    cells = np.floor(x * 2**m).astype(np.int64)
    return all(np.array_equal(np.sort(cells[:, k]), np.arange(2**m)) for k in range(x.shape[1]))


@pytest.mark.parametrize("m", [1, 4, 8, 12])
def test_net_property_unscrambled(m):
    pts = sobol_points(sobol(8), 0, 2**m).points
    assert _one_per_cell(pts, m)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), m=st.integers(1, 12), d=st.integers(1, 6))
def test_net_property_scrambled(seed, m, d):
    pts = sobol_points(sobol(d, seed, True), 0, 2**m).points
    assert _one_per_cell(pts, m)


def test_scramble_seeds_give_different_sets():
    a = sobol_points(sobol(3, 1, True), 0, 256).points
    b = sobol_points(sobol(3, 2, True), 0, 256).points
    assert not np.array_equal(a, b)
    assert _one_per_cell(a, 8) and _one_per_cell(b, 8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), start=st.integers(0, 5000), n=st.integers(0, 300),
       d=st.integers(1, 10), scrambled=st.booleans())
def test_sobol_range_and_determinism(seed, start, n, d, scrambled):
    spec = sobol(d, seed, scrambled)
    a = sobol_points(spec, start, n).points
    b = sobol_points(spec, start, n).points
    np.testing.assert_array_equal(a, b)
    assert a.shape == (n, d)
    assert np.all((a > 0.0) & (a < 1.0))


@settings(max_examples=25, deadline=None)
@given(start=st.integers(0, 3000), split=st.integers(0, 200), n=st.integers(1, 200))
def test_sobol_blocks_concatenate(start, split, n):
    spec = sobol(5, 7, True)
    split = min(split, n)
    whole = sobol_points(spec, start, n).points
    parts = np.vstack([sobol_points(spec, start, split).points, sobol_points(spec, start + split, n - split).points])
    np.testing.assert_array_equal(whole, parts)


def test_dimension_limit():
    assert direction_numbers(MAX_SOBOL_DIMENSION).shape == (MAX_SOBOL_DIMENSION, 32)
    assert MAX_SOBOL_DIMENSION >= 2048
    with pytest.raises(UnsupportedDimensionError):
        sobol_points(sobol(MAX_SOBOL_DIMENSION + 1), 1, 1)


def test_index_overflow_rejected():
    with pytest.raises(ConfigurationError):
        sobol_points(sobol(1), 2**32 - 1, 2)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        SamplerSpec("halton", 2)
    with pytest.raises(ConfigurationError):
        SamplerSpec("sobol", 0)
    with pytest.raises(ConfigurationError):
        SamplerSpec("sobol", 2, seed=-1)


def test_default_start_index():
    assert unit_points(sobol(2), None, 3).start_index == 1
    assert unit_points(SamplerSpec("iid_uniform", 2), None, 3).start_index == 0


def test_uniform_empty_and_deterministic():
    spec = SamplerSpec("iid_uniform", 3, 42)
    assert uniform_points(spec, 0).points.shape == (0, 3)
    np.testing.assert_array_equal(uniform_points(spec, 500).points, uniform_points(spec, 500).points)


def test_uniform_rows_reproducible_from_any_start():
    spec = SamplerSpec("iid_uniform", 4, 9)
    whole = uniform_points(spec, 100).points
    np.testing.assert_array_equal(uniform_points(spec, 30, start_index=70).points, whole[70:])


def test_uniform_documented_algorithm():
    # top 52 bits of raw PCG64 output, centred in their cell
    raw = np.random.PCG64(5).random_raw(6)
    want = ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52
    np.testing.assert_array_equal(uniform_points(SamplerSpec("iid_uniform", 2, 5), 3).points.ravel(), want)


def test_uniform_moments():
    n = 10**5
    x = uniform_points(SamplerSpec("iid_uniform", 4, 3), n).points
    se = np.sqrt(1 / 12) / np.sqrt(n)
    assert np.all(np.abs(x.mean(axis=0) - 0.5) < 5 * se)
    assert np.all((x > 0) & (x < 1))


@pytest.mark.parametrize("d", [1, 2, 5, 16])
def test_discrepancy_single_centre_point(d):
    # N = 1 at the centre: (13/12)^d - 2 + 1, every |x - 1/2| term vanishes
    want = np.sqrt((13 / 12) ** d - 1.0)
    assert centered_l2_discrepancy(np.full((1, d), 0.5)) == pytest.approx(want, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 60), d=st.integers(1, 5))
def test_discrepancy_matches_scipy(seed, n, d):
    x = np.random.default_rng(seed).random((n, d))
    # scipy reports the squared discrepancy
    assert centered_l2_discrepancy(x) ** 2 == pytest.approx(qmc.discrepancy(x, method="CD"), rel=1e-10, abs=1e-14)


def test_discrepancy_blocking_is_irrelevant():
    x = np.random.default_rng(1).random((300, 3))
    assert centered_l2_discrepancy(x, block=7) == pytest.approx(centered_l2_discrepancy(x, block=512), rel=1e-13)


def test_discrepancy_duplicates_unchanged():
    x = np.random.default_rng(2).random((40, 3))
    assert centered_l2_discrepancy(np.vstack([x, x])) == pytest.approx(centered_l2_discrepancy(x), rel=1e-12)


def _iid_discrepancies(n, d, sets=100):
    return np.array([centered_l2_discrepancy(uniform_points(SamplerSpec("iid_uniform", d, 10_000 + s), n))
                     for s in range(sets)])


def test_sobol_discrepancy_beats_iid_d2():
    sob = centered_l2_discrepancy(sobol_points(sobol(2, 0, True), 0, 1024))
    iid = _iid_discrepancies(1024, 2)
    assert np.sum(sob < iid) >= 95


@pytest.mark.parametrize("k,d", [(6, 2), (7, 6), (8, 4), (9, 8), (11, 2)])
def test_sobol_discrepancy_ordering(k, d):
    n = 2**k
    sob = centered_l2_discrepancy(sobol_points(sobol(d, 11, True), 0, n))
    iid = _iid_discrepancies(n, d)
    assert sob < np.percentile(iid, 5)


def test_integration_sanity():
    n = 1024
    sob = abs(sobol_points(sobol(1, 3, True), 0, n).points.mean() - 0.5)
    iid = [abs(uniform_points(SamplerSpec("iid_uniform", 1, s), n).points.mean() - 0.5) for s in range(100)]
    assert sob < np.median(iid)
