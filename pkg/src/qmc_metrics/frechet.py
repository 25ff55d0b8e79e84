"""Gaussian feature statistics and the Frechet distance between them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import rng_for
from .errors import (ConfigurationError, DataError, InsufficientSamplesError,
                     NotPSDError, NumericalError, ShapeError)

__all__ = [
    "GaussianStats",
    "as_features",
    "gaussian_stats",
    "psd_sqrt",
    "frechet_distance",
    "subsample_rows",
    "fid_at_n",
]

PSD_RTOL = 1e-6
TRACE_ATOL = 1e-6
RESAMPLE_MODES = ("without-replacement", "with-replacement")


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)
    n_source: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ShapeError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def as_features(x) -> np.ndarray:
    """Validate an (N, d) feature matrix and promote it to float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"features must be a 2-D (N, d) array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(f"non-finite feature at row {bad[0]}, col {bad[1]}")
    return arr


def gaussian_stats(features) -> GaussianStats:
    """Column mean and unbiased (1/(N-1)) sample covariance."""
    x = as_features(features)
    n = x.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 rows to estimate a covariance, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(mean, cov, n)


def _checked_eigh(mat: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    top = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if w.size and w.min() < -PSD_RTOL * top:
        raise NotPSDError(f"{what} has eigenvalue {w.min():.3e} (largest magnitude {top:.3e})")
    # eigenvalues at rounding level are zero; their square roots would not be
    floor = max(w.size, 1) * np.finfo(np.float64).eps * top
    return np.where(w > floor, w, 0.0), v


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0."""
    w, v = _checked_eigh(np.asarray(mat, dtype=np.float64), "matrix")
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(a: GaussianStats, b: GaussianStats, jitter: float = 0.0) -> float:
    """Frechet distance between N(a.mean, a.cov) and N(b.mean, b.cov).

    ``||m_a - m_b||^2 + Tr(C_a) + Tr(C_b) - 2 Tr((C_a C_b)^{1/2})``, where the
    last trace is taken as the sum of square roots of the eigenvalues of the
    symmetric matrix ``C_a^{1/2} C_b C_a^{1/2}``.

    ``jitter`` adds ``jitter * I`` to both covariances; there is no implicit
    regularisation.
    """
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    ca, cb = a.cov, b.cov
    if jitter:
        eye = jitter * np.eye(a.dim)
        ca, cb = ca + eye, cb + eye
    wa, va = _checked_eigh(ca, "first covariance")
    _checked_eigh(cb, "second covariance")
    root_a = (va * np.sqrt(wa)) @ va.T
    middle = root_a @ cb @ root_a
    wm = np.linalg.eigvalsh(0.5 * (middle + middle.T))
    top = float(np.max(np.abs(wm))) if wm.size else 0.0
    if wm.size and wm.min() < -PSD_RTOL * max(top, 1.0):
        raise NumericalError(f"C_a^1/2 C_b C_a^1/2 has eigenvalue {wm.min():.3e}")
    wm = np.where(wm > wm.size * np.finfo(np.float64).eps * top, wm, 0.0)
    trace_term = np.trace(ca) + np.trace(cb) - 2.0 * np.sum(np.sqrt(wm))
    if trace_term < -TRACE_ATOL:
        raise NumericalError(f"trace term is negative ({trace_term:.3e})")
    diff = a.mean - b.mean
    return float(max(diff @ diff + max(trace_term, 0.0), 0.0))


def subsample_rows(n_rows: int, n: int, rng: np.random.Generator,
                   resample: str = "without-replacement") -> np.ndarray:
    """Row indices for one batch: a shuffled prefix, or a bootstrap draw."""
    if resample not in RESAMPLE_MODES:
        raise ConfigurationError(f"unknown resample mode {resample!r}")
    if n < 1 or (resample == "without-replacement" and n > n_rows):
        raise ConfigurationError(f"cannot take {n} rows out of {n_rows}")
    if resample == "with-replacement":
        return rng.integers(0, n_rows, size=n)
    return rng.permutation(n_rows)[:n]


def fid_at_n(gen_features, ref: GaussianStats, n: int, permutation_seed: int = 0,
             jitter: float = 0.0, resample: str = "without-replacement") -> float:
    """FID of ``n`` rows picked by a seeded shuffle, against fixed reference stats."""
    x = as_features(gen_features)
    rows = subsample_rows(x.shape[0], n, rng_for(permutation_seed), resample)
    return frechet_distance(gaussian_stats(x[rows]), ref, jitter)
