"""Inception Score from a matrix of class posteriors.

The marginal class distribution is the column mean of the very rows being
scored. Natural logarithms throughout, with ``0 log 0 = 0``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import xlogy

from ._util import rng_for
from .errors import ConfigurationError, InvalidPosteriorError, ShapeError
from .frechet import subsample_rows

__all__ = ["as_posteriors", "inception_score", "is_at_n", "is_with_splits"]

ROW_SUM_TOL = 1e-6


def as_posteriors(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 2:
        raise ShapeError(f"posteriors must be (N >= 1, K >= 2), got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidPosteriorError("posteriors contain non-finite values")
    if p.min() < 0.0 or p.max() > 1.0:
        raise InvalidPosteriorError("posterior entries must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise InvalidPosteriorError(
            f"row {bad[0]} sums to {p[bad[0]].sum():.9f}, not 1 (tolerance {ROW_SUM_TOL})")
    return p


def _score(p: np.ndarray) -> float:
    marginal = p.mean(axis=0)
    # a zero marginal column forces the whole column to be zero
    assert not np.any((marginal == 0) & (p > 0).any(axis=0))
    kl = (xlogy(p, p) - xlogy(p, marginal)).sum(axis=1)
    return float(np.exp(kl.mean()))


def inception_score(posteriors) -> float:
    """``exp(mean_i KL(p(y|x_i) || mean_j p(y|x_j)))``."""
    return _score(as_posteriors(posteriors))


def is_at_n(posteriors, n: int, permutation_seed: int = 0,
            resample: str = "without-replacement") -> float:
    p = as_posteriors(posteriors)
    rows = subsample_rows(p.shape[0], n, rng_for(permutation_seed), resample)
    return _score(p[rows])


def is_with_splits(posteriors, splits: int = 10, seed: int = 0) -> tuple[float, float]:
    """Mean and sample std of the score over contiguous blocks of shuffled rows.

    Blocks have ``N // splits`` rows; the last block also takes the remainder.
    """
    p = as_posteriors(posteriors)
    n = p.shape[0]
    if splits < 1 or splits > n / 2:
        raise ConfigurationError(f"splits must be in [1, N/2] = [1, {n / 2:g}], got {splits}")
    if splits == 1:
        return _score(p), 0.0
    p = p[rng_for(seed).permutation(n)]
    size = n // splits
    bounds = [i * size for i in range(splits)] + [n]
    scores = np.array([_score(p[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])])
    return float(scores.mean()), float(scores.std(ddof=1))
