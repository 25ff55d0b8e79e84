"""Score-versus-1/N line fits and the extrapolated score at N = infinity.

A finite-sample score behaves like ``score_inf + K / N`` for practical N,
so regressing the score on ``1/N`` and reading off the intercept removes
the generator-dependent ``K / N`` term.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ._util import parallel_map, rng_for
from .errors import ConfigurationError, InsufficientSamplesError, SingularFitError
from .frechet import (RESAMPLE_MODES, GaussianStats, as_features, frechet_distance,
                      gaussian_stats, subsample_rows)
from .inception import _score, as_posteriors

__all__ = [
    "SCHEMES",
    "ScoreSeries",
    "ExtrapolationFit",
    "InfinityConfig",
    "InfinityResult",
    "batch_schedule",
    "fit_inverse_n",
    "score_infinity",
]

SCHEMES = ("regular_in_n", "regular_in_inv_n")
MIN_R_SQUARED = 0.5


@dataclass(frozen=True)
class ScoreSeries:
    n: np.ndarray
    scores: np.ndarray
    metric: str = "fid"

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64).reshape(-1)
        s = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if n.shape != s.shape:
            raise ConfigurationError("n and scores must have the same length")
        if np.any(np.diff(n) <= 0):
            raise ConfigurationError("n values must be strictly increasing")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "scores", s)

    def pairs(self) -> list[list[float]]:
        return [[int(a), float(b)] for a, b in zip(self.n, self.scores)]


@dataclass(frozen=True)
class ExtrapolationFit:
    intercept: float
    slope: float
    r_squared: float
    residual_std: float
    intercept_se: float
    slope_se: float
    scheme: str = "regular_in_n"
    weighted: bool = False


@dataclass(frozen=True)
class InfinityConfig:
    """Knobs of the extrapolation procedure.

    ``batch_sizes`` overrides the generated schedule when given. ``sampler``
    only matters to callers that generate the pool themselves.
    """

    pool_size: int = 50_000
    num_points: int = 15
    min_batch: int = 5_000
    scheme: str = "regular_in_n"
    replicates: int = 1
    weighted: bool = False
    resample: str = "without-replacement"
    sampler: str = "sobol_inv"
    batch_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.resample not in RESAMPLE_MODES:
            raise ConfigurationError(f"unknown resample mode {self.resample!r}")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.batch_sizes is None:
            if self.num_points < 3:
                raise ConfigurationError("num_points must be >= 3")
            if not 2 <= self.min_batch < self.pool_size:
                raise ConfigurationError(
                    f"need 2 <= min_batch < pool_size, got {self.min_batch} and {self.pool_size}")


def batch_schedule(config: InfinityConfig) -> np.ndarray:
    """Batch sizes at which the score is evaluated, ascending and distinct."""
    if config.batch_sizes is not None:
        sizes = np.unique(np.asarray(config.batch_sizes, dtype=np.int64))
        if sizes.size < 3 or sizes[0] < 2 or sizes[-1] > config.pool_size:
            raise ConfigurationError("explicit batch_sizes need >= 3 distinct values in [2, pool_size]")
        return sizes
    lo, hi, t = config.min_batch, config.pool_size, config.num_points
    if config.scheme == "regular_in_n":
        raw = np.linspace(lo, hi, t)
    else:
        raw = 1.0 / np.linspace(1.0 / lo, 1.0 / hi, t)
    sizes = np.unique(np.rint(raw).astype(np.int64))
    if sizes.size < 3:
        raise ConfigurationError(f"schedule collapses to {sizes.size} distinct batch sizes")
    return sizes


def fit_inverse_n(series: ScoreSeries, weighted: bool = False,
                  scheme: str = "regular_in_n") -> ExtrapolationFit:
    """Least-squares line of score on 1/n; the intercept is the N = inf score.

    ``weighted=True`` uses weights proportional to n, matching a score
    variance that falls like 1/n. When every score is identical the
    coefficient of determination is reported as 1 by convention.
    """
    n = series.n.astype(np.float64)
    y = series.scores
    m = n.size
    if m < 3:
        raise SingularFitError(f"need at least 3 points to fit, got {m}")
    x = 1.0 / n
    w = n / n.sum() if weighted else np.full(m, 1.0 / m)
    xm, ym = w @ x, w @ y
    sxx = w @ (x - xm) ** 2
    if sxx <= 0.0 or not np.isfinite(sxx):
        raise SingularFitError("all 1/n values are equal; the slope is undetermined")
    slope = (w @ ((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = w @ resid**2
    ss_tot = w @ (y - ym) ** 2
    r2 = 1.0 if ss_tot == 0.0 else float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))
    # w sums to 1, so sigma^2 is the residual variance on the weight scale
    sigma2 = ss_res * m / (m - 2)
    slope_se = np.sqrt(sigma2 / (m * sxx))
    intercept_se = np.sqrt(sigma2 / m * (1.0 + xm**2 / sxx))
    return ExtrapolationFit(
        intercept=float(intercept), slope=float(slope), r_squared=r2,
        residual_std=float(np.sqrt(resid @ resid / (m - 2))),
        intercept_se=float(intercept_se), slope_se=float(slope_se),
        scheme=scheme, weighted=weighted,
    )


@dataclass
class InfinityResult:
    metric: str
    config: InfinityConfig
    run_seed: int
    fits: list[ExtrapolationFit]
    series: list[ScoreSeries] = field(repr=False)
    warnings: list[str] = field(default_factory=list)

    @property
    def fit(self) -> ExtrapolationFit:
        return self.fits[0]

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([f.intercept for f in self.fits])

    @property
    def replicate_mean(self) -> float:
        return float(self.intercepts.mean())

    @property
    def replicate_std(self) -> float:
        return float(self.intercepts.std(ddof=1)) if len(self.fits) > 1 else 0.0

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        if cfg["batch_sizes"] is not None:
            cfg["batch_sizes"] = [int(v) for v in cfg["batch_sizes"]]
        return {
            "schema": 1,
            "metric": self.metric,
            "intercept": self.fit.intercept,
            "slope": self.fit.slope,
            "r_squared": self.fit.r_squared,
            "residual_std": self.fit.residual_std,
            "series": self.series[0].pairs(),
            "replicate_intercepts": [float(v) for v in self.intercepts],
            "replicate_slopes": [f.slope for f in self.fits],
            "replicate_mean": self.replicate_mean,
            "replicate_std": self.replicate_std,
            "run_seed": int(self.run_seed),
            "config": cfg,
            "warnings": list(self.warnings),
        }


def _metric_fn(data, ref: GaussianStats | None, jitter: float) -> tuple[str, np.ndarray, Callable]:
    if ref is None:
        return "is", as_posteriors(data), _score
    return "fid", as_features(data), lambda rows: frechet_distance(gaussian_stats(rows), ref, jitter)


def score_infinity(data, ref: GaussianStats | None = None, config: InfinityConfig | None = None,
                   run_seed: int = 0, jitter: float = 0.0) -> InfinityResult:
    """Extrapolated FID (``ref`` given) or IS (``ref`` None) of a sample pool.

    For each batch size the pool is reshuffled and the score is computed on
    the leading rows; replicate ``r`` draws its shuffles from
    ``derive_seed(run_seed, r)``.
    """
    config = config or InfinityConfig()
    metric, pool, score = _metric_fn(data, ref, jitter)
    if pool.shape[0] < config.pool_size:
        raise InsufficientSamplesError(
            f"pool has {pool.shape[0]} rows but pool_size is {config.pool_size}")
    pool = pool[: config.pool_size]
    sizes = batch_schedule(config)

    def replicate(r: int) -> tuple[ExtrapolationFit, ScoreSeries]:
        rng = rng_for(run_seed, r)
        scores = [score(pool[subsample_rows(pool.shape[0], int(n), rng, config.resample)]) for n in sizes]
        series = ScoreSeries(sizes, scores, metric)
        return fit_inverse_n(series, config.weighted, config.scheme), series

    done = parallel_map(replicate, range(config.replicates))
    fits = [f for f, _ in done]
    warnings = [f"replicate {i}: r_squared {f.r_squared:.3f} below {MIN_R_SQUARED}"
                for i, f in enumerate(fits) if f.r_squared < MIN_R_SQUARED]
    return InfinityResult(metric, config, run_seed, fits, [s for _, s in done], warnings)
