"""Uniform-to-normal transforms and the samplers built on them.

Three named samplers are used throughout the package:

============  ==============  ===========
name          point source    transform
============  ==============  ===========
normal        iid_uniform     icdf
sobol_inv     sobol           icdf
sobol_bm      sobol           box_muller
============  ==============  ===========
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import rng_for
from .errors import ConfigurationError, DomainError, ShapeError
from .lds import SamplerSpec, unit_points

__all__ = [
    "SAMPLERS",
    "TRANSFORMS",
    "NormalPointSet",
    "NormalSampler",
    "CachedSamplerState",
    "icdf_normal",
    "box_muller",
    "box_muller_points",
    "normal_points",
    "sampler_spec",
    "cached_draw",
]

TRANSFORMS = ("icdf", "box_muller")
SAMPLERS = {
    "normal": ("iid_uniform", "icdf"),
    "sobol_inv": ("sobol", "icdf"),
    "sobol_bm": ("sobol", "box_muller"),
}

# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _ratio(num, den, x):
    # Horner, highest degree coefficient last in the tuples
    p = np.full_like(x, num[-1])
    q = np.full_like(x, den[-1])
    for a, b in zip(num[-2::-1], den[-2::-1]):
        p = p * x + a
        q = q * x + b
    return p / q


def icdf_normal(u):
    """Standard normal quantile, AS 241 (about 1e-16 relative accuracy).

    Accepts a scalar or array of probabilities strictly inside (0, 1); a
    scalar input returns a Python float.
    """
    arr = np.asarray(u, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("icdf_normal needs 0 < u < 1 for every input")
    q = arr - 0.5
    out = np.empty_like(arr)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        out[central] = qc * _ratio(_A, _B, 0.180625 - qc * qc)
    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.where(qt < 0, arr[tail], 1.0 - arr[tail])
        r = np.sqrt(-np.log(r))
        z = np.where(r <= 5.0, _ratio(_C, _D, r - 1.6), _ratio(_E, _F, r - 5.0))
        out[tail] = np.where(qt < 0, -z, z)
    if out.ndim == 0:
        return float(out)
    return out


def box_muller(u_even, u_odd):
    """Box-Muller pair: radius from ``u_even``, angle from ``u_odd``.

    ``z0 = sqrt(-2 ln u_even) cos(2 pi u_odd)`` and ``z1`` uses ``sin``.
    """
    ue = np.asarray(u_even, dtype=np.float64)
    uo = np.asarray(u_odd, dtype=np.float64)
    if not np.all((ue > 0.0) & (ue <= 1.0)):
        raise DomainError("box_muller needs 0 < u_even <= 1")
    if not np.all((uo >= 0.0) & (uo < 1.0)):
        raise DomainError("box_muller needs 0 <= u_odd < 1")
    radius = np.sqrt(-2.0 * np.log(ue))
    angle = 2.0 * np.pi * uo
    z0, z1 = radius * np.cos(angle), radius * np.sin(angle)
    if z0.ndim == 0:
        return float(z0), float(z1)
    return z0, z1


def box_muller_points(u: np.ndarray) -> np.ndarray:
    """Columns ``2k`` (radius) and ``2k+1`` (angle) map to output columns ``2k, 2k+1``."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] % 2:
        raise ShapeError(f"Box-Muller needs an even number of columns, got shape {u.shape}")
    z = np.empty_like(u)
    z[:, 0::2], z[:, 1::2] = box_muller(u[:, 0::2], u[:, 1::2]) if u.size else (u[:, 0::2], u[:, 1::2])
    return z


@dataclass(frozen=True)
class NormalPointSet:
    points: np.ndarray = field(repr=False)
    transform: str
    source_spec: SamplerSpec
    start_index: int

    def __len__(self) -> int:
        return self.points.shape[0]


def normal_points(spec: SamplerSpec, transform: str = "icdf", start_index: int | None = None,
                  n: int = 0) -> NormalPointSet:
    """Standard normal points from ``spec`` via ``transform``.

    With ``spec.kind == "iid_uniform"`` and ``transform == "icdf"`` this is
    the plain Monte Carlo baseline.
    """
    if transform not in TRANSFORMS:
        raise ConfigurationError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    if transform == "box_muller" and spec.dimension % 2:
        raise ShapeError(f"Box-Muller needs an even dimension, got {spec.dimension}")
    unit = unit_points(spec, start_index, n)
    if transform == "icdf":
        z = icdf_normal(unit.points) if n else unit.points.copy()
    else:
        z = box_muller_points(unit.points)
    return NormalPointSet(z, transform, spec, unit.start_index)


def sampler_spec(name: str, dimension: int, seed: int = 0) -> tuple[SamplerSpec, str]:
    """Resolve a named sampler (see module docstring) to ``(spec, transform)``."""
    try:
        kind, transform = SAMPLERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}") from None
    return SamplerSpec(kind, dimension, seed, scrambled=True), transform


class NormalSampler:
    """Stateful stream of normal points; each ``draw`` continues the index.

    Single-owner: not safe to share between threads without a lock.
    """

    def __init__(self, spec: SamplerSpec, transform: str = "icdf", start_index: int | None = None):
        self.spec = spec
        self.transform = transform
        self.cursor = (1 if spec.kind == "sobol" else 0) if start_index is None else start_index

    def draw(self, n: int) -> np.ndarray:
        pts = normal_points(self.spec, self.transform, self.cursor, n).points
        self.cursor += n
        return pts


@dataclass
class CachedSamplerState:
    """Pool of pre-generated normal points handed out in shuffled order.

    Refills happen only when fewer than ``batch`` rows remain; leftover rows
    are then discarded and a fresh block of ``cache_capacity`` points is
    generated from where the previous block ended.
    """

    spec: SamplerSpec
    transform: str = "icdf"
    cache_capacity: int = 10**6
    shuffle_seed: int = 0
    refill_count: int = 0
    next_index: int | None = None
    cache: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.cache_capacity < 1:
            raise ConfigurationError("cache_capacity must be >= 1")
        if self.next_index is None:
            self.next_index = 1 if self.spec.kind == "sobol" else 0
        if self.cache is None:
            self.cache = np.empty((0, self.spec.dimension))

    @property
    def remaining(self) -> int:
        return self.cache.shape[0]


def _refill(state: CachedSamplerState) -> None:
    block = normal_points(state.spec, state.transform, state.next_index, state.cache_capacity).points
    state.next_index += state.cache_capacity
    order = rng_for(state.shuffle_seed, state.refill_count).permutation(state.cache_capacity)
    state.cache = block[order]
    state.refill_count += 1


def cached_draw(state: CachedSamplerState, batch: int) -> NormalPointSet:
    """Take the next ``batch`` rows from the shuffled cache (without replacement)."""
    if batch < 1:
        raise ConfigurationError("batch must be >= 1")
    if batch > state.cache_capacity:
        raise ConfigurationError(f"batch {batch} exceeds cache_capacity {state.cache_capacity}")
    if state.remaining < batch:
        _refill(state)
    out, state.cache = state.cache[:batch], state.cache[batch:]
    return NormalPointSet(out, state.transform, state.spec, -1)
