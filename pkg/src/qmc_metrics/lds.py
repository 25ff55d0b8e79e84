"""Point sets in the unit hypercube: seeded IID uniforms and (scrambled) Sobol.

Both generators return coordinates on a dyadic lattice shifted by half a
cell, so every coordinate lies strictly inside (0, 1):

* Sobol points are 32-bit integers ``k`` mapped to ``(k + 1/2) / 2**32``.
* IID points take the top 52 bits ``k`` of a raw PCG64 output and map them
  to ``(k + 1/2) / 2**52``.

The half-cell shift is smaller than the finest stratum the net property is
ever checked on (``2**-32``), so it never moves a point across a dyadic
interval boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConfigurationError, UnsupportedDimensionError

__all__ = [
    "MAX_SOBOL_DIMENSION",
    "SamplerSpec",
    "UnitPointSet",
    "sobol_integers",
    "sobol_points",
    "uniform_points",
    "unit_points",
    "centered_l2_discrepancy",
]

BITS = 32
MAX_INDEX = 2**BITS
KINDS = ("iid_uniform", "sobol")


@lru_cache(maxsize=1)
def _joe_kuo() -> tuple[np.ndarray, np.ndarray]:
    with resources.files(__package__).joinpath("data/joe_kuo_directions.npz").open("rb") as fh:
        table = np.load(fh)
        return table["poly"].astype(np.int64), table["vinit"].astype(np.int64)


MAX_SOBOL_DIMENSION = 21201


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    dimension: int
    seed: int = 0
    scrambled: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if int(self.dimension) < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.dimension}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class UnitPointSet:
    points: np.ndarray = field(repr=False)
    spec: SamplerSpec
    start_index: int

    def __len__(self) -> int:
        return self.points.shape[0]


@lru_cache(maxsize=8)
def direction_numbers(dimension: int) -> np.ndarray:
    """Joe-Kuo direction numbers as a ``(dimension, 32)`` uint32 array.

    Column ``k`` holds ``m_{k+1} * 2**(31 - k)``, i.e. the direction number
    ``v_{k+1}`` scaled to a 32-bit integer. The first dimension is the
    van der Corput sequence (all ``m_k = 1``).
    """
    if dimension > MAX_SOBOL_DIMENSION:
        raise UnsupportedDimensionError(
            f"Sobol dimension {dimension} exceeds the direction-number table "
            f"(max {MAX_SOBOL_DIMENSION})"
        )
    poly, vinit = _joe_kuo()
    m = np.ones((dimension, BITS), dtype=np.int64)
    for j in range(1, dimension):
        p = int(poly[j])
        s = p.bit_length() - 1
        m[j, :s] = vinit[j, :s]
        for k in range(s, BITS):
            new = m[j, k - s] ^ (m[j, k - s] << s)
            for i in range(1, s):
                if (p >> (s - i)) & 1:
                    new ^= m[j, k - i] << i
            m[j, k] = new
    shifts = np.arange(BITS - 1, -1, -1, dtype=np.int64)
    return (m << shifts).astype(np.uint32)


def _scramble(v: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random linear matrix scramble plus digital shift.

    Each dimension gets a random lower-triangular GF(2) matrix with unit
    diagonal acting on the binary digits (most significant first). Lower
    triangular means output digit ``i`` depends only on input digits
    ``0..i``, which keeps every dyadic stratification intact.
    """
    d = v.shape[0]
    rng = np.random.Generator(np.random.PCG64(seed))
    lower = np.tril(rng.integers(0, 2, size=(d, BITS, BITS), dtype=np.uint64), k=-1)
    lower[:, np.arange(BITS), np.arange(BITS)] = 1
    weights = np.uint64(1) << np.arange(BITS - 1, -1, -1, dtype=np.uint64)
    row_masks = (lower * weights).sum(axis=2, dtype=np.uint64)  # (d, i)
    hits = v.astype(np.uint64)[:, :, None] & row_masks[:, None, :]  # (d, k, i)
    parity = np.bitwise_count(hits) & np.uint64(1)
    scrambled = (parity * weights).sum(axis=2, dtype=np.uint64).astype(np.uint32)
    shift = rng.integers(0, MAX_INDEX, size=d, dtype=np.uint64).astype(np.uint32)
    return scrambled, shift


def sobol_integers(spec: SamplerSpec, start_index: int, n: int) -> np.ndarray:
    """Sobol points ``start_index .. start_index + n - 1`` as a uint32 lattice.

    Gray-code order: point ``i`` is the XOR of the direction numbers selected
    by the set bits of ``i ^ (i >> 1)``.
    """
    if spec.kind != "sobol":
        raise ConfigurationError(f"sobol_integers needs a sobol spec, got {spec.kind!r}")
    if n < 0 or start_index < 0:
        raise ConfigurationError("start_index and n must be non-negative")
    if start_index + n > MAX_INDEX:
        raise ConfigurationError(f"point indices beyond 2**{BITS} are not supported")
    v = direction_numbers(spec.dimension)
    if spec.scrambled:
        v, shift = _scramble(v, spec.seed)
    else:
        shift = np.zeros(spec.dimension, dtype=np.uint32)
    out = np.empty((n, spec.dimension), dtype=np.uint32)
    out[:] = shift
    if n == 0:
        return out
    idx = np.arange(start_index, start_index + n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    for b in range(int(gray.max()).bit_length()):
        sel = ((gray >> np.uint64(b)) & np.uint64(1)).astype(bool)
        np.bitwise_xor(out, v[:, b], out=out, where=sel[:, None])
    return out


def sobol_points(spec: SamplerSpec, start_index: int = 1, n: int = 0) -> UnitPointSet:
    """Sobol points mapped into (0, 1).

    ``start_index`` defaults to 1 because index 0 of the unscrambled
    sequence is the origin.
    """
    lattice = sobol_integers(spec, start_index, n)
    points = (lattice.astype(np.float64) + 0.5) * 2.0**-BITS
    return UnitPointSet(points, spec, start_index)


def uniform_points(spec: SamplerSpec, n: int, start_index: int = 0) -> UnitPointSet:
    """IID uniforms from PCG64 seeded with ``spec.seed``.

    Row ``i`` always consumes raw outputs ``i*d .. i*d + d - 1`` of the
    stream, so any row range can be regenerated on its own.
    """
    if spec.kind != "iid_uniform":
        raise ConfigurationError(f"uniform_points needs an iid_uniform spec, got {spec.kind!r}")
    if n < 0 or start_index < 0:
        raise ConfigurationError("start_index and n must be non-negative")
    d = spec.dimension
    bitgen = np.random.PCG64(spec.seed)
    if start_index:
        bitgen.advance(start_index * d)
    raw = bitgen.random_raw(n * d) if n else np.empty(0, dtype=np.uint64)
    raw = np.asarray(raw, dtype=np.uint64)
    points = ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52
    return UnitPointSet(points.reshape(n, d), spec, start_index)


def unit_points(spec: SamplerSpec, start_index: int | None = None, n: int = 0) -> UnitPointSet:
    """Dispatch on ``spec.kind``; ``start_index=None`` picks the kind's default."""
    if spec.kind == "sobol":
        return sobol_points(spec, 1 if start_index is None else start_index, n)
    return uniform_points(spec, n, 0 if start_index is None else start_index)


def centered_l2_discrepancy(points, block: int = 512) -> float:
    """Centered L2 discrepancy (Hickernell) from its closed double-sum form.

    Returns the discrepancy itself, i.e. the square root of the usual
    ``CD^2`` expression. Cost is O(N^2 d); rows are processed in blocks.
    """
    x = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ConfigurationError("need an (N, d) array with N >= 1")
    n, d = x.shape
    a = np.abs(x - 0.5)
    single = np.prod(1.0 + 0.5 * a - 0.5 * a**2, axis=1).sum()
    pair = 0.0
    for lo in range(0, n, block):
        xb, ab = x[lo:lo + block], a[lo:lo + block]
        acc = np.ones((xb.shape[0], n))
        for k in range(d):
            acc *= 1.0 + 0.5 * ab[:, k, None] + 0.5 * a[None, :, k] - 0.5 * np.abs(xb[:, k, None] - x[None, :, k])
        pair += acc.sum()
    sq = (13.0 / 12.0) ** d - 2.0 * single / n + pair / n**2
    return float(np.sqrt(max(sq, 0.0)))
