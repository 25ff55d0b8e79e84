"""Binary matrix (FMAT) and Gaussian statistics (GSTA) files, plus CSV input.

FMAT layout, little-endian::

    b"FMAT" | u32 version=1 | u64 rows | u64 cols | u8 dtype (0=f32, 1=f64) | payload

GSTA layout, little-endian::

    b"GSTA" | u32 version=1 | u64 dim | dim f64 mean | dim*dim f64 cov (row-major) | u64 n_source
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .frechet import GaussianStats

__all__ = [
    "save_features",
    "load_features",
    "save_stats",
    "load_stats",
    "load_csv",
    "load_matrix",
    "load_posteriors",
]

VERSION = 1
_FMAT_HEADER = struct.Struct("<4sIQQB")
_GSTA_HEADER = struct.Struct("<4sIQ")
_U64 = struct.Struct("<Q")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
SYMMETRY_TOL = 1e-10


def _check_finite(arr: np.ndarray, path) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(f"{path}: non-finite value at row {r}, col {c}")


def save_features(path, data, dtype: str = "f64") -> None:
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise FormatError(f"FMAT stores 2-D matrices, got ndim={arr.ndim}")
    dt = np.dtype("<f4") if dtype == "f32" else np.dtype("<f8")
    arr = np.ascontiguousarray(arr, dtype=dt)
    with open(path, "wb") as fh:
        fh.write(_FMAT_HEADER.pack(b"FMAT", VERSION, arr.shape[0], arr.shape[1], _CODES[dt]))
        fh.write(arr.tobytes(order="C"))


def load_features(path, promote: bool = True) -> np.ndarray:
    """Read an FMAT file; f32 payloads are promoted to f64 unless ``promote`` is False."""
    raw = Path(path).read_bytes()
    if len(raw) < _FMAT_HEADER.size:
        raise FormatError(f"{path}: file too short for an FMAT header ({len(raw)} bytes)")
    magic, version, rows, cols, code = _FMAT_HEADER.unpack_from(raw)
    if magic != b"FMAT":
        raise FormatError(f"{path}: bad magic {magic!r}, expected b'FMAT'")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported FMAT version {version}")
    if code not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    dt = _DTYPES[code]
    expected = rows * cols * dt.itemsize
    actual = len(raw) - _FMAT_HEADER.size
    if actual != expected:
        raise FormatError(f"{path}: payload is {actual} bytes, expected {expected} ({rows}x{cols} {dt.name})")
    arr = np.frombuffer(raw, dtype=dt, offset=_FMAT_HEADER.size).reshape(rows, cols)
    _check_finite(arr, path)
    return arr.astype(np.float64) if promote else arr.copy()


def save_stats(path, stats: GaussianStats) -> None:
    with open(path, "wb") as fh:
        fh.write(_GSTA_HEADER.pack(b"GSTA", VERSION, stats.dim))
        fh.write(np.ascontiguousarray(stats.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(stats.cov, dtype="<f8").tobytes(order="C"))
        fh.write(_U64.pack(int(stats.n_source)))


def load_stats(path) -> GaussianStats:
    raw = Path(path).read_bytes()
    if len(raw) < _GSTA_HEADER.size:
        raise FormatError(f"{path}: file too short for a GSTA header ({len(raw)} bytes)")
    magic, version, dim = _GSTA_HEADER.unpack_from(raw)
    if magic != b"GSTA":
        raise FormatError(f"{path}: bad magic {magic!r}, expected b'GSTA'")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GSTA version {version}")
    expected = _GSTA_HEADER.size + 8 * (dim + dim * dim) + _U64.size
    if len(raw) != expected:
        raise FormatError(f"{path}: file is {len(raw)} bytes, expected {expected} for dim {dim}")
    off = _GSTA_HEADER.size
    mean = np.frombuffer(raw, dtype="<f8", count=dim, offset=off).astype(np.float64)
    cov = np.frombuffer(raw, dtype="<f8", count=dim * dim, offset=off + 8 * dim).reshape(dim, dim).astype(np.float64)
    (n_source,) = _U64.unpack_from(raw, expected - _U64.size)
    _check_finite(mean[None, :], path)
    _check_finite(cov, path)
    scale = max(float(np.max(np.abs(cov))), 1e-300) if dim else 1.0
    if dim and np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
        raise DataError(f"{path}: covariance is not symmetric")
    return GaussianStats(mean, cov, int(n_source))


def load_csv(path) -> np.ndarray:
    """Numeric CSV; a first line that does not parse as numbers is treated as a header."""
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not f.strip() for f in record):
                continue
            try:
                values = [float(f) for f in record]
            except ValueError:
                if lineno == 1:
                    continue
                raise FormatError(f"{path}:{lineno}: non-numeric field") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FormatError(f"{path}:{lineno}: expected {width} fields, got {len(values)}")
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no numeric rows")
    arr = np.array(rows, dtype=np.float64)
    _check_finite(arr, path)
    return arr


def load_matrix(path) -> np.ndarray:
    """FMAT if the file starts with the FMAT magic, CSV otherwise."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return load_features(path) if head == b"FMAT" else load_csv(path)


def load_posteriors(path) -> np.ndarray:
    return load_matrix(path)
