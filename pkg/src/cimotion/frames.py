"""Density frame files: raw float64 grids with a fixed 32-byte header.

Layout (little endian):
    bytes 0..7    magic b"CIMDENS1"
    bytes 8..11   uint32 nx
    bytes 12..15  uint32 nz
    bytes 16..23  float64 simulation time of the frame [us]
    bytes 24..31  reserved, zero
    bytes 32..    nx*nz float64 values, row major with qx as the row index

Each run directory keeps its frames next to an index.csv listing
(filename, t_us, nx, nz).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CIMDENS1"
_HEADER = struct.Struct("<8sII d 8x")

assert _HEADER.size == 32


def write_frame(path: str | Path, rho: np.ndarray, t_us: float) -> None:
    rho = np.ascontiguousarray(rho, dtype="<f8")
    if rho.ndim != 2:
        raise ValueError("density frame must be 2D")
    nx, nz = rho.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, nz, float(t_us)))
        fh.write(rho.tobytes(order="C"))


def read_frame(path: str | Path) -> tuple[np.ndarray, float]:
    """Returns (density (nx, nz), frame time in us)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated frame header")
    magic, nx, nz, t_us = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != nx * nz:
        raise ValueError(f"{path}: expected {nx * nz} values, got {body.size}")
    return body.reshape(nx, nz).copy(), t_us
