"""Periodic 2D coordinate grid for the relative motion.

Coordinates are internal length units (nanometres under the default unit
system).  The grid is endpoint-exclusive: qx[i] = qx_min + i*dx, so the
domain is periodic with period qx_max - qx_min and the FFT wavenumbers
2*pi*fftfreq(n, d) are exact for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    nx: int
    nz: int
    qx_min: float
    qx_max: float
    qz_min: float
    qz_max: float
    qx: np.ndarray = field(repr=False)
    qz: np.ndarray = field(repr=False)
    kx: np.ndarray = field(repr=False)
    kz: np.ndarray = field(repr=False)

    @property
    def dx(self) -> float:
        return (self.qx_max - self.qx_min) / self.nx

    @property
    def dz(self) -> float:
        return (self.qz_max - self.qz_min) / self.nz

    @property
    def cell(self) -> float:
        """Quadrature weight dx*dz of one grid cell."""
        return self.dx * self.dz

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """(nx, nz) coordinate arrays, qx varying along axis 0."""
        return np.meshgrid(self.qx, self.qz, indexing="ij")


def make_grid(nx: int, nz: int,
              qx_min: float, qx_max: float,
              qz_min: float, qz_max: float) -> Grid2D:
    """Build a periodic grid; point counts must be powers of two >= 16."""
    for name, n in (("nx", nx), ("nz", nz)):
        if not _is_pow2(n) or n < 16:
            raise ConfigError(f"{name} must be a power of two >= 16, got {n}")
    if not (qx_max > qx_min and qz_max > qz_min):
        raise ConfigError("grid extents must have positive length")
    dx = (qx_max - qx_min) / nx
    dz = (qz_max - qz_min) / nz
    qx = qx_min + dx * np.arange(nx)
    qz = qz_min + dz * np.arange(nz)
    kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=dx)
    kz = 2.0 * np.pi * np.fft.fftfreq(nz, d=dz)
    return Grid2D(nx=nx, nz=nz, qx_min=qx_min, qx_max=qx_max,
                  qz_min=qz_min, qz_max=qz_max,
                  qx=qx, qz=qz, kx=kx, kz=kz)
