"""Densities, expectation values, populations, and trajectory summaries."""

from __future__ import annotations

import numpy as np

from .propagator import SpinorField
from .surfaces import AdiabaticBasis, CoefficientFields, adiabatic_states


def density(psi: SpinorField) -> np.ndarray:
    """Position density summed over electronic components, (nx, nz)."""
    d = psi.data
    return (d.real**2 + d.imag**2).sum(axis=0)


def expectation_qx(psi: SpinorField) -> float:
    rho = density(psi)
    w = rho.sum()
    return float((rho.sum(axis=1) * psi.grid.qx).sum() / w)


def expectation_qz(psi: SpinorField) -> float:
    rho = density(psi)
    w = rho.sum()
    return float((rho.sum(axis=0) * psi.grid.qz).sum() / w)


def momentum_norm2(psi: SpinorField) -> float:
    """Norm computed in Fourier space; equals norm2 by Parseval."""
    ft = np.fft.fft2(psi.data, axes=(-2, -1))
    n = psi.grid.nx * psi.grid.nz
    return float(np.vdot(ft, ft).real) * psi.grid.cell / n


def adiabatic_populations(psi: SpinorField,
                          coeffs: CoefficientFields | None = None,
                          basis: AdiabaticBasis | None = None) -> tuple[float, float]:
    """(upper, lower) surface populations of a two-component state."""
    if psi.ncomp != 2:
        raise ValueError("adiabatic populations need a two-component state")
    if basis is None:
        if coeffs is None:
            raise ValueError("pass either coeffs or a precomputed basis")
        basis = adiabatic_states(coeffs)
    cell = psi.grid.cell
    up = basis.upper[0] * psi.data[0] + basis.upper[1] * psi.data[1]
    lo = basis.lower[0] * psi.data[0] + basis.lower[1] * psi.data[1]
    p_up = float(np.vdot(up, up).real) * cell
    p_lo = float(np.vdot(lo, lo).real) * cell
    return p_up, p_lo


def crossing_count(qx_trace: np.ndarray, ci_qx: float, band: float = 0.5) -> int:
    """Number of sign changes of <qx> - ci_qx with a hysteresis band.

    A crossing is counted only when the trace moves from beyond one side of
    the +-band to beyond the other, so grazes and noise inside the band do
    not count.  The first classification arms the detector without counting.
    """
    count = 0
    side = 0
    for x in np.asarray(qx_trace, dtype=float) - ci_qx:
        if x > band:
            if side == -1:
                count += 1
            side = 1
        elif x < -band:
            if side == 1:
                count += 1
            side = -1
    return count
