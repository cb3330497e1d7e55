"""Electronic coefficient fields and adiabatic potential surfaces.

In the single-excitation subspace the electronic Hamiltonian at a point
q = (qx, qz) of the relative coordinate is

    H_el(q) = confinement(q) * 1 + coupling(q) * sigma_x + tuning(q) * sigma_z

with basis states pi1 = (up, down) and pi2 = (down, up).  ``confinement`` is
the shared harmonic energy, ``coupling`` the excitation-exchange energy
(linear in qz), and ``tuning`` the differential-polarizability energy
(linear in qx).  The adiabatic surfaces are confinement +- sqrt(coupling^2
+ tuning^2); they touch where coupling and tuning both vanish, which is the
conical intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConicalIntersectionError
from .grid import Grid2D
from .params import InternalModel


@dataclass(frozen=True)
class CoefficientFields:
    """The three scalar fields of H_el on a grid, internal energy units."""

    confinement: np.ndarray = field(repr=False)   # (nx, nz)
    coupling: np.ndarray = field(repr=False)      # (nx, nz)
    tuning: np.ndarray = field(repr=False)        # (nx, nz)


@dataclass(frozen=True)
class AdiabaticSurfaces:
    upper: np.ndarray = field(repr=False)   # (nx, nz)
    lower: np.ndarray = field(repr=False)   # (nx, nz)
    ci_qx: float = 0.0
    ci_qz: float = 0.0


def eval_coefficients(model: InternalModel, grid: Grid2D) -> CoefficientFields:
    """Evaluate the three coefficient fields on the grid."""
    qx, qz = grid.meshes()
    conf = 0.5 * model.mass * (model.omega_x**2 * qx**2
                               + model.omega_z**2 * qz**2)
    coup = model.coupling0 + model.coupling_slope * qz
    tune = model.tuning_slope * qx
    return CoefficientFields(confinement=conf, coupling=coup, tuning=tune)


def ci_location(model: InternalModel) -> tuple[float, float]:
    """Coordinates (qx*, qz*) where both off-diagonal fields vanish.

    The tuning field is proportional to qx, so qx* = 0; the coupling field
    vanishes at qz* = -coupling0 / coupling_slope.  Without an axial
    exchange gradient there is no finite degeneracy point.
    """
    if model.coupling_slope == 0.0:
        raise NoConicalIntersectionError(
            "exchange gradient is zero; the surfaces never touch at finite qz")
    return 0.0, -model.coupling0 / model.coupling_slope


def eval_surfaces(model: InternalModel, grid: Grid2D,
                  coeffs: CoefficientFields | None = None) -> AdiabaticSurfaces:
    """Adiabatic surfaces on the grid plus the analytic degeneracy point."""
    c = coeffs or eval_coefficients(model, grid)
    gap = np.hypot(c.coupling, c.tuning)
    qx_star, qz_star = ci_location(model)
    return AdiabaticSurfaces(upper=c.confinement + gap,
                             lower=c.confinement - gap,
                             ci_qx=qx_star, ci_qz=qz_star)


def surface_gap_at(model: InternalModel, qx: float, qz: float) -> float:
    """Energy gap upper - lower evaluated analytically at one point."""
    coup = model.coupling0 + model.coupling_slope * qz
    tune = model.tuning_slope * qx
    return 2.0 * float(np.hypot(coup, tune))


def mixing_angle(coeffs: CoefficientFields) -> tuple[np.ndarray, np.ndarray]:
    """Half the polar angle of (tuning, coupling), and a degeneracy mask.

    The angle is 0.5 * atan2(coupling, tuning), which lies in
    (-pi/2, pi/2].  Where both fields vanish the angle is undefined; those
    points are returned as 0 with the mask set.
    """
    degenerate = (coeffs.coupling == 0.0) & (coeffs.tuning == 0.0)
    angle = 0.5 * np.arctan2(coeffs.coupling, coeffs.tuning)
    angle = np.where(degenerate, 0.0, angle)
    return angle, degenerate


@dataclass(frozen=True)
class AdiabaticBasis:
    """Pointwise eigenvectors of H_el in the (pi1, pi2) basis.

    ``upper`` and ``lower`` have shape (2, nx, nz); the leading axis is the
    spin component.  Both are real with the first nonzero component of the
    upper state non-negative by the angle convention.
    """

    upper: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    degenerate: np.ndarray = field(repr=False)


def adiabatic_states(coeffs: CoefficientFields) -> AdiabaticBasis:
    angle, degenerate = mixing_angle(coeffs)
    c, s = np.cos(angle), np.sin(angle)
    upper = np.stack([c, s])
    lower = np.stack([-s, c])
    return AdiabaticBasis(upper=upper, lower=lower, degenerate=degenerate)
