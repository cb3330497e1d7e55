"""Split-operator propagation of the ion-pair wavepacket.

The state is a two-component field psi(qx, qz) on a periodic grid (one
component in Born-Oppenheimer mode).  A time step dt is the symmetric
Strang splitting

    exp(-i K dt/2) * exp(-i V(u) dt) * exp(-i K dt/2)

with K the kinetic energy applied in Fourier space and V(u) the full
position-diagonal potential: the electronic 2x2 part plus the control
drive e*u*(com_shift - qx/2).  The control sample u is the value at the
step midpoint.  The electronic exponential is evaluated in closed form:
for a traceless 2x2 part c*sigma_x + t*sigma_z with gap parameter
om = sqrt(c^2 + t^2),

    exp(-i dt (c sx + t sz)) = cos(om dt) I - i sin(om dt)/om (c sx + t sz)

which is exactly unitary, so norm conservation is limited only by FFT
round-off.  Inverse steps use the conjugate phases, making backward
propagation the exact inverse of forward up to round-off.

Consecutive half kinetic steps between potential applications are merged
into full steps; boundary states are materialised only where a recording
callback needs them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .errors import ConfigError, NumericalBlowupError
from .grid import Grid2D
from .params import InternalModel
from .surfaces import CoefficientFields

_AUDIT_EVERY = 100   # NaN screen cadence in steps


@dataclass
class SpinorField:
    """Wavepacket on a grid: data shape (ncomp, nx, nz), complex128.

    ncomp is 2 for the electronic two-level problem (component 0 is pi1,
    component 1 is pi2) and 1 in Born-Oppenheimer mode.
    """

    data: np.ndarray
    grid: Grid2D

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3 or self.data.shape[0] not in (1, 2):
            raise ConfigError(
                f"field must have shape (1|2, nx, nz), got {self.data.shape}")
        if self.data.shape[1:] != (self.grid.nx, self.grid.nz):
            raise ConfigError("field shape does not match grid")

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    def norm2(self) -> float:
        """Total probability, Riemann quadrature dx*dz."""
        return float(np.vdot(self.data, self.data).real) * self.grid.cell

    def copy(self) -> "SpinorField":
        return SpinorField(self.data.copy(), self.grid)


@dataclass
class ControlField:
    """Control samples at step midpoints: samples[j] is u((j + 1/2) dt).

    Units are V/m for the samples and internal time for dt.
    """

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ConfigError("control field needs at least one sample")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")

    @property
    def nt(self) -> int:
        return self.samples.size

    @property
    def t_f(self) -> float:
        return self.nt * self.dt

    @property
    def t_mid(self) -> np.ndarray:
        return (np.arange(self.nt) + 0.5) * self.dt

    def fluence(self, alpha0: float) -> float:
        """alpha0 * integral of u^2 dt, with u in V/m and t internal."""
        return float(alpha0 * np.sum(self.samples**2) * self.dt)

    @classmethod
    def zeros(cls, nt: int, dt: float) -> "ControlField":
        return cls(np.zeros(nt), dt)

    @classmethod
    def rectangular(cls, nt: int, dt: float, amplitude: float,
                    t_on: float, t_off: float) -> "ControlField":
        t = (np.arange(nt) + 0.5) * dt
        u = np.where((t >= t_on) & (t < t_off), amplitude, 0.0)
        return cls(u, dt)

    @classmethod
    def gaussian(cls, nt: int, dt: float, amplitude: float,
                 center: float, sigma: float) -> "ControlField":
        t = (np.arange(nt) + 0.5) * dt
        return cls(amplitude * np.exp(-((t - center) ** 2) / (2.0 * sigma**2)), dt)


def kinetic_phase(grid: Grid2D, mass: float, dt: float) -> np.ndarray:
    """Full-step kinetic phase exp(-i (kx^2 + kz^2) dt / (2 mass))."""
    k2 = grid.kx[:, None] ** 2 + grid.kz[None, :] ** 2
    return np.exp(-0.5j * dt * k2 / mass)


def _rotation(coeffs: CoefficientFields, dt: float):
    """Closed-form electronic exponential, as the three distinct entries
    (a, b, d) of the symmetric 2x2 matrix [[a, b], [b, d]]."""
    om = np.hypot(coeffs.coupling, coeffs.tuning)
    c = np.cos(om * dt)
    # sin(om dt)/om; the om = 0 limit is dt, where coupling = tuning = 0
    # anyway so the branch value never matters, only its finiteness.
    s = np.where(om > 0.0, np.sin(om * dt) / np.where(om > 0.0, om, 1.0), dt)
    a = c - 1j * s * coeffs.tuning
    d = c + 1j * s * coeffs.tuning
    b = -1j * s * coeffs.coupling
    return a, b, d


def drive_profile(model: InternalModel, qx: np.ndarray) -> np.ndarray:
    """Drive coupling profile n(qx) = -drive_scale*(com_shift - qx/2).

    The control Hamiltonian is -u * n(qx) in internal energy units, with u
    in V/m.  This same profile is the control-gradient kernel used by the
    optimizer updates.
    """
    return -model.drive_scale * (model.com_shift - 0.5 * qx)


def potential_step(psi: SpinorField, coeffs: CoefficientFields,
                   u_mid: float, dt: float, model: InternalModel) -> SpinorField:
    """Reference one-shot potential exponential (no kinetic part).

    Applies exp(-i dt (H_el + drive)) pointwise.  In one-component mode the
    electronic part collapses to the lower adiabatic surface.
    """
    out = psi.copy()
    grid = psi.grid
    vu = -u_mid * drive_profile(model, grid.qx)[:, None]  # (nx, 1) energy
    if psi.ncomp == 1:
        lower = coeffs.confinement - np.hypot(coeffs.coupling, coeffs.tuning)
        out.data[0] *= np.exp(-1j * dt * (lower + vu))
        return out
    phase = np.exp(-1j * dt * (coeffs.confinement + vu))
    a, b, d = _rotation(coeffs, dt)
    p0 = phase * (a * psi.data[0] + b * psi.data[1])
    p1 = phase * (b * psi.data[0] + d * psi.data[1])
    out.data[0], out.data[1] = p0, p1
    return out


class SplitStepEngine:
    """Precomputed phases for repeated stepping at fixed dt.

    All apply methods take an array whose trailing axes are (ncomp, nx, nz)
    and tolerate extra leading axes, so a costate/state pair can be stepped
    as one stacked array.  Methods return the (possibly new) array; callers
    must reassign.
    """

    def __init__(self, model: InternalModel, grid: Grid2D,
                 coeffs: CoefficientFields, dt: float, ncomp: int = 2):
        if ncomp not in (1, 2):
            raise ConfigError("ncomp must be 1 or 2")
        self.model = model
        self.grid = grid
        self.dt = float(dt)
        self.ncomp = ncomp

        k2 = grid.kx[:, None] ** 2 + grid.kz[None, :] ** 2
        half = np.exp(-0.25j * self.dt * k2 / model.mass)
        self._kin = {(1, False): half, (1, True): half * half,
                     (-1, False): np.conj(half), (-1, True): np.conj(half * half)}

        if ncomp == 1:
            lower = coeffs.confinement - np.hypot(coeffs.coupling, coeffs.tuning)
            p = np.exp(-1j * self.dt * lower)
            self._surf = {1: p, -1: np.conj(p)}
        else:
            phase = np.exp(-1j * self.dt * coeffs.confinement)
            a, b, d = _rotation(coeffs, self.dt)
            fwd = (phase * a, phase * b, phase * d)
            self._rot = {1: fwd, -1: tuple(np.conj(m) for m in fwd)}

        # Drive phase per unit field: V_u = -u * n(qx), so one step applies
        # exp(-i dt V_u) = exp(+i u * n(qx) * dt).
        self._drive_angle = self.dt * drive_profile(model, grid.qx)

    def half_kinetic(self, data: np.ndarray, direction: int = 1) -> np.ndarray:
        out = _fft.fft2(data, axes=(-2, -1), overwrite_x=True)
        out *= self._kin[(direction, False)]
        return _fft.ifft2(out, axes=(-2, -1), overwrite_x=True)

    def full_kinetic(self, data: np.ndarray, direction: int = 1) -> np.ndarray:
        out = _fft.fft2(data, axes=(-2, -1), overwrite_x=True)
        out *= self._kin[(direction, True)]
        return _fft.ifft2(out, axes=(-2, -1), overwrite_x=True)

    def electronic(self, data: np.ndarray, direction: int = 1) -> np.ndarray:
        if self.ncomp == 1:
            data *= self._surf[direction]
            return data
        a, b, d = self._rot[direction]
        u0 = data[..., 0, :, :]
        u1 = data[..., 1, :, :]
        t0 = a * u0 + b * u1
        u1 *= d
        u1 += b * u0
        data[..., 0, :, :] = t0
        return data

    def drive(self, data: np.ndarray, u: float, direction: int = 1) -> np.ndarray:
        if u == 0.0:
            return data
        phase = np.exp((1j * direction * u) * self._drive_angle)
        data *= phase[:, None]
        return data

    def step(self, data: np.ndarray, u: float, direction: int = 1) -> np.ndarray:
        """One plain (unmerged) Strang step."""
        data = self.half_kinetic(data, direction)
        data = self.electronic(data, direction)
        data = self.drive(data, u, direction)
        return self.half_kinetic(data, direction)

    def audit(self, data: np.ndarray, step_index: int) -> None:
        if not np.all(np.isfinite(data)):
            raise NumericalBlowupError(step_index)

    def evolve(self, data: np.ndarray, samples: np.ndarray, direction: int = 1,
               boundary_cb=None, boundary_every: int = 0) -> np.ndarray:
        """Run all steps with merged interior kinetics.

        ``boundary_cb(step_index, data)`` is called with the materialised
        state at step boundaries that are multiples of ``boundary_every``
        (forward: after step j the boundary index is j+1; backward it is j).
        The final state is always materialised and reported to the callback
        when one is set.
        """
        nt = len(samples)
        if nt < 1:
            raise ConfigError("evolve needs at least one step")
        order = range(nt) if direction > 0 else range(nt - 1, -1, -1)
        data = self.half_kinetic(data, direction)
        for count, j in enumerate(order, start=1):
            data = self.electronic(data, direction)
            data = self.drive(data, samples[j], direction)
            boundary = j + 1 if direction > 0 else j
            last = count == nt
            want_cb = boundary_cb is not None and (
                last or (boundary_every > 0 and boundary % boundary_every == 0))
            if last or want_cb:
                data = self.half_kinetic(data, direction)
                if count % _AUDIT_EVERY == 0 or last:
                    self.audit(data, boundary)
                if want_cb:
                    boundary_cb(boundary, data)
                if not last:
                    data = self.half_kinetic(data, direction)
            else:
                data = self.full_kinetic(data, direction)
                if count % _AUDIT_EVERY == 0:
                    self.audit(data, boundary)
        return data


def split_step(psi: SpinorField, coeffs: CoefficientFields, u_mid: float,
               dt: float, model: InternalModel) -> SpinorField:
    """Reference single Strang step (builds phases on the fly)."""
    eng = SplitStepEngine(model, psi.grid, coeffs, dt, ncomp=psi.ncomp)
    return SpinorField(eng.step(psi.data.copy(), u_mid), psi.grid)


@dataclass(frozen=True)
class RecordSpec:
    """What to record along a propagation.

    every        cadence in steps for scalar traces
    frame_steps  step indices at which to keep density frames
    target       optional normalized target density amplitude (nx, nz);
                 when set, the squared projection onto it is traced
    """

    every: int = 10
    frame_steps: tuple[int, ...] = ()
    target: np.ndarray | None = None


@dataclass
class PropagationRecord:
    times: np.ndarray
    qx: np.ndarray
    qz: np.ndarray
    norm: np.ndarray
    overlap: np.ndarray | None
    frames: list[tuple[float, np.ndarray]]


class _Recorder:
    def __init__(self, spec: RecordSpec, grid: Grid2D, dt: float):
        self.spec = spec
        self.grid = grid
        self.dt = dt
        self.times: list[float] = []
        self.qx: list[float] = []
        self.qz: list[float] = []
        self.norm: list[float] = []
        self.overlap: list[float] = []
        self.frames: list[tuple[float, np.ndarray]] = []
        self._frame_steps = set(spec.frame_steps)

    def __call__(self, step: int, data: np.ndarray) -> None:
        g = self.grid
        rho = (data.real**2 + data.imag**2).sum(axis=tuple(range(data.ndim - 2)))
        w = float(rho.sum())
        self.times.append(step * self.dt)
        self.norm.append(w * g.cell)
        self.qx.append(float((rho.sum(axis=1) * g.qx).sum()) / w)
        self.qz.append(float((rho.sum(axis=0) * g.qz).sum()) / w)
        if self.spec.target is not None:
            amps = np.tensordot(np.conj(self.spec.target), data, axes=([0, 1], [-2, -1]))
            self.overlap.append(float((np.abs(amps) ** 2).sum()) * g.cell**2)
        if step in self._frame_steps:
            self.frames.append((step * self.dt, rho * 1.0))

    def done(self) -> PropagationRecord:
        return PropagationRecord(
            times=np.array(self.times), qx=np.array(self.qx),
            qz=np.array(self.qz), norm=np.array(self.norm),
            overlap=np.array(self.overlap) if self.spec.target is not None else None,
            frames=self.frames)


def propagate_forward(model: InternalModel, psi0: SpinorField,
                      control: ControlField, coeffs: CoefficientFields,
                      record: RecordSpec | None = None,
                      check_norm: bool = True,
                      ) -> tuple[SpinorField, PropagationRecord | None]:
    """Propagate from t = 0 to t_f = nt*dt under the given control."""
    eng = SplitStepEngine(model, psi0.grid, coeffs, control.dt, ncomp=psi0.ncomp)
    rec = None
    cb = None
    every = 0
    if record is not None:
        rec = _Recorder(record, psi0.grid, control.dt)
        rec(0, psi0.data)
        cb, every = rec, record.every
    n0 = psi0.norm2()
    data = eng.evolve(psi0.data.copy(), control.samples, direction=1,
                      boundary_cb=cb, boundary_every=every)
    out = SpinorField(data, psi0.grid)
    if check_norm and n0 > 0.0:
        drift = abs(out.norm2() - n0) / n0
        if drift > 1e-6:
            raise NumericalBlowupError(control.nt,
                                       f"norm drifted by {drift:.3e} during propagation")
    return out, (rec.done() if rec is not None else None)


def propagate_backward(model: InternalModel, psi_tf: SpinorField,
                       control: ControlField, coeffs: CoefficientFields,
                       ) -> SpinorField:
    """Inverse-propagate from t_f back to 0 under the given control.

    Because the costate obeys the same Schrodinger equation as the state,
    this is also the costate backward solve: seed it with the projected
    terminal state and the stored update field.
    """
    eng = SplitStepEngine(model, psi_tf.grid, coeffs, control.dt, ncomp=psi_tf.ncomp)
    data = eng.evolve(psi_tf.data.copy(), control.samples, direction=-1)
    return SpinorField(data, psi_tf.grid)
