"""Physical parameters, trap equilibrium, and unit conversion.

Everything at the package boundary is SI.  Propagation happens in natural
units with hbar = 1, lengths in nanometres and times in microseconds;
``UnitSystem`` and ``InternalModel`` own that conversion.

Model summary.  Two ions of mass ``mass`` sit in a linear trap with secular
frequencies ``omega_x`` (transverse) and ``omega_z`` (axial).  A static field
``static_field`` pushes the pair off the rf null, where the rf field gradient
``rf_gradient`` couples to the state-dependent Rydberg polarizabilities
``pol_down`` / ``pol_up``.  A single shared excitation hops between the ions
with exchange energy ``exchange_energy`` at the equilibrium separation and
axial gradient ``exchange_gradient``.  The relative motion of the pair then
sees two coupled electronic surfaces with a conical intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import bisect

from .errors import DegenerateTrapError, ModelInvalidError

# CODATA 2018, pinned so that shipped outputs never drift with library updates.
ELEMENTARY_CHARGE = 1.602176634e-19    # C, exact
HBAR = 1.0545718176461565e-34          # J s, h/(2 pi) with h exact
COULOMB_K = 8.9875517873681764e9       # N m^2 C^-2, 1/(4 pi eps0), exact


@dataclass(frozen=True)
class PhysicalParams:
    """Input parameter set, all SI.

    mass               single-ion mass [kg]
    pol_down, pol_up   second-order polarizabilities of the two Rydberg
                       levels [C^2 m^2 / J]
    omega_x, omega_z   transverse / axial secular frequencies [rad/s]
    static_field       offset field along x [V/m]
    rf_gradient        rf field gradient at the trap centre [V/m^2]
    exchange_energy    excitation-exchange energy at equilibrium [J]
    exchange_gradient  axial derivative of the exchange energy [J/m]
    """

    mass: float
    pol_down: float
    pol_up: float
    omega_x: float
    omega_z: float
    static_field: float
    rf_gradient: float
    exchange_energy: float
    exchange_gradient: float
    charge: float = ELEMENTARY_CHARGE
    coulomb_k: float = COULOMB_K
    hbar: float = HBAR

    def __post_init__(self):
        if self.mass <= 0:
            raise ModelInvalidError("ion mass must be positive")
        if self.omega_x <= 0 or self.omega_z <= 0:
            raise ModelInvalidError("trap frequencies must be positive")
        if self.omega_x <= self.omega_z:
            raise ModelInvalidError(
                "transverse confinement must be stiffer than axial "
                "(omega_x > omega_z) for a linear two-ion crystal")

    @property
    def reduced_mass(self) -> float:
        return self.mass / 2.0

    @property
    def total_mass(self) -> float:
        return 2.0 * self.mass

    @property
    def pol_sum(self) -> float:
        return self.pol_up + self.pol_down

    @property
    def pol_diff(self) -> float:
        return self.pol_up - self.pol_down


def rel_potential(p: PhysicalParams, x: float, z: float) -> float:
    """Spin-independent potential of the relative coordinate (x, z) [J]."""
    r = math.hypot(x, z)
    if r == 0.0:
        raise ValueError("relative coordinate must not vanish")
    mu = p.reduced_mass
    v_trap = 0.5 * mu * (p.omega_x**2 * x**2 + p.omega_z**2 * z**2)
    v_coul = p.coulomb_k * p.charge**2 / r
    v_pol = -0.25 * p.rf_gradient**2 * p.pol_sum * x**2
    return v_trap + v_coul + v_pol


def com_potential(p: PhysicalParams, X: float) -> float:
    """Spin-independent potential of the transverse centre of mass [J]."""
    M = p.total_mass
    return (0.5 * M * p.omega_x**2 * X**2
            - p.rf_gradient**2 * p.pol_sum * X**2
            + 2.0 * p.static_field * p.charge * X)


def solve_separation(p: PhysicalParams,
                     bracket: tuple[float, float] = (0.1e-6, 100e-6),
                     rtol: float = 1e-12) -> float:
    """Equilibrium axial ion separation [m].

    Solves d/dz of the relative potential at x = 0 by bisection on
    ``bracket`` and cross-checks against the closed form
    (k e^2 / (mu omega_z^2))^(1/3).
    """
    mu = p.reduced_mass
    ke2 = p.coulomb_k * p.charge**2

    def slope(z):
        return mu * p.omega_z**2 * z - ke2 / z**2

    a, b = bracket
    if slope(a) * slope(b) >= 0.0:
        raise ModelInvalidError(
            f"no separation root bracketed in [{a:g}, {b:g}] m")
    z0 = bisect(slope, a, b, rtol=rtol, maxiter=200)

    closed = (ke2 / (mu * p.omega_z**2)) ** (1.0 / 3.0)
    if abs(z0 - closed) > 1e-10 * closed:
        raise ModelInvalidError(
            "bisection and closed-form separation disagree: "
            f"{z0:.15e} vs {closed:.15e}")
    return z0


def solve_com_shift(p: PhysicalParams) -> float:
    """Equilibrium transverse centre-of-mass shift [m].

    Stationarity of the centre-of-mass potential gives
    X0 = -2 e u0 / (M omega_x^2 - 2 alpha^2 pol_sum).  The denominator is
    the effective transverse restoring-force constant of the shifted pair;
    if it vanishes the trap no longer holds the centre of mass.
    """
    denom = p.total_mass * p.omega_x**2 - 2.0 * p.rf_gradient**2 * p.pol_sum
    scale = p.total_mass * p.omega_x**2
    if abs(denom) < 1e-12 * scale:
        raise DegenerateTrapError(
            "effective transverse restoring force vanishes; "
            "centre-of-mass shift undefined")
    return -2.0 * p.charge * p.static_field / denom


def effective_frequencies(p: PhysicalParams, separation: float) -> tuple[float, float]:
    """Harmonic frequencies (omega_eff_x, omega_eff_z) of the relative
    motion about equilibrium [rad/s].

    The transverse curvature is softened by the polarizability term and by
    the Coulomb repulsion; the axial curvature is stiffened by it.  At the
    solved separation k e^2/(mu z0^3) equals omega_z^2, so the axial result
    reduces to sqrt(3) omega_z.
    """
    mu = p.reduced_mass
    ke2 = p.coulomb_k * p.charge**2
    coul = ke2 / (mu * abs(separation) ** 3)
    wx2 = p.omega_x**2 - p.rf_gradient**2 * p.pol_sum / (2.0 * mu) - coul
    wz2 = p.omega_z**2 + 2.0 * coul
    if wx2 <= 0.0:
        raise ModelInvalidError(
            "effective transverse frequency squared is non-positive; "
            "the rf gradient or polarizability is too large for this trap")
    if wz2 <= 0.0:
        raise ModelInvalidError("effective axial frequency squared is non-positive")
    return math.sqrt(wx2), math.sqrt(wz2)


@dataclass(frozen=True)
class DerivedGeometry:
    """Equilibrium geometry and effective harmonic frequencies, SI.

    ``com_shift_solved`` records the stationarity solution even when an
    explicit ``com_shift`` override was supplied, so the two can be compared.
    """

    separation: float          # m
    com_shift: float           # m, value actually used downstream
    com_shift_solved: float    # m, from the static-field stationarity
    omega_eff_x: float         # rad/s
    omega_eff_z: float         # rad/s


def derive_geometry(p: PhysicalParams, com_shift: float | None = None) -> DerivedGeometry:
    """Solve the equilibrium and package the derived quantities.

    ``com_shift`` overrides the solved centre-of-mass shift when given
    (the override wins; the solved value is still reported).  The solved
    separation is validated as a stationary point of the relative potential.
    """
    z0 = solve_separation(p)
    solved_shift = solve_com_shift(p)
    used_shift = solved_shift if com_shift is None else float(com_shift)
    wx, wz = effective_frequencies(p, z0)

    # Stationarity residual: the axial force at (0, z0) must vanish at the
    # scale set by the effective axial curvature.
    mu = p.reduced_mass
    ke2 = p.coulomb_k * p.charge**2
    residual = abs(mu * p.omega_z**2 * z0 - ke2 / z0**2)
    if residual > 1e-9 * mu * wz**2 * z0:
        raise ModelInvalidError(
            f"separation stationarity residual too large: {residual:.3e} N")

    return DerivedGeometry(separation=z0, com_shift=used_shift,
                           com_shift_solved=solved_shift,
                           omega_eff_x=wx, omega_eff_z=wz)


@dataclass(frozen=True)
class UnitSystem:
    """Natural units with hbar = 1.

    ``length`` and ``time`` are the SI sizes of one internal unit.  Energy
    follows as hbar/time and mass as hbar*time/length^2, which is what makes
    hbar = 1 internally.
    """

    length: float = 1e-9   # m per internal length unit
    time: float = 1e-6     # s per internal time unit

    def __post_init__(self):
        if self.length <= 0 or self.time <= 0:
            raise ModelInvalidError("unit sizes must be positive")

    @property
    def energy(self) -> float:
        return HBAR / self.time

    @property
    def mass(self) -> float:
        return HBAR * self.time / self.length**2


@dataclass(frozen=True)
class InternalModel:
    """Everything the propagator needs, in internal units (hbar = 1).

    mass            reduced mass of the pair
    omega_x/omega_z effective harmonic frequencies [rad / time unit]
    coupling0       exchange energy at equilibrium [1 / time unit]
    coupling_slope  axial exchange gradient [1 / (time unit * length unit)]
    tuning_slope    transverse slope of the differential-polarizability
                    energy, alpha^2 * pol_diff * com_shift [same units]
    com_shift       centre-of-mass shift [length units]
    drive_scale     e * (1 V/m) * (1 length unit) / hbar: converts a control
                    field in V/m times a length in internal units into a
                    rate [1 / time unit]
    """

    mass: float
    omega_x: float
    omega_z: float
    coupling0: float
    coupling_slope: float
    tuning_slope: float
    com_shift: float
    drive_scale: float
    units: UnitSystem = field(default_factory=UnitSystem)

    @property
    def packet_sigma_x(self) -> float:
        """Ground-state density std of the effective transverse well."""
        return 1.0 / math.sqrt(2.0 * self.mass * self.omega_x)

    @property
    def packet_sigma_z(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.mass * self.omega_z)


def to_internal(p: PhysicalParams, geom: DerivedGeometry,
                units: UnitSystem | None = None) -> InternalModel:
    """Convert the SI parameter set into propagation units."""
    u = units or UnitSystem()
    tuning_si = p.rf_gradient**2 * p.pol_diff * geom.com_shift  # J/m
    return InternalModel(
        mass=p.reduced_mass / u.mass,
        omega_x=geom.omega_eff_x * u.time,
        omega_z=geom.omega_eff_z * u.time,
        coupling0=p.exchange_energy / u.energy,
        coupling_slope=p.exchange_gradient * u.length / u.energy,
        tuning_slope=tuning_si * u.length / u.energy,
        com_shift=geom.com_shift / u.length,
        drive_scale=p.charge * u.length / u.energy,
        units=u,
    )


def from_internal(m: InternalModel) -> dict[str, float]:
    """SI view of an internal model, for round-trip checks and reports.

    Returns the reduced mass [kg], effective frequencies [rad/s], exchange
    energy [J] and gradient [J/m], tuning slope [J/m], and centre-of-mass
    shift [m].
    """
    u = m.units
    return {
        "reduced_mass": m.mass * u.mass,
        "omega_eff_x": m.omega_x / u.time,
        "omega_eff_z": m.omega_z / u.time,
        "exchange_energy": m.coupling0 * u.energy,
        "exchange_gradient": m.coupling_slope * u.energy / u.length,
        "tuning_slope": m.tuning_slope * u.energy / u.length,
        "com_shift": m.com_shift * u.length,
    }
