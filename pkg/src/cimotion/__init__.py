"""Wavepacket dynamics and optimal control of a trapped Rydberg ion pair
near an engineered conical intersection."""

from .errors import (ConfigError, DegenerateTrapError, ModelInvalidError,
                     MonotonicityError, NoConicalIntersectionError,
                     NumericalBlowupError)
from .grid import Grid2D, make_grid
from .params import (COULOMB_K, ELEMENTARY_CHARGE, HBAR, DerivedGeometry,
                     InternalModel, PhysicalParams, UnitSystem,
                     derive_geometry, effective_frequencies, from_internal,
                     solve_com_shift, solve_separation, to_internal)
from .surfaces import (AdiabaticBasis, AdiabaticSurfaces, CoefficientFields,
                       adiabatic_states, ci_location, eval_coefficients,
                       eval_surfaces, mixing_angle, surface_gap_at)
from .propagator import (ControlField, PropagationRecord, RecordSpec,
                         SpinorField, SplitStepEngine, drive_profile,
                         kinetic_phase, potential_step, propagate_backward,
                         propagate_forward, split_step)
from .control import (OptimizerConfig, OptimizerResult, TargetSpec,
                      fluence_cost, gaussian_amplitude, initial_packet,
                      make_target, project_on_target, run_optimization,
                      terminal_overlap)
from .observables import (adiabatic_populations, crossing_count, density,
                          expectation_qx, expectation_qz, momentum_norm2)

__version__ = "0.1.0"
