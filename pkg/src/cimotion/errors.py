"""Exception types shared across the package.

The command line maps these onto exit codes: configuration problems exit
with 2, numerical blowups with 3, and a broken monotonic ascent with 4.
"""


class ConfigError(Exception):
    """A config file or argument set is incomplete or inconsistent."""

    exit_code = 2


class ModelInvalidError(Exception):
    """The physical parameter set does not define a valid model.

    Raised e.g. when an effective trap frequency squared comes out
    non-positive or the equilibrium solve cannot bracket a root.
    """

    exit_code = 2


class DegenerateTrapError(ModelInvalidError):
    """The centre-of-mass shift is undefined because the effective
    transverse restoring force vanishes."""


class NoConicalIntersectionError(ModelInvalidError):
    """The coupling field has no spatial gradient, so no degeneracy
    point exists at finite coordinates."""


class NumericalBlowupError(Exception):
    """Non-finite values appeared during propagation."""

    exit_code = 3

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite wavefunction at step {step}")


class MonotonicityError(Exception):
    """The optimizer objective decreased beyond tolerance between iterations."""

    exit_code = 4
