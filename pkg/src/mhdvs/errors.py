"""Exception types shared by the solver layers."""


class MHDVSError(Exception):
    """Base class for solver-specific failures."""


class ConfigError(MHDVSError, ValueError):
    """Invalid or inconsistent run configuration."""


class GraphBoundViolated(MHDVSError):
    """Interface height left the admissible band |f| <= 1 - c0."""


class NonInjectiveMap(MHDVSError):
    """Harmonic coordinate map has a non-positive vertical Jacobian somewhere."""


class SolverDiverged(MHDVSError):
    """An iterative elliptic solve failed to reach its residual target."""

    def __init__(self, message, residual=None, target=None):
        super().__init__(message)
        self.residual = residual
        self.target = target


class CompatibilityViolated(MHDVSError):
    """Div-curl data violates a solvability constraint beyond tolerance.

    constraint is one of "C1" (div of the prescribed curl), "C2" (wall flux
    of its vertical component), "C3" (net flux through the boundary).
    """

    def __init__(self, constraint, defect, tol):
        super().__init__(f"{constraint} defect {defect:.3e} exceeds {tol:.3e}")
        self.constraint = constraint
        self.defect = defect
        self.tol = tol


class NaNDetected(MHDVSError):
    """A state or derivative array stopped being finite."""


class FitPoorlyConditioned(MHDVSError):
    """Exponential fit residual too large for the extracted rate to be trusted."""
