"""Exception types shared across the package."""


class DnlsError(Exception):
    """Base class for package-specific failures."""


class ZeroPolynomialError(DnlsError):
    """Scaling weight requested for the zero polynomial."""


class ResolutionError(DnlsError):
    """Grid too coarse for the requested derivative order."""


class StructureViolation(DnlsError):
    """A resolvent coefficient violates its expected structural form."""


class TelescopeFailure(DnlsError):
    """A bracket in the recursive expansion failed to vanish."""

    def __init__(self, level: int, message: str = ""):
        self.level = level
        super().__init__(message or f"telescoping bracket nonzero at level k={level}")


class DegreeError(DnlsError):
    """Rational integrand does not decay fast enough to integrate."""


class DecayError(DnlsError):
    """Input profile does not decay at the domain edges."""


class StiffnessError(DnlsError):
    """ODE step control failed to reach the requested tolerance."""


class DivergenceError(DnlsError):
    """Operator series evaluated outside its region of convergence."""


class StabilityError(DnlsError):
    """Time integration produced overflow / NaN or failed its pre-flight check."""


class BranchError(DnlsError):
    """Logarithm branch of the transmission Wronskian could not be tracked."""


class QuadratureError(DnlsError):
    """Adaptive quadrature failed to converge."""
