"""Exception and warning types shared across the package.

``NumericsError`` subclasses map to CLI exit code 3, ``ConfigError`` to 2.
"""


class NumericsError(Exception):
    """A numerical routine could not produce a trustworthy result."""


class DomainError(NumericsError, ValueError):
    """Input outside the mathematical domain of an operation."""


class CutError(DomainError):
    """Evaluation requested on a branch cut; use the boundary-value routine."""


class QuadratureError(NumericsError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class SheetError(NumericsError):
    """Pole search left the region where the requested determination is valid."""

    def __init__(self, message, trail=None):
        super().__init__(message)
        self.trail = list(trail) if trail is not None else []


class ConvergenceError(NumericsError):
    """Iteration did not converge; carries the iterate trail for diagnosis."""

    def __init__(self, message, trail=None):
        super().__init__(message)
        self.trail = list(trail) if trail is not None else []


class DegenerateRadiusError(DomainError):
    """B equals the level spacing exactly: the expansion disc has zero radius."""


class StiffnessError(NumericsError):
    """Step size underflow in the time integrator."""


class RecurrenceHorizonError(DomainError):
    """Requested final time exceeds the trustworthy horizon of a finite grid."""


class RefinementError(NumericsError):
    """Mode grid too small for the requested quadrature tolerance."""


class FitQualityError(NumericsError):
    """Decay-rate fit window is not in the exponential regime."""


class DegenerateRootError(NumericsError):
    """Coincident denominator roots; partial fractions undefined."""


class ConfigError(Exception):
    """Malformed or inconsistent run configuration."""


class ConditioningWarning(UserWarning):
    """Root cluster or similar near-degeneracy; results may lose digits."""


class BroadLineWarning(UserWarning):
    """Narrow-line formula used outside its validity range."""


class UnphysicalRegimeWarning(UserWarning):
    """Result computed in a regime the model does not physically cover."""


class StrongCouplingWarning(UserWarning):
    """Dimensionless coupling large enough to strain perturbative accuracy."""
