"""Exception hierarchy shared by all modules."""


class MBShapeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(MBShapeError, ValueError):
    """Argument lies outside the domain of the operation."""


class InvariantError(MBShapeError):
    """A computed quantity violates a structural invariant."""


class ContinuationError(MBShapeError):
    """Predictor-corrector tracing of the contour lost the level set."""


class OutOfBandError(DomainError):
    """Requested inversion point lies outside the band."""


class NoRootError(MBShapeError):
    """A real root of the requested branch does not exist."""


class ConvergenceError(MBShapeError):
    """An iterative solver did not meet its tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class InconsistentSpecError(DomainError):
    """Model-problem parameters are mutually inconsistent."""


class BracketError(MBShapeError):
    """Bisection could not bracket a sign change."""


class NegativityError(InvariantError):
    """A density value came out negative, signalling a wrong branch."""


class InsufficientRangeError(MBShapeError):
    """Not enough band width to fit an edge exponent."""


class UnsupportedError(DomainError):
    """Parameter combination has no model-problem identification."""


class SupportError(DomainError):
    """Measure support leaves the admissible interval."""


class BudgetError(MBShapeError):
    """Enumeration would exceed the configured state budget."""


class DivergenceError(DomainError):
    """Partition function diverges for the given activity."""


class DegenerateSliceError(DomainError):
    """The slice has no particles (kappa = 0)."""
