"""Exception types shared across the package."""


class QuadricError(Exception):
    """Base class for all errors raised by quadric_kohn."""


class DimensionError(QuadricError, ValueError):
    """Array shapes or index lengths do not match the quadric."""


class EigenConvergenceError(QuadricError, ArithmeticError):
    """The Jacobi eigensolver exhausted its sweep budget."""


class DomainError(QuadricError, ValueError):
    """Evaluation requested at a point where the kernel is not a pointwise value."""


class ToleranceError(QuadricError, ArithmeticError):
    """A quadrature could not reach the requested tolerance within its budget.

    The best available estimate is attached as ``value`` and its error as ``error``.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class ConfigError(QuadricError, ValueError):
    """Malformed job configuration."""
