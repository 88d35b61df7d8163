"""Exception hierarchy shared by all modules."""


class KarasevError(Exception):
    """Base class for every error raised by this package."""


class UsageError(KarasevError, ValueError):
    """Invalid arguments: mismatched shapes, orders, or bad configuration."""


class SchemaError(UsageError):
    """A system description does not follow the JSON schema."""


class ValidationError(UsageError):
    """A system description is well-formed but not a Poisson system.

    ``kind`` is ``"jacobi"`` or ``"casimir"``; ``index`` names the offending
    entry, ``point`` the sample where the check failed and ``residual`` its
    magnitude.
    """

    def __init__(self, message, kind, residual, point=None, index=None):
        super().__init__(message)
        self.kind = kind
        self.residual = residual
        self.point = point
        self.index = index


class ConvergenceError(KarasevError):
    """Newton iteration did not reach the residual tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularJacobianError(KarasevError):
    """LU factorisation met a pivot below the singularity threshold."""


class StepFailure(KarasevError):
    """A one-step map failed inside a trajectory.

    Carries the index of the failing step and the underlying error.
    """

    def __init__(self, message, step, cause=None):
        super().__init__(message)
        self.step = step
        self.cause = cause


class IntegratorError(KarasevError):
    """Adaptive Runge-Kutta step size underflowed."""
