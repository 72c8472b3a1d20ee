"""Exception types raised by the analysis routines."""


class RegimeError(ValueError):
    """The operation is not defined for the regime of the given parameters."""


class NoCertificateError(RegimeError):
    """No convergence-rate certificate exists (critical regime or empty region)."""


class NumericalError(RuntimeError):
    """Base class for truncation, integration and convergence failures."""


class TruncationError(NumericalError):
    """Too much probability mass reached the truncation boundary."""

    def __init__(self, message, suggested_size=None):
        super().__init__(message)
        self.suggested_size = suggested_size


class IntegrationError(NumericalError):
    """The ODE integrator produced an invalid probability vector."""


class ConvergenceError(NumericalError):
    """A stationary solve did not meet its residual or tail requirements."""


class UnreliableBoundError(NumericalError):
    """A weighted sum could not be certified as numerically convergent."""
