"""Exception hierarchy shared by the engines and the CLI."""


class HarmstatError(Exception):
    """Base class for all package errors."""


class ConfigError(HarmstatError, ValueError):
    """Invalid experiment configuration.

    ``field`` holds the dotted path of the offending entry when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(HarmstatError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class ConvergenceError(NumericalError):
    """Iterative eigensolver exceeded its iteration cap."""


class IntegrationError(NumericalError):
    """Adaptive ODE integration failed (step-size underflow).

    ``time`` is the integration time at which the step collapsed and
    ``trajectory`` the ensemble index, when the failure came from a batch.
    """

    def __init__(self, message, time=None, trajectory=None):
        self.time = time
        self.trajectory = trajectory
        super().__init__(message)


class UndefinedFanoError(NumericalError, ZeroDivisionError):
    """Fano factor requested for a field with zero mean photon number."""


class MemoryBoundError(NumericalError, MemoryError):
    """Fock truncation exceeds the configured hard bound."""

    def __init__(self, message, required=None):
        self.required = required
        super().__init__(message)
