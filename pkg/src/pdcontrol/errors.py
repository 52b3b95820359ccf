"""Exception types raised across the package."""


class PDControlError(Exception):
    """Base class for all errors raised by pdcontrol."""


class InvalidGridError(PDControlError, ValueError):
    pass


class ShapeError(PDControlError, ValueError):
    pass


class InvalidParameterError(PDControlError, ValueError):
    pass


class InvalidOperatorError(PDControlError, ValueError):
    pass


class SolverFailure(PDControlError, RuntimeError):
    """Raised when an iterative linear solve does not reach its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class DiagnosticUnavailable(PDControlError, RuntimeError):
    pass


class ConfigurationError(PDControlError, ValueError):
    pass


class TrainingDiverged(PDControlError, RuntimeError):
    def __init__(self, iteration, value):
        super().__init__(f"non-finite loss {value!r} at iteration {iteration}")
        self.iteration = iteration
        self.value = value
