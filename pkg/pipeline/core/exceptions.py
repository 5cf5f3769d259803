"""
Custom exceptions for the lab.

These exceptions give clear messages and let the CLI map failures to
machine-readable error objects and exit codes.
"""

from typing import Optional


class LabError(Exception):
    """
    Base exception for all domain failures.

    All module-specific exceptions inherit from this.
    """
    pass


class ConfigurationError(LabError):
    """
    Raised when a measure, model or experiment config is invalid.

    Attributes:
        key: Offending config key (dotted path), if known
        line: 1-based line of the key in the config file, if known
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        super().__init__(message)


class UnsupportedMeasureError(LabError):
    """Raised when an operation needs a measure kind it cannot handle (e.g. enumerating a parametric measure)."""
    pass


class UnsupportedTransformError(LabError):
    """Raised when transpose variants are requested on a nonlinear model."""
    pass


class UnsupportedModelError(LabError):
    """Raised when an operation does not support the model variant (e.g. Galerkin on the standard map)."""
    pass


class BudgetExceededError(LabError):
    """
    Raised when a computation would exceed a configured limit.

    The limit name and the requested size are embedded in the message.
    """

    def __init__(self, limit_name: str, requested: int, limit: int):
        self.limit_name = limit_name
        self.requested = requested
        self.limit = limit
        super().__init__(f"{limit_name} exceeded: requested {requested}, limit {limit}")


class DimensionMismatchError(LabError):
    """Raised when a point, frame or map has the wrong dimension."""
    pass


class InternalConsistencyError(LabError):
    """
    Raised when a postcondition contract fails.

    Example: covolume growth and conormal growth disagree beyond 1e-10.
    """
    pass


class SpectralError(LabError):
    """Raised when an eigen-solve cannot produce trustworthy values."""
    pass


class ExperimentExecutionError(LabError):
    """
    Raised when an experiment step fails.

    Attributes:
        step_name: Name of the failed experiment
        original_error: The underlying exception
    """

    def __init__(self, step_name: str, original_error: Exception):
        self.step_name = step_name
        self.original_error = original_error
        error_message = f"Experiment '{step_name}' failed: {str(original_error)}"
        super().__init__(error_message)
