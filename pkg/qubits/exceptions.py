"""
Error hierarchy shared by every tomography app.

Management commands map the two families onto process exit codes:
ConfigurationError -> 1, NumericalError -> 2. I/O failures surface as OSError
and map to 3.
"""


class TomographyError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 2

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigurationError(TomographyError):
    """Invalid user input: configs, states, missing data columns."""

    exit_code = 1


class StateValidationError(ConfigurationError):
    """Matrix is not a valid density operator."""


class NumericalError(TomographyError):
    """A computation could not deliver a trustworthy result."""

    exit_code = 2


class PropagationError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message, {"residual": residual})
        self.residual = residual


class DegenerateSteadyStateError(NumericalError):
    def __init__(self, message, near_zero_count=None):
        super().__init__(message, {"near_zero_count": near_zero_count})
        self.near_zero_count = near_zero_count


class InconsistentDataError(NumericalError):
    """Transport data contradicts the model or the known parameters."""


class ConditioningError(NumericalError):
    """Linear system too ill-conditioned; carries suggested extra probe times."""

    def __init__(self, message, condition=None, suggested_times=None):
        super().__init__(
            message,
            {"condition": condition, "suggested_times": suggested_times},
        )
        self.condition = condition
        self.suggested_times = suggested_times or []


class CaseAssumptionError(NumericalError):
    """Data violates the assumptions of the selected estimation case."""


class InternalConsistencyError(NumericalError):
    """A quantity that must be real or conserved is not, beyond tolerance."""
