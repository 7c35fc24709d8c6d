"""Exception hierarchy shared across the package."""


class NSDPPError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NSDPPError, ValueError):
    """Inconsistent shapes, ranks or hyperparameters."""


class DataError(NSDPPError, ValueError):
    """Malformed or unusable basket data."""


class NumericalError(NSDPPError, ArithmeticError):
    """A linear-algebra step failed (singular matrix, non-finite loss)."""


class ConditioningError(NumericalError):
    """The conditioning block ``L_J`` is singular."""

    def __init__(self, subset, message=None):
        self.subset = tuple(subset)
        super().__init__(message or f"L_J is singular for J={self.subset}")


class CapabilityError(NSDPPError):
    """Problem size exceeds what exhaustive enumeration can handle."""


class DegenerateTrainingError(NumericalError):
    """Every training basket produced a nonpositive stabilized minor."""
