"""Exception types shared across the package."""


class PersistPlanError(Exception):
    """Base class for all package errors."""


class DomainError(PersistPlanError, ValueError):
    """An argument lies outside the valid domain of an operation."""


class DegenerateInputError(PersistPlanError, ValueError):
    """Input data carries no usable variation (zero variance, zero norm, singular)."""


class ResolutionError(PersistPlanError, ValueError):
    """Not enough scores to resolve the requested error rate."""

    def __init__(self, message: str, required: int | None = None, available: int | None = None):
        super().__init__(message)
        self.required = required
        self.available = available


class NotReachableError(PersistPlanError):
    """A target error rate was never reached within the available features."""

    def __init__(self, message: str, best_metric: float, best_n: int):
        super().__init__(message)
        self.best_metric = best_metric
        self.best_n = best_n


class ConfigError(PersistPlanError, ValueError):
    """An experiment configuration is invalid."""
