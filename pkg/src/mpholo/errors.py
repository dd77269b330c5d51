"""Exception types shared across the package."""


class MpholoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MpholoError, ValueError):
    """Invalid parameters, mismatched shapes, or unusable input files."""


class DivergenceError(MpholoError, RuntimeError):
    """Raised when an iterative solve produces a non-finite loss."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite loss at iteration {iteration}")


class MetricError(MpholoError, ValueError):
    """Raised when a quality metric is undefined, e.g. an empty mask."""
