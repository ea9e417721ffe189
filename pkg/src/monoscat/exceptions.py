"""Exception types shared across the package."""


class MonoscatError(Exception):
    """Base class for package errors."""


class InputError(MonoscatError, ValueError):
    """Invalid numerical input (non-finite entries, bad domain, ...)."""


class DefinitenessError(MonoscatError):
    """A matrix required to be positive definite is not."""


class SingularMatrixError(MonoscatError):
    """Linear system is singular to working precision."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class GeometryError(MonoscatError, ValueError):
    """Invalid scatterer geometry (overlapping shapes, shape outside ROI)."""


class ConfigError(MonoscatError, ValueError):
    """Invalid experiment configuration."""


class OracleError(MonoscatError):
    """An analytic oracle failed to converge."""


class PipelineError(MonoscatError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
