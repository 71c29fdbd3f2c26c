"""Exception hierarchy shared by all fbmlab modules."""


class FbmLabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FbmLabError, ValueError):
    """A parameter is outside its admissible range."""


class DomainError(FbmLabError, ValueError):
    """Times or windows fall outside the sampled grid."""


class GenerationError(FbmLabError, RuntimeError):
    """Sample-path generation failed (e.g. covariance not factorizable)."""


class NumericalError(FbmLabError, RuntimeError):
    """A numerical computation produced NaN/overflow or failed to converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(NumericalError):
    """An iteration exceeded its budget; carries the last residual."""


class ConsistencyError(FbmLabError, RuntimeError):
    """An internal invariant that should hold analytically was violated."""


class FitError(FbmLabError, RuntimeError):
    """Not enough usable data to perform a requested fit."""


class ConfigError(FbmLabError, ValueError):
    """An experiment configuration is malformed or violates invariants."""
