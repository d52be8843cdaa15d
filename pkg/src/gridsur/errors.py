"""Exception types shared across the package."""


class GridSurError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(GridSurError, ValueError):
    """An argument violates a documented precondition or invariant."""


class StateError(GridSurError, RuntimeError):
    """The operation is undefined in the current state (e.g. expected
    improvement before any noiseless observation exists)."""


class NumericalError(GridSurError, ArithmeticError):
    """A numerical routine failed beyond the documented tolerances
    (non-PSD covariance, factorization failure after jitter escalation)."""


class ConfigError(GridSurError, ValueError):
    """An experiment configuration file is invalid."""
