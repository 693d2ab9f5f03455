"""Exception types shared across the package."""


class SignalPropError(Exception):
    """Base class for all package errors."""


class NumericError(SignalPropError):
    """A numerical evaluation produced a non-finite result."""


class ConfigurationError(SignalPropError):
    """Invalid user-supplied configuration (unknown name, bad flag value)."""


class DomainError(SignalPropError):
    """An argument is outside the mathematical domain of an operation."""


class DegenerateVarianceError(DomainError):
    """Correlation is undefined because one of the variances is zero."""


class NoFixedPointError(SignalPropError):
    """The requested map has no fixed point for these hyperparameters."""


class ConvergenceError(SignalPropError):
    """An iterative solver failed to converge.

    Carries the last iterate so callers can inspect how far it got.
    """

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class InsufficientDataError(SignalPropError):
    """Too few in-window points to perform a fit."""
