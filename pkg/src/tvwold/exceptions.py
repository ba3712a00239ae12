"""Exception types shared across the package."""


class TvWoldError(Exception):
    """Base class for all package errors."""


class DomainError(TvWoldError, ValueError):
    """Invalid input: a precondition on data or parameters is violated."""


class EstimationError(TvWoldError, RuntimeError):
    """A numerical estimation step failed (singular design, divergence, ...)."""
