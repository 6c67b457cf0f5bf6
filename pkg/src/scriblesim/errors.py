"""Exception types shared across the package.

All errors raised deliberately by this package derive from ScribleSimError,
so callers can catch one base class at the CLI boundary.
"""


class ScribleSimError(Exception):
    """Base class for all errors raised by scriblesim."""


class ConfigurationError(ScribleSimError):
    """A config value, argument, or combination of them is invalid."""


class DomainError(ScribleSimError):
    """A point violates a domain precondition (outside the set, on the
    boundary where a barrier is evaluated, etc.)."""


class ProtocolError(ScribleSimError):
    """The propose / estimate / update cycle, or an adversary's query
    protocol, was driven out of order."""


class SolverError(ScribleSimError):
    """The iterative FTRL solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class FactorizationError(ScribleSimError):
    """A matrix expected to be symmetric positive definite was not."""


class InvariantError(ScribleSimError):
    """An internal runtime invariant failed; indicates a bug, not bad input."""
