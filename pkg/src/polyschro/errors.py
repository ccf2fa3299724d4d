"""Exception types shared across the package."""


class PolyschroError(Exception):
    """Base class for package errors."""


class ExpressionError(PolyschroError, ValueError):
    """Malformed or unsupported closed-form expression."""


class FamilyError(PolyschroError, ValueError):
    """Ill-posed potential or interaction family."""


class GridError(PolyschroError, ValueError):
    """Unusable grid parameters."""


class SymbolDomainError(PolyschroError, ValueError):
    """Phase-space symbol evaluated outside its admissible range.

    Carries the offending phase-space point so callers can report it.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SolverError(PolyschroError, RuntimeError):
    """An iterative solve failed to reach its tolerance."""


class ConfigError(PolyschroError, ValueError):
    """Invalid experiment configuration."""
