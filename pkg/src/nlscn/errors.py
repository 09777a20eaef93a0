"""Exception types shared across the package."""


class NLSError(Exception):
    """Base class for all nlscn errors."""


class ConfigError(NLSError):
    """Invalid run configuration, mesh parameters or incompatible grids."""


class DomainError(NLSError):
    """Argument outside the mathematical domain of an operation."""


class ModelError(NLSError):
    """Inconsistent nonlinearity model or invalid potential data."""


class FactorizationError(NLSError):
    """Direct sparse factorization failed (numerically singular pivot)."""


class ConvergenceError(NLSError):
    """An iteration failed to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class FixedPointError(ConvergenceError):
    """The Crank-Nicolson fixed-point iteration did not contract enough."""


class GroundStateError(ConvergenceError):
    """The ground-state gradient flow stagnated or lost monotonicity."""


class StateFileError(NLSError):
    """Malformed or mismatched binary state file."""
