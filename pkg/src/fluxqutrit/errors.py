"""Exception types shared across the package."""


class FluxQutritError(Exception):
    """Base class for all package errors."""


class ValidationError(FluxQutritError, ValueError):
    """Invalid input parameters."""


class PolicyError(ValidationError):
    """Inconsistent qutrit level selection."""


class PreconditionError(ValidationError):
    """An operation was called outside its domain (e.g. a non-bipartite lattice)."""


class NumericalError(FluxQutritError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class TruncationError(NumericalError):
    """A basis truncation did not converge."""


class ResolutionError(NumericalError):
    """A grid was too coarse for the requested quantity."""


class ConvergenceError(NumericalError):
    """An iterative eigensolver stopped before reaching its tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class PropagationError(NumericalError):
    """A time step exceeded its error budget."""
