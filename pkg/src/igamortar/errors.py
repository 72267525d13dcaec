"""Exception types shared across the package."""


class IgaError(Exception):
    """Base class for all package errors."""


class DomainError(IgaError, ValueError):
    """An evaluation point lies outside the parametric domain."""


class PreconditionError(IgaError, ValueError):
    """A documented precondition of an operation is violated."""


class GeometryError(IgaError):
    """Degenerate or inconsistent geometry (singular Jacobian, bad weights)."""


class InversionError(GeometryError):
    """Point inversion did not converge; carries the best residual found."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CoefficientError(IgaError, ValueError):
    """PDE coefficient violates its positivity / sign requirements."""


class LinAlgError(IgaError):
    """Numerical failure in a matrix factorization or eigensolve."""


class SolverError(IgaError):
    """Saddle-point solve failed (singular constraints, factorization)."""


class InputError(IgaError, ValueError):
    """Malformed user input (domain files, CLI arguments, config tokens)."""
