"""Isogeometric mortar methods in two dimensions.

A multipatch B-spline/NURBS discretization of scalar diffusion-reaction and
plane-strain elasticity problems, with weak interface coupling through
Lagrange multipliers.  Three multiplier space families are provided (equal
order with boundary modification, degree reduced by one, degree reduced by
two) together with a matrix-level inf-sup stability bench and
manufactured-solution convergence studies.
"""

__version__ = "0.1.0"

from .errors import (
    CoefficientError,
    DomainError,
    GeometryError,
    IgaError,
    InputError,
    InversionError,
    LinAlgError,
    PreconditionError,
    SolverError,
)
from .splinecore import (
    BasisEvaluation,
    KnotVector,
    QuadratureRule,
    eval_basis,
    eval_spline,
    find_span,
    gauss_legendre,
    greville,
    insert_knot,
    make_open_knot_vector,
    trim_knot_vector,
    uniform_open_knot_vector,
    uniform_refine,
)

__all__ = [
    "BasisEvaluation",
    "CoefficientError",
    "DomainError",
    "GeometryError",
    "IgaError",
    "InputError",
    "InversionError",
    "KnotVector",
    "LinAlgError",
    "PreconditionError",
    "QuadratureRule",
    "SolverError",
    "eval_basis",
    "eval_spline",
    "find_span",
    "gauss_legendre",
    "greville",
    "insert_knot",
    "make_open_knot_vector",
    "trim_knot_vector",
    "uniform_open_knot_vector",
    "uniform_refine",
]
