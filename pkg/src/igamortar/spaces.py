"""Discretization spaces: primal patches, interface traces, dual multipliers.

The primal space on a patch is a tensor-product spline space on (refined)
knot vectors, composed with the geometry map at assembly time.  On a slave
interface three families of Lagrange multiplier spaces are available:

* ``equal``: same degree as the trace, optionally with the boundary
  modification that blends the first/last interior functions with the end
  function so they drop to degree p-1 on the end element.  The modification
  is applied at interface ends that are cross points (they touch another
  interface or a Dirichlet boundary).
* ``pm1``: degree p-1 on the once-trimmed knot vector (unstable; kept for
  the checkerboard diagnostics).
* ``pm2``: degree p-2 on the twice-trimmed knot vector (stable without any
  end modification).  Deeper trims ``pm3``, ``pm4``, ... are accepted for
  the stability sweeps over dual degrees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError
from .splinecore import (
    KnotVector,
    collocation_matrix,
    eval_basis,
    make_open_knot_vector,
    trim_knot_vector,
    uniform_refine,
)

VARIANT_TOKENS = ("equal-modified", "pm1", "pm2")


class SplineSpace:
    """Tensor-product spline space on a patch.

    Flat dof ids run row-major over (i1, i2): ``flat = i1 * n2 + i2``.
    """

    __slots__ = ("kvs", "dim")

    def __init__(self, kvs):
        kv1, kv2 = kvs
        object.__setattr__(self, "kvs", (kv1, kv2))
        object.__setattr__(self, "dim", kv1.n * kv2.n)

    def __setattr__(self, name, value):
        raise AttributeError("SplineSpace is immutable")

    @property
    def shape(self):
        return (self.kvs[0].n, self.kvs[1].n)

    def flat_index(self, i1, i2):
        return i1 * self.kvs[1].n + i2

    @property
    def degrees(self):
        return (self.kvs[0].degree, self.kvs[1].degree)


def field_space(patch, degree, levels=0):
    """Degree-``degree`` space on the patch's breakpoints, uniformly refined.

    The space shares the geometry's mesh (maximal smoothness at the initial
    breakpoints) and is h-refined by repeated bisection.
    """
    kvs = []
    for kv in patch.kvs:
        base = make_open_knot_vector(degree, kv.breakpoints)
        kvs.append(uniform_refine(base, levels))
    return SplineSpace(tuple(kvs))


def face_volume_dofs(space, face):
    """Flat dof ids of the univariate row of functions alive on a face."""
    n1, n2 = space.shape
    if face == "south":
        return np.arange(n1) * n2
    if face == "north":
        return np.arange(n1) * n2 + (n2 - 1)
    if face == "west":
        return np.arange(n2)
    if face == "east":
        return (n1 - 1) * n2 + np.arange(n2)
    raise InputError(f"unknown face {face!r}")


@dataclass(frozen=True)
class TraceSpace:
    """Univariate trace of a patch space on one of its faces.

    ``active`` lists the retained univariate indices (the two end functions
    are dropped when homogeneous edge conditions apply) and ``volume_dofs``
    links each retained function to the flat dof of the underlying patch
    space.
    """

    kv: KnotVector
    edge_zero: bool
    active: np.ndarray = field(repr=False)
    volume_dofs: np.ndarray | None = field(repr=False, default=None)
    interface: int | None = None

    @property
    def dim(self):
        return self.active.size

    def evaluate(self, ts, nderiv=0):
        """Rows of shape (dim, len(ts)) for each derivative order."""
        mats = collocation_matrix(self.kv, ts, nderiv)
        rows = [m[:, self.active].T.copy() for m in mats]
        return rows[0] if nderiv == 0 else rows


def build_trace_space(space, face, edge_zero, interface=None):
    """Trace space of a patch space on a face.

    Parameters
    ----------
    space : SplineSpace
        The slave patch's primal space.
    face : str
        Face of the slave patch carrying the interface.
    edge_zero : bool
        Drop the first and last univariate functions (homogeneous edge
        conditions), as used by the stability analysis.
    """
    run = 0 if face in ("south", "north") else 1
    kv = space.kvs[run]
    vol = face_volume_dofs(space, face)
    if edge_zero:
        active = np.arange(1, kv.n - 1)
        vol = vol[1:-1]
    else:
        active = np.arange(kv.n)
    return TraceSpace(kv=kv, edge_zero=edge_zero, active=active, volume_dofs=vol, interface=interface)


def interval_trace_space(kv, edge_zero):
    """Trace space directly on a knot vector (stability bench on (0,1))."""
    active = np.arange(1, kv.n - 1) if edge_zero else np.arange(kv.n)
    return TraceSpace(kv=kv, edge_zero=edge_zero, active=active, volume_dofs=None)


def boundary_modification_coeffs(kv, end):
    """Blending coefficients of the end modification.

    For the start, returns the p coefficients ``alpha_i`` such that
    ``B_i + alpha_i * B_first`` has vanishing p-th derivative on the first
    element (the function drops to degree p-1 there); analogously at the
    other end with the last function.  The p-th derivative of a degree-p
    piecewise polynomial is constant per element, so it is sampled at the
    element midpoint.
    """
    p = kv.degree
    if p < 1:
        raise PreconditionError("boundary modification needs degree >= 1")
    if kv.num_elements < 2:
        raise PreconditionError("boundary modification needs at least 2 elements")
    z = kv.breakpoints
    if end == "start":
        mid = 0.5 * (z[0] + z[1])
    elif end == "end":
        mid = 0.5 * (z[-2] + z[-1])
    else:
        raise InputError("end must be 'start' or 'end'")
    ev = eval_basis(kv, mid, p)
    dp = ev.ders[p]
    lo = ev.span - p
    if end == "start":
        # active functions on the first element are exactly 0..p
        assert lo == 0, "first-element span inconsistent"
        denom = dp[0]
        if abs(denom) < 1e-300:
            raise PreconditionError("end function has vanishing p-th derivative")
        return -dp[1 : p + 1] / denom
    assert lo == kv.n - 1 - p, "last-element span inconsistent"
    denom = dp[p]
    if abs(denom) < 1e-300:
        raise PreconditionError("end function has vanishing p-th derivative")
    return -dp[0:p] / denom


@dataclass(frozen=True)
class MultiplierSpace:
    """Dual space on a slave interface.

    ``rows`` expresses each multiplier basis function in the B-spline basis
    of ``kv``; it is None when the basis is the plain B-spline basis (the
    trimmed variants and the unmodified equal-order space).
    """

    variant: str
    kv: KnotVector
    rows: np.ndarray | None = field(repr=False, default=None)
    modify_start: bool = False
    modify_end: bool = False
    interface: int | None = None

    @property
    def dim(self):
        return self.kv.n if self.rows is None else self.rows.shape[0]

    @property
    def degree(self):
        return self.kv.degree

    def evaluate(self, ts, nderiv=0):
        """Rows of shape (dim, len(ts)) for each derivative order."""
        mats = collocation_matrix(self.kv, ts, nderiv)
        if self.rows is None:
            out = [m.T.copy() for m in mats]
        else:
            out = [self.rows @ m.T for m in mats]
        return out[0] if nderiv == 0 else out


_PM_RE = re.compile(r"^pm(\d+)$")


def build_multiplier_space(trace_kv, variant, modify_start=False, modify_end=False, interface=None):
    """Construct one of the multiplier space families on a trace knot vector.

    ``variant`` is one of ``equal-modified`` (alias ``equal``), ``pm1``,
    ``pm2`` or more generally ``pm<k>``.  The modification flags only apply
    to the equal-order family; trimmed variants need no end treatment.
    """
    p = trace_kv.degree
    if variant in ("equal", "equal-modified"):
        n = trace_kv.n
        keep = np.arange(n)
        if modify_start:
            keep = keep[keep != 0]
        if modify_end:
            keep = keep[keep != n - 1]
        rows = None
        if modify_start or modify_end:
            rows = np.zeros((keep.size, n))
            rows[np.arange(keep.size), keep] = 1.0
            if modify_start:
                alpha = boundary_modification_coeffs(trace_kv, "start")
                for j, i in enumerate(range(1, p + 1)):
                    pos = np.nonzero(keep == i)[0]
                    if pos.size:
                        rows[pos[0], 0] = alpha[j]
            if modify_end:
                beta = boundary_modification_coeffs(trace_kv, "end")
                for j, i in enumerate(range(n - 1 - p, n - 1)):
                    pos = np.nonzero(keep == i)[0]
                    if pos.size:
                        rows[pos[0], n - 1] = beta[j]
        return MultiplierSpace(
            variant="equal-modified",
            kv=trace_kv,
            rows=rows,
            modify_start=modify_start,
            modify_end=modify_end,
            interface=interface,
        )
    m = _PM_RE.match(variant)
    if not m:
        raise InputError(
            f"unknown multiplier variant {variant!r}; expected one of "
            f"{VARIANT_TOKENS} or 'pm<k>'"
        )
    k = int(m.group(1))
    if p < k:
        raise PreconditionError(f"variant pm{k} needs trace degree >= {k}, got {p}")
    kv = trim_knot_vector(trace_kv, k)
    return MultiplierSpace(variant=variant, kv=kv, interface=interface)


def checkerboard_mode(mult):
    """Oscillating coefficient vector exposing the pm1 instability.

    Coefficient i (1-based) is ``(-1)^i (i-1) (n' - i)``; the endpoints
    vanish and the envelope is parabolic.
    """
    if mult.variant != "pm1":
        raise InputError(f"checkerboard mode is defined for pm1, not {mult.variant!r}")
    n = mult.dim
    i = np.arange(1, n + 1)
    return ((-1.0) ** i) * (i - 1) * (n - i)
