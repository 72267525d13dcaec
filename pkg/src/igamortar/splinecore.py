"""Univariate B-spline machinery: knot vectors, basis evaluation, refinement.

All knot vectors are open (end knots repeated ``degree + 1`` times) and live
on the parametric interval [0, 1]; inputs on other intervals are rescaled at
construction.  Evaluation follows the Cox-de Boor recursion; derivatives use
the standard triangular-table algorithm.  Everything here is immutable after
construction and safe to use from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError

# Knots closer than this are merged at construction; multiplicity counting
# must be discrete.
KNOT_SNAP_TOL = 1e-12


class KnotVector:
    """Open univariate knot vector of a fixed polynomial degree.

    Parameters
    ----------
    degree : int
        Polynomial degree p >= 0.
    knots : array_like
        Nondecreasing knot sequence of length ``n + p + 1``.  End knots must
        each appear exactly ``p + 1`` times.  The sequence is affinely
        rescaled to [0, 1] and knots closer than ``KNOT_SNAP_TOL`` are merged.

    Attributes
    ----------
    n : int
        Dimension of the spline space (number of basis functions).
    breakpoints : ndarray
        Distinct knot values (the mesh).
    multiplicities : ndarray
        Repetition count of each breakpoint in the knot sequence.
    """

    __slots__ = ("degree", "knots", "n", "breakpoints", "multiplicities")

    def __init__(self, degree, knots):
        if degree < 0:
            raise PreconditionError("degree must be nonnegative")
        knots = np.asarray(knots, dtype=float).copy()
        if knots.ndim != 1:
            raise PreconditionError("knots must be a 1D sequence")
        if np.any(np.diff(knots) < 0):
            raise PreconditionError("knot sequence must be nondecreasing")
        a, b = knots[0], knots[-1]
        if b - a <= 0:
            raise PreconditionError("knot sequence must span a nonempty interval")
        if a != 0.0 or b != 1.0:
            knots = (knots - a) / (b - a)
        # Snap: merge knots closer than the tolerance so multiplicities are
        # well defined, then re-pin the ends.
        for i in range(1, knots.size):
            if knots[i] - knots[i - 1] < KNOT_SNAP_TOL:
                knots[i] = knots[i - 1]
        knots[knots < KNOT_SNAP_TOL] = 0.0
        knots[knots > 1.0 - KNOT_SNAP_TOL] = 1.0

        p = int(degree)
        n = knots.size - p - 1
        if n < p + 1:
            raise PreconditionError(
                f"need at least {2 * (p + 1)} knots for degree {p}, got {knots.size}"
            )
        if np.any(knots[: p + 1] != 0.0) or np.any(knots[n:] != 1.0):
            raise PreconditionError("knot vector is not open (end multiplicity != degree+1)")
        if knots.size > p + 1 and knots[p + 1] == 0.0:
            raise PreconditionError("knot vector is not open (0 repeated more than degree+1)")
        if n >= 1 and knots[n - 1] == 1.0:
            raise PreconditionError("knot vector is not open (1 repeated more than degree+1)")

        # Interior multiplicity at most the degree keeps the basis at least
        # C0; degree 0 (piecewise constants) allows simple interior knots.
        zeta, mult = np.unique(knots, return_counts=True)
        interior = mult[1:-1]
        max_mult = max(p, 1)
        if np.any(interior > max_mult):
            j = 1 + int(np.argmax(interior > max_mult))
            raise PreconditionError(
                f"interior breakpoint {zeta[j]} has multiplicity {mult[j]} > {max_mult} "
                f"allowed for degree {p}"
            )

        knots.flags.writeable = False
        zeta.flags.writeable = False
        mult.flags.writeable = False
        object.__setattr__(self, "degree", p)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "breakpoints", zeta)
        object.__setattr__(self, "multiplicities", mult)

    def __setattr__(self, name, value):
        raise AttributeError("KnotVector is immutable")

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.degree == other.degree
            and self.knots.size == other.knots.size
            and bool(np.all(self.knots == other.knots))
        )

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))

    @property
    def num_elements(self):
        """Number of nonempty knot spans."""
        return self.breakpoints.size - 1

    @property
    def element_size(self):
        """Largest breakpoint spacing."""
        return float(np.max(np.diff(self.breakpoints)))

    def elements(self):
        """Breakpoint intervals as an ``(E, 2)`` array of (left, right)."""
        z = self.breakpoints
        return np.column_stack([z[:-1], z[1:]])


def make_open_knot_vector(degree, breakpoints=(0.0, 1.0), interior_multiplicity=1):
    """Build an open knot vector of ``degree`` on the given breakpoints.

    Interior breakpoints get the requested multiplicity (default 1, i.e.
    maximal smoothness C^{p-1}).
    """
    z = np.asarray(breakpoints, dtype=float)
    if z.size < 2:
        raise PreconditionError("need at least two breakpoints")
    knots = [z[0]] * (degree + 1)
    for zj in z[1:-1]:
        knots.extend([zj] * interior_multiplicity)
    knots.extend([z[-1]] * (degree + 1))
    return KnotVector(degree, knots)


def uniform_open_knot_vector(degree, num_elements):
    """Open knot vector with ``num_elements`` uniform spans on [0, 1]."""
    return make_open_knot_vector(degree, np.linspace(0.0, 1.0, num_elements + 1))


def find_span(kv, t):
    """Index i (0-based) of the nonempty span with ``knots[i] <= t < knots[i+1]``.

    The right endpoint t = 1 maps to the last nonempty span, so endpoint
    evaluation of open knot vectors is exact.
    """
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"parameter {t} outside [0, 1]")
    p, n, knots = kv.degree, kv.n, kv.knots
    if t >= knots[n]:
        return n - 1
    # binary search on [p, n-1]
    lo, hi = p, n - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if t < knots[mid]:
            hi = mid - 1
        elif t >= knots[mid + 1]:
            lo = mid + 1
        else:
            lo = hi = mid
    return lo


@dataclass(frozen=True)
class BasisEvaluation:
    """Values and derivatives of the p+1 basis functions active at a point.

    ``ders[k, a]`` is the k-th derivative of basis function ``span - p + a``.
    Row 0 holds the values, which are nonnegative and sum to one.
    """

    span: int
    ders: np.ndarray = field(repr=False)

    @property
    def values(self):
        return self.ders[0]

    @property
    def first_dof(self):
        """Global index of the first active basis function."""
        return self.span - (self.ders.shape[1] - 1)


def eval_basis(kv, t, nderiv=0):
    """Evaluate the nonzero basis functions and their derivatives at ``t``.

    Returns a :class:`BasisEvaluation` with ``nderiv + 1`` rows.  Rows for
    derivative orders beyond the degree are exact zeros (not an error).
    """
    if nderiv < 0:
        raise PreconditionError("nderiv must be >= 0")
    span = find_span(kv, t)
    p = kv.degree
    U = kv.knots
    nd = min(nderiv, p)

    # Triangular table of the Cox-de Boor recursion together with the knot
    # differences needed for the derivative formula.
    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = t - U[span + 1 - j]
        right[j] = U[span + j] - t
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nderiv + 1, p + 1))
    ders[0, :] = ndu[:, p]
    if nd > 0:
        a = np.empty((2, p + 1))
        for r in range(p + 1):
            s1, s2 = 0, 1
            a[0, 0] = 1.0
            for k in range(1, nd + 1):
                d = 0.0
                rk = r - k
                pk = p - k
                if r >= k:
                    a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                    d = a[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = k - 1 if r - 1 <= pk else p - r
                for j in range(j1, j2 + 1):
                    a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                    d += a[s2, j] * ndu[rk + j, pk]
                if r <= pk:
                    a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                    d += a[s2, k] * ndu[r, pk]
                ders[k, r] = d
                s1, s2 = s2, s1
        r = p
        for k in range(1, nd + 1):
            ders[k, :] *= r
            r *= p - k
    return BasisEvaluation(span=span, ders=ders)


def collocation_matrix(kv, pts, nderiv=0):
    """Dense collocation matrices of shape ``(len(pts), n)``.

    Returns a list of ``nderiv + 1`` arrays: values, first derivatives, ...
    Dense storage is fine at the univariate sizes used here.
    """
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    mats = [np.zeros((pts.size, kv.n)) for _ in range(nderiv + 1)]
    p = kv.degree
    for i, t in enumerate(pts):
        ev = eval_basis(kv, float(t), nderiv)
        lo = ev.span - p
        for k in range(nderiv + 1):
            mats[k][i, lo : lo + p + 1] = ev.ders[k]
    return mats


def eval_spline(kv, coeffs, t, nderiv=0):
    """Value (and derivatives) of the spline with the given coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    ev = eval_basis(kv, t, nderiv)
    lo = ev.span - kv.degree
    local = coeffs[lo : lo + kv.degree + 1]
    out = ev.ders @ local
    return out if nderiv > 0 else float(out[0])


def insert_knot(kv, coeffs, t):
    """Insert a knot at ``t`` by the Boehm recombination.

    Returns the refined knot vector and the recombined coefficient vector of
    length ``n + 1``; the spline function is unchanged pointwise.
    """
    if not (0.0 < t < 1.0):
        raise DomainError(f"insertion site {t} must lie in (0, 1)")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != kv.n:
        raise PreconditionError(f"expected {kv.n} coefficients, got {coeffs.shape[0]}")
    p, U = kv.degree, kv.knots
    idx = np.searchsorted(kv.breakpoints, t)
    if idx < kv.breakpoints.size and abs(kv.breakpoints[idx] - t) < KNOT_SNAP_TOL:
        t = kv.breakpoints[idx]
        if kv.multiplicities[idx] + 1 > p:
            raise PreconditionError(
                f"inserting {t} would raise its multiplicity above the degree {p}"
            )
    k = find_span(kv, t)
    new_knots = np.insert(U, k + 1, t)
    new_coeffs = np.empty(kv.n + 1)
    new_coeffs[: k - p + 1] = coeffs[: k - p + 1]
    for i in range(k - p + 1, k + 1):
        a = (t - U[i]) / (U[i + p] - U[i])
        new_coeffs[i] = a * coeffs[i] + (1.0 - a) * coeffs[i - 1]
    new_coeffs[k + 1 :] = coeffs[k:]
    return KnotVector(p, new_knots), new_coeffs


def uniform_refine(kv, levels):
    """Bisect every nonempty span ``levels`` times.

    Preserves end and interior multiplicities; the quasi-uniformity ratio of
    the breakpoints is unchanged by bisection.
    """
    if levels < 0:
        raise PreconditionError("levels must be >= 0")
    knots = kv.knots
    p = kv.degree
    for _ in range(levels):
        z = np.unique(knots)
        mids = 0.5 * (z[:-1] + z[1:])
        knots = np.sort(np.concatenate([knots, mids]))
    return KnotVector(p, knots) if levels > 0 else kv


def trim_knot_vector(kv, k):
    """Open knot vector of degree ``p - k`` on the same breakpoints.

    Obtained by removing the first and last ``k`` knots of the sequence.  The
    result spans the classical reduced-degree space associated with repeated
    differentiation, so every interior breakpoint must have multiplicity at
    most ``p - k``.
    """
    p = kv.degree
    if k < 1:
        raise PreconditionError("trim depth k must be >= 1")
    if p < k:
        raise PreconditionError(f"degree {p} too small to trim {k} knots")
    interior = kv.multiplicities[1:-1]
    max_mult = max(p - k, 1)
    bad = np.nonzero(interior > max_mult)[0]
    if bad.size:
        zj = kv.breakpoints[1 + bad[0]]
        raise PreconditionError(
            f"breakpoint {zj} has multiplicity {interior[bad[0]]}; "
            f"trimming {k} knots needs multiplicity <= {max_mult}"
        )
    return KnotVector(p - k, kv.knots[k:-k])


def greville(kv):
    """Greville abscissae (knot averages), the natural interpolation sites."""
    p, U = kv.degree, kv.knots
    if p == 0:
        return 0.5 * (U[:-1] + U[1:])
    return np.array([U[i + 1 : i + p + 1].mean() for i in range(kv.n)])


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval [-1, 1].

    Exact for polynomials up to degree ``2 * order - 1``.
    """

    order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def mapped(self, a, b):
        """Nodes and weights mapped to the interval [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


def gauss_legendre(order):
    """Gauss-Legendre rule with ``order`` points."""
    if order < 1:
        raise PreconditionError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(order=order, nodes=x, weights=w)


def element_quadrature(kv, order):
    """Per-element Gauss points and weights for a knot vector.

    Returns arrays of shape ``(E, order)`` with physical-interval weights.
    """
    rule = gauss_legendre(order)
    elems = kv.elements()
    pts = np.empty((elems.shape[0], order))
    wts = np.empty_like(pts)
    for e, (a, b) in enumerate(elems):
        pts[e], wts[e] = rule.mapped(a, b)
    return pts, wts
