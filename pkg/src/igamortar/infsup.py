"""Matrix-level inf-sup stability bench for trace/multiplier pairings.

The discrete inf-sup value of a pairing is computed from the three L2 inner
product matrices on the interface: with G the multiplier/trace cross mass,
S the multiplier mass and T the trace mass, the squared inf-sup constant is
the smallest eigenvalue of the generalized problem

    (G T^{-1} G^T) x = lambda S x,

the Chapelle-Bathe matrix test.  ``sup_ratio`` evaluates the supremum for a
fixed multiplier direction in closed form, which is how the checkerboard
instability is quantified.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InputError, LinAlgError
from .linalg import gen_eig_sym
from .spaces import build_multiplier_space, interval_trace_space
from .splinecore import element_quadrature, uniform_open_knot_vector, uniform_refine


@dataclass(frozen=True)
class GramTriple:
    """L2 inner product matrices of one trace/multiplier pairing.

    G has shape (dim multiplier, dim trace); S and T are the symmetric
    positive definite mass matrices of the two spaces.  ``measure`` records
    whether the integrals use the parametric Lebesgue measure or the
    physical surface measure of a mapped interface.
    """

    G: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    measure: str = "parametric"
    interface: int | None = None


def build_grams(trace, mult, measure="parametric", edge_jacobian=None, interface=None):
    """Assemble the Gram triple of a pairing on one interface.

    Parameters
    ----------
    trace : TraceSpace
    mult : MultiplierSpace
    measure : "parametric" or "physical"
        Parametric integrands are polynomial and integrated exactly with
        p+1 Gauss points per element; the physical measure weight is smooth
        but not polynomial, so p+2 points are used.
    edge_jacobian : callable, required for the physical measure
        Maps an array of face parameters to the arc-length factor.
    """
    if measure not in ("parametric", "physical"):
        raise InputError(f"unknown measure {measure!r}")
    # union of breakpoints so every integrand is smooth per element
    kv_fine = trace.kv if trace.kv.num_elements >= mult.kv.num_elements else mult.kv
    q = max(trace.kv.degree, mult.kv.degree) + (1 if measure == "parametric" else 2)
    pts, wts = element_quadrature(kv_fine, q)
    ts = pts.ravel()
    w = wts.ravel()
    if measure == "physical":
        if edge_jacobian is None:
            raise InputError("physical measure needs an edge_jacobian callable")
        w = w * np.asarray(edge_jacobian(ts), dtype=float)
    W = trace.evaluate(ts)
    Mu = mult.evaluate(ts)
    G = (Mu * w) @ W.T
    S = (Mu * w) @ Mu.T
    T = (W * w) @ W.T
    S = 0.5 * (S + S.T)
    T = 0.5 * (T + T.T)
    return GramTriple(G=G, S=S, T=T, measure=measure, interface=interface)


def _schur(g):
    """G T^{-1} G^T, symmetrized."""
    try:
        c = cho_factor(g.T)
    except np.linalg.LinAlgError as exc:
        raise LinAlgError("trace mass matrix is not positive definite") from exc
    A = g.G @ cho_solve(c, g.G.T)
    return 0.5 * (A + A.T)


def infsup_constant(g):
    """Discrete inf-sup value of the pairing (nonnegative)."""
    A = _schur(g)
    w = gen_eig_sym(A, g.S)
    return float(np.sqrt(max(w[0], 0.0)))


def sup_ratio(g, mu):
    """Supremum of the coupling ratio in the fixed multiplier direction.

    Closed form sqrt(mu^T G T^{-1} G^T mu) / sqrt(mu^T S mu); this upper
    bounds the inf-sup constant for every nonzero mu.
    """
    mu = np.asarray(mu, dtype=float)
    if not np.any(mu):
        raise InputError("multiplier direction must be nonzero")
    try:
        c = cho_factor(g.T)
    except np.linalg.LinAlgError as exc:
        raise LinAlgError("trace mass matrix is not positive definite") from exc
    v = g.G.T @ mu
    num = float(v @ cho_solve(c, v))
    den = float(mu @ g.S @ mu)
    return float(np.sqrt(max(num, 0.0) / den))


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of an h-refinement sweep of inf-sup constants."""

    degrees: tuple
    variants: tuple
    levels: int
    bc_mode: str = "homogeneous"  # or "none"
    measure: str = "parametric"
    initial_elements: int = 2
    modify: bool | None = None  # equal-order end modification override


@dataclass(frozen=True)
class SweepResult:
    """Rows of (degree, variant, level, h, constant)."""

    rows: list

    def constants(self, degree, variant):
        """Constants of one (degree, variant) cell in level order."""
        sel = [r for r in self.rows if r["degree"] == degree and r["variant"] == variant]
        sel.sort(key=lambda r: r["level"])
        return np.array([r["h"] for r in sel]), np.array([r["constant"] for r in sel])

    def to_csv(self, path_or_buffer):
        buf = path_or_buffer if hasattr(path_or_buffer, "write") else io.StringIO()
        buf.write("degree,variant,level,h,constant\n")
        for r in self.rows:
            buf.write(f"{r['degree']},{r['variant']},{r['level']},{r['h']:.10g},{r['constant']:.12g}\n")
        if buf is not path_or_buffer:
            with open(path_or_buffer, "w") as fh:
                fh.write(buf.getvalue())


def unit_interval_pairing(degree, variant, num_elements, bc_mode="homogeneous", modify=None):
    """Trace and multiplier space of a pairing on a uniform unit interval.

    By default equal-order multipliers are end modified exactly when the
    trace carries homogeneous conditions there (the interface-end rule used
    in solves); pass ``modify`` to override.
    """
    kv = uniform_open_knot_vector(degree, num_elements)
    edge_zero = bc_mode == "homogeneous"
    trace = interval_trace_space(kv, edge_zero=edge_zero)
    if modify is None:
        modify = edge_zero
    modify = modify and variant in ("equal", "equal-modified")
    mult = build_multiplier_space(kv, variant, modify_start=modify, modify_end=modify)
    return trace, mult


def sweep(config):
    """Run the inf-sup sweep of ``config`` on the unit interval.

    Cells are independent; results are ordered by (degree, variant, level).
    """
    rows = []
    for degree in config.degrees:
        for variant in config.variants:
            for level in range(config.levels):
                nel = config.initial_elements * 2**level
                trace, mult = unit_interval_pairing(
                    degree, variant, nel, config.bc_mode, modify=config.modify
                )
                g = build_grams(trace, mult, measure=config.measure)
                rows.append(
                    {
                        "degree": degree,
                        "variant": variant,
                        "level": level,
                        "h": 1.0 / nel,
                        "constant": infsup_constant(g),
                    }
                )
    return SweepResult(rows=rows)


def checkerboard_sweep(degree, levels, initial_elements=2):
    """sup_ratio of the oscillating pm1 mode over uniform refinements.

    The trace space carries no boundary conditions (the direct supremum is
    taken over the full spline space).
    """
    from .spaces import checkerboard_mode

    rows = []
    for level in range(levels):
        nel = initial_elements * 2**level
        trace, mult = unit_interval_pairing(degree, "pm1", nel, bc_mode="none")
        g = build_grams(trace, mult)
        mu = checkerboard_mode(mult)
        rows.append(
            {
                "degree": degree,
                "variant": "pm1-checkerboard",
                "level": level,
                "h": 1.0 / nel,
                "constant": sup_ratio(g, mu),
            }
        )
    return SweepResult(rows=rows)


def loglog_slope(h, c):
    """Least-squares slope of log(c) against log(h)."""
    h = np.asarray(h, dtype=float)
    c = np.asarray(c, dtype=float)
    keep = c > 1e-14
    if keep.sum() < 2:
        raise InputError("need at least two positive constants for a slope")
    return float(np.polyfit(np.log(h[keep]), np.log(c[keep]), 1)[0])
