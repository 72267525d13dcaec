"""Element assembly and the global mortar saddle-point system.

Patch matrices (scalar diffusion-reaction and plane-strain elasticity) are
assembled with tensor-product Gauss quadrature, vectorized over all elements
of a patch at once.  The mortar coupling block is integrated on the slave
face; master traces are evaluated through closest-point inversion of each
slave quadrature point, which covers matching, geometrically non-conforming
and non-matching interfaces uniformly.

Dirichlet data is imposed strongly: boundary rows of the coefficient net are
set by univariate interpolation of the data at the Greville points of the
face, and eliminated from the solved system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CoefficientError, GeometryError, InputError, SolverError
from .geometry import JACOBIAN_TOL, invert_point
from .linalg import lu_solve
from .spaces import (
    build_multiplier_space,
    build_trace_space,
    face_volume_dofs,
)
from .splinecore import collocation_matrix, element_quadrature, eval_basis, greville

#: quadrature points per direction for the mass/stiffness integrands
#: (exact for the degree-2p mass term on affine maps)
def _bulk_order(p):
    return p + 1


#: points per slave-face element for coupling, boundary data and error norms
def _face_order(p):
    return p + 2


# ---------------------------------------------------------------------------
# sparse accumulation


class SparseMatrix:
    """Coordinate-format accumulator finalized to compressed row form.

    Buffered triplets are compressed into the running CSR matrix whenever
    they exceed ``flush_at`` entries, which bounds assembly memory on fine
    meshes.
    """

    def __init__(self, shape, flush_at=4_000_000):
        self.shape = shape
        self.flush_at = flush_at
        self._rows = []
        self._cols = []
        self._vals = []
        self._count = 0
        self._acc = None

    def add(self, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        self._rows.append(rows)
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(vals, dtype=float).ravel())
        self._count += rows.size
        if self._count > self.flush_at:
            self._flush()

    def add_dense(self, rows, cols, block):
        """Scatter a dense block with the given row/column index vectors."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        r = np.repeat(rows, cols.size)
        c = np.tile(cols, rows.size)
        self.add(r, c, block)

    def _flush(self):
        if not self._rows:
            return
        r = np.concatenate(self._rows)
        c = np.concatenate(self._cols)
        v = np.concatenate(self._vals)
        M = sp.coo_matrix((v, (r, c)), shape=self.shape).tocsr()
        M.sum_duplicates()
        self._acc = M if self._acc is None else self._acc + M
        self._rows, self._cols, self._vals = [], [], []
        self._count = 0

    def tocsr(self):
        """Finalize: duplicate entries are summed."""
        self._flush()
        return sp.csr_matrix(self.shape) if self._acc is None else self._acc


# ---------------------------------------------------------------------------
# per-patch quadrature data


def _direction_tables(kv, order):
    """Gauss data and basis tables per element of one direction."""
    pts, wts = element_quadrature(kv, order)
    E, q = pts.shape
    p = kv.degree
    vals = np.empty((E, q, p + 1))
    ders = np.empty((E, q, p + 1))
    first = np.empty(E, dtype=np.int64)
    for e in range(E):
        for g in range(q):
            ev = eval_basis(kv, float(pts[e, g]), 1)
            vals[e, g] = ev.ders[0]
            ders[e, g] = ev.ders[1]
        first[e] = ev.span - p
    return pts, wts, vals, ders, first


@dataclass(frozen=True)
class PatchQuadrature:
    """Vectorized quadrature data of one patch: geometry and basis tables.

    Arrays are flattened over elements (E = E1*E2) and quadrature points
    (Q = q1*q2); L = (p1+1)(p2+1) local functions per element.
    """

    X: np.ndarray = field(repr=False)  # (E, Q, 2) physical points
    wdet: np.ndarray = field(repr=False)  # (E, Q) weights times |det J|
    B: np.ndarray = field(repr=False)  # (E, Q, L) basis values
    Gx: np.ndarray = field(repr=False)  # (E, Q, L) physical x-derivatives
    Gy: np.ndarray = field(repr=False)  # (E, Q, L)
    dofs: np.ndarray = field(repr=False)  # (E, L) flat patch dof indices


def iter_patch_quadrature(patch, space, order=None, max_elements=4096):
    """Yield :class:`PatchQuadrature` blocks over bands of element rows.

    Banding bounds the memory of the vectorized tables on fine meshes; each
    band covers a contiguous range of first-direction elements crossed with
    all second-direction elements.
    """
    kv1, kv2 = space.kvs
    o1 = order or _bulk_order(kv1.degree)
    o2 = order or _bulk_order(kv2.degree)
    pts1, wts1, V1, D1, first1 = _direction_tables(kv1, o1)
    pts2, wts2, V2, D2, first2 = _direction_tables(kv2, o2)
    E1, q1 = pts1.shape
    E2, q2 = pts2.shape
    n2 = kv2.n
    dof2 = first2[:, None] + np.arange(kv2.degree + 1)
    band = max(1, max_elements // E2)
    det_sign = 0.0

    for lo in range(0, E1, band):
        hi = min(lo + band, E1)
        nb = hi - lo
        Xg, Jg = patch.evaluate_grid(pts1[lo:hi].ravel(), pts2.ravel(), nderiv=1)
        det = Jg[..., 0, 0] * Jg[..., 1, 1] - Jg[..., 0, 1] * Jg[..., 1, 0]
        if np.any(np.abs(det) <= JACOBIAN_TOL):
            raise GeometryError("Jacobian determinant vanishes at a quadrature point")
        if det_sign == 0.0:
            det_sign = np.sign(det.flat[0])
        if np.any(np.sign(det) != det_sign):
            raise GeometryError("Jacobian determinant changes sign on the patch")

        def to_eq(arr):
            # (nb*q1, E2*q2, ...) -> (nb*E2, q1*q2, ...)
            a = arr.reshape((nb, q1, E2, q2) + arr.shape[2:])
            a = np.moveaxis(a, 2, 1)
            return a.reshape((nb * E2, q1 * q2) + arr.shape[2:])

        X = to_eq(Xg)
        J = to_eq(Jg)
        det = to_eq(det)

        def outer(A1, A2):
            out = A1[lo:hi, None, :, None, :, None] * A2[None, :, None, :, None, :]
            return out.reshape(nb * E2, q1 * q2, A1.shape[2] * A2.shape[2])

        B = outer(V1, V2)
        Bu = outer(D1, V2)
        Bv = outer(V1, D2)
        a = J[..., 0, 0]
        b = J[..., 0, 1]
        c = J[..., 1, 0]
        d = J[..., 1, 1]
        # physical gradients via J^{-T}
        Gx = (d[..., None] * Bu - c[..., None] * Bv) / det[..., None]
        Gy = (-b[..., None] * Bu + a[..., None] * Bv) / det[..., None]
        w = (wts1[lo:hi, None, :, None] * wts2[None, :, None, :]).reshape(nb * E2, q1 * q2)
        dof1 = first1[lo:hi, None] + np.arange(kv1.degree + 1)
        dofs = (dof1[:, None, :, None] * n2 + dof2[None, :, None, :]).reshape(
            nb * E2, (kv1.degree + 1) * (kv2.degree + 1)
        )
        yield PatchQuadrature(X=X, wdet=w * np.abs(det), B=B, Gx=Gx, Gy=Gy, dofs=dofs)


def patch_quadrature(patch, space, order=None):
    """All-at-once quadrature tables (small meshes and tests)."""
    blocks = list(iter_patch_quadrature(patch, space, order, max_elements=1 << 62))
    return blocks[0]


def _bilinear_blocks(Pa, w, Pb):
    """Per-element blocks int Pa_a w Pb_b via batched matmul."""
    return np.matmul(np.swapaxes(Pa * w[:, :, None], 1, 2), Pb)


def _sample(coefficient, X):
    """Coefficient values at physical points; constants broadcast."""
    if callable(coefficient):
        return np.asarray(coefficient(X), dtype=float)
    return np.full(X.shape[:-1], float(coefficient))


# ---------------------------------------------------------------------------
# patch bilinear forms


def assemble_scalar(patch, space, alpha=1.0, beta=0.0, source=0.0, quad=None):
    """Galerkin matrix and load vector of the diffusion-reaction form.

    ``a(u, v) = int alpha grad u . grad v + beta u v`` over the mapped patch,
    with the load ``int source v``.  Raises if alpha is nonpositive at any
    quadrature point.
    """
    blocks_iter = [quad] if quad is not None else iter_patch_quadrature(patch, space)
    A = SparseMatrix((space.dim, space.dim))
    f = np.zeros(space.dim)
    want_source = callable(source) or bool(source)
    for pq in blocks_iter:
        av = _sample(alpha, pq.X)
        if np.any(av <= 0):
            raise CoefficientError("diffusion coefficient must be positive at quadrature points")
        bv = _sample(beta, pq.X)
        if np.any(bv < 0):
            raise CoefficientError("reaction coefficient must be nonnegative")
        wa = pq.wdet * av
        blk = _bilinear_blocks(pq.Gx, wa, pq.Gx)
        blk += _bilinear_blocks(pq.Gy, wa, pq.Gy)
        if np.any(bv != 0.0):
            blk += _bilinear_blocks(pq.B, pq.wdet * bv, pq.B)
        rows = np.broadcast_to(pq.dofs[:, :, None], blk.shape)
        cols = np.broadcast_to(pq.dofs[:, None, :], blk.shape)
        A.add(rows, cols, blk)
        if want_source:
            fe = np.einsum("eqa,eq->ea", pq.B, pq.wdet * _sample(source, pq.X))
            np.add.at(f, pq.dofs.ravel(), fe.ravel())
    return A, f


def assemble_elasticity(patch, space, lam, mu, body=None, quad=None):
    """Plane-strain elasticity: stress lam tr(eps) I + 2 mu eps.

    Vector dofs are component-major: component c of scalar function i has
    flat index ``c * space.dim + i``.
    """
    if not (callable(mu) or mu > 0) or (not callable(lam) and lam < 0):
        raise CoefficientError("need mu > 0 and lam >= 0")
    blocks_iter = [quad] if quad is not None else iter_patch_quadrature(patch, space)
    A = SparseMatrix((2 * space.dim, 2 * space.dim))
    f = np.zeros(2 * space.dim)
    for pq in blocks_iter:
        lv = _sample(lam, pq.X)
        mv = _sample(mu, pq.X)
        w = pq.wdet
        b00 = _bilinear_blocks(pq.Gx, w * (lv + 2 * mv), pq.Gx)
        b00 += _bilinear_blocks(pq.Gy, w * mv, pq.Gy)
        b11 = _bilinear_blocks(pq.Gy, w * (lv + 2 * mv), pq.Gy)
        b11 += _bilinear_blocks(pq.Gx, w * mv, pq.Gx)
        b01 = _bilinear_blocks(pq.Gx, w * lv, pq.Gy)
        b01 += _bilinear_blocks(pq.Gy, w * mv, pq.Gx)
        shape = b00.shape
        for (ci, cj), blk in (((0, 0), b00), ((1, 1), b11), ((0, 1), b01)):
            rows = np.broadcast_to(pq.dofs[:, :, None], shape) + ci * space.dim
            cols = np.broadcast_to(pq.dofs[:, None, :], shape) + cj * space.dim
            A.add(rows, cols, blk)
            if ci != cj:
                # mirror block: swapping the index arrays transposes in place
                A.add(cols, rows, blk)
        if body is not None:
            bv = (
                np.asarray(body(pq.X), dtype=float)
                if callable(body)
                else np.broadcast_to(np.asarray(body, dtype=float), pq.X.shape)
            )
            for c in range(2):
                fe = np.einsum("eqa,eq->ea", pq.B, w * bv[..., c])
                np.add.at(f, pq.dofs.ravel() + c * space.dim, fe.ravel())
    return A, f


def assemble_neumann(patch, space, face, data, f, components=2):
    """Add the boundary flux/traction integral of one face to ``f``.

    ``data(X, N)`` receives physical points and unit outward normals and
    returns the scalar flux (scalar problems) or the traction vectors.
    """
    run = 0 if face in ("south", "north") else 1
    kv = space.kvs[run]
    pts, wts = element_quadrature(kv, _face_order(kv.degree))
    ts = pts.ravel()
    w = wts.ravel()
    curve = patch.edge_curve(face)
    X = curve.evaluate(ts)
    jac = curve.measure(ts)
    N = patch.outward_normal(face, ts)
    g = np.asarray(data(X, N), dtype=float)
    vals = collocation_matrix(kv, ts)[0]  # (m, n)
    vol = face_volume_dofs(space, face)
    if g.ndim == 1:
        f[vol] += vals.T @ (w * jac * g)
    else:
        for c in range(components):
            f[vol + c * space.dim] += vals.T @ (w * jac * g[:, c])
    return f


# ---------------------------------------------------------------------------
# mortar coupling


@dataclass(frozen=True)
class CouplingBlock:
    """One interface's coupling rows, split by side.

    The full block acts as ``+master - slave`` on the primal vector (the
    jump is master value minus slave value).  ``inversion_gap`` is the
    largest closest-point residual met on the master side; it vanishes for
    geometrically matching interfaces.
    """

    Bm: np.ndarray = field(repr=False)  # (n_mult, n_master_face)
    Bs: np.ndarray = field(repr=False)  # (n_mult, n_slave_face)
    master_dofs: np.ndarray = field(repr=False)
    slave_dofs: np.ndarray = field(repr=False)
    inversion_gap: float = 0.0


def assemble_coupling(interface, trace, mult, master_patch, master_space, slave_patch, slave_space):
    """Mortar coupling integrals of one interface.

    Quadrature lives on the slave-face elements with degree + 2 points per
    element; the master integrand is evaluated by closest-point inversion of
    every slave quadrature point and is smooth only piecewise, so this rule
    is inexact by design.
    """
    kv_s = trace.kv
    pts, wts = element_quadrature(kv_s, _face_order(kv_s.degree))
    ts = pts.ravel()
    w = wts.ravel()
    curve = slave_patch.edge_curve(interface.slave_face)
    X = curve.evaluate(ts)
    jac = curve.measure(ts)
    wphys = w * jac

    Mu = mult.evaluate(ts)  # (n', m)
    Ws = trace.evaluate(ts)  # (n_s, m)

    run_m = 0 if interface.master_face in ("south", "north") else 1
    kv_m = master_space.kvs[run_m]
    s_params = np.empty(ts.size)
    gap = 0.0
    for k, x in enumerate(X):
        res = invert_point(master_patch, x, face=interface.master_face)
        s_params[k] = res.param
        gap = max(gap, res.residual)
    Wm = collocation_matrix(kv_m, s_params)[0].T  # (n_m, m)

    Bm = (Mu * wphys) @ Wm.T
    Bs = (Mu * wphys) @ Ws.T
    return CouplingBlock(
        Bm=Bm,
        Bs=Bs,
        master_dofs=face_volume_dofs(master_space, interface.master_face),
        slave_dofs=trace.volume_dofs,
        inversion_gap=gap,
    )


def cross_point_flags(domain, l, tol=1e-8):
    """(modify_start, modify_end) of interface ``l`` from the topology.

    An interface end is a cross point when it touches another interface or a
    Dirichlet-tagged face; equal-order multipliers are end modified there.
    Ends on Neumann/free boundary need no modification.
    """
    itf = domain.interfaces[l]
    curve = domain.patches[itf.slave].edge_curve(itf.slave_face)
    ends = curve.evaluate(np.array([0.0, 1.0]))
    flags = []
    for x in ends:
        hit = False
        for j, other in enumerate(domain.interfaces):
            if j == l:
                continue
            res = invert_point(
                domain.patches[other.slave], x, face=other.slave_face
            )
            if res.residual <= tol:
                hit = True
                break
        if not hit:
            for (k, face), tag in domain.boundary.items():
                if tag.get("type") != "dirichlet":
                    continue
                res = invert_point(domain.patches[k], x, face=face)
                if res.residual <= tol:
                    hit = True
                    break
        flags.append(hit)
    return tuple(flags)


# ---------------------------------------------------------------------------
# global system


@dataclass
class DofMap:
    """Global numbering: primal dofs per patch, then multiplier dofs.

    Primal dofs of patch k occupy ``patch_offsets[k] + c * dim_k + flat``
    for each component c; interface l's multipliers start at
    ``num_primal + multiplier_offsets[l]``.
    """

    patch_offsets: list
    patch_dims: list
    components: int
    multiplier_offsets: list
    multiplier_dims: list

    @property
    def num_primal(self):
        return self.patch_offsets[-1] + self.components * self.patch_dims[-1]

    @property
    def num_multiplier(self):
        if not self.multiplier_offsets:
            return 0
        return self.multiplier_offsets[-1] + self.components * self.multiplier_dims[-1]

    def patch_slice(self, k):
        lo = self.patch_offsets[k]
        return slice(lo, lo + self.components * self.patch_dims[k])

    def multiplier_slice(self, l):
        lo = self.multiplier_offsets[l]
        return slice(lo, lo + self.components * self.multiplier_dims[l])


@dataclass
class SaddleSystem:
    """Block KKT system: primal block A, coupling B, load f.

    The full system matrix is ``[[A, B^T], [B, 0]]``; A is symmetric
    positive semidefinite before Dirichlet elimination.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    f: np.ndarray
    dofmap: DofMap
    dirichlet: dict
    traces: list
    multipliers: list
    coupling_gaps: list

    def symmetry_defect(self):
        d = self.A - self.A.T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())


@dataclass
class MortarSolution:
    """Solved coefficients and solver diagnostics."""

    u: np.ndarray
    lam: np.ndarray
    system: SaddleSystem
    kkt_residual: float
    constraint_residual: float

    def patch_coefficients(self, k):
        """Coefficient array of patch k: (n1, n2) scalar, (2, n1, n2) vector."""
        dm = self.system.dofmap
        blk = self.u[dm.patch_slice(k)]
        dim = dm.patch_dims[k]
        if dm.components == 1:
            return blk
        return blk.reshape(2, dim)

    def multiplier_coefficients(self, l):
        dm = self.system.dofmap
        blk = self.lam[dm.multiplier_slice(l)]
        if dm.components == 1:
            return blk
        return blk.reshape(2, dm.multiplier_dims[l])


@dataclass(frozen=True)
class ProblemData:
    """Resolved manufactured/user data feeding one assembly.

    ``source(X)`` is the volumetric load; ``dirichlet(X)`` boundary values;
    ``neumann(X, N)`` the flux (scalar) or traction (elasticity).  Boundary
    tags with an explicit numeric ``value`` override these callables.
    """

    source: object = 0.0
    dirichlet: object = None
    neumann: object = None


def _tag_data(tag, default, kind):
    value = tag.get("value", None)
    if value is None or value == "exact":
        if default is None:
            raise InputError(f"boundary tag {tag} needs a value or problem data")
        return default
    if callable(value):
        return value
    const = float(value)
    if kind == "dirichlet":
        return lambda X: np.full(np.asarray(X).shape[:-1], const)
    return lambda X, N: np.full(np.asarray(X).shape[:-1], const)


def dirichlet_values(domain, spaces, data, components):
    """Strong boundary values by Greville interpolation, per tagged face.

    Returns a dict mapping global primal dof -> value.  Face data is
    interpolated along the face at the Greville points of its knot vector,
    which is exact whenever the data is in the trace space.
    """
    offsets = np.cumsum([0] + [components * s.dim for s in spaces[:-1]])
    values = {}
    for (k, face), tag in sorted(domain.boundary.items()):
        if tag.get("type") != "dirichlet":
            continue
        g = _tag_data(tag, data.dirichlet, "dirichlet")
        space = spaces[k]
        run = 0 if face in ("south", "north") else 1
        kv = space.kvs[run]
        ts = greville(kv)
        X = domain.patches[k].edge_curve(face).evaluate(ts)
        vals = np.asarray(g(X), dtype=float)
        C = collocation_matrix(kv, ts)[0]
        vol = face_volume_dofs(space, face)
        comps = tag.get("components", list(range(components)))
        for c in comps:
            rhs = vals if vals.ndim == 1 else vals[:, c]
            coeffs = np.linalg.solve(C, rhs)
            for i, dof in enumerate(vol):
                gdof = offsets[k] + c * space.dim + dof
                if gdof in values and abs(values[gdof] - coeffs[i]) > 1e-9 * (
                    1 + abs(coeffs[i])
                ):
                    raise InputError(
                        f"conflicting Dirichlet values at dof {gdof} "
                        f"({values[gdof]} vs {coeffs[i]})"
                    )
                values[gdof] = coeffs[i]
    return values


def build_system(domain, spaces, variant, data=None, modify_override=None):
    """Assemble the global mortar saddle-point system.

    Parameters
    ----------
    domain : MultipatchDomain
    spaces : list of SplineSpace, one per patch
    variant : multiplier family token ("equal-modified", "pm1", "pm2", ...)
    data : ProblemData
    modify_override : optional (bool, bool) forcing the equal-order end
        modification flags on every interface (testing hook).
    """
    data = data or ProblemData()
    components = 1 if domain.kind == "scalar" else 2
    dims = [s.dim for s in spaces]
    offsets = list(np.cumsum([0] + [components * d for d in dims[:-1]]).astype(int))
    N_V = offsets[-1] + components * dims[-1]
    f = np.zeros(N_V)

    patch_blocks = []
    for k, patch in enumerate(domain.patches):
        coeff = domain.coefficients[k]
        if domain.kind == "scalar":
            Ak, fk = assemble_scalar(
                patch,
                spaces[k],
                alpha=coeff.get("alpha", 1.0),
                beta=coeff.get("beta", 0.0),
                source=data.source,
            )
        else:
            Ak, fk = assemble_elasticity(
                patch,
                spaces[k],
                lam=coeff.get("lam", 1.0),
                mu=coeff.get("mu", 1.0),
                body=None if data.source == 0.0 else data.source,
            )
        patch_blocks.append(Ak.tocsr())
        f[offsets[k] : offsets[k] + components * dims[k]] += fk
    A_csr = sp.block_diag(patch_blocks, format="csr")

    for (k, face), tag in sorted(domain.boundary.items()):
        if tag.get("type") != "neumann":
            continue
        g = _tag_data(tag, data.neumann, "neumann")
        fk = np.zeros(components * dims[k])
        assemble_neumann(domain.patches[k], spaces[k], face, g, fk, components)
        f[offsets[k] : offsets[k] + components * dims[k]] += fk

    traces = []
    multipliers = []
    blocks = []
    mult_offsets = []
    mult_dims = []
    off = 0
    for l, itf in enumerate(domain.interfaces):
        trace = build_trace_space(spaces[itf.slave], itf.slave_face, edge_zero=False, interface=l)
        if modify_override is not None:
            ms, me = modify_override
        else:
            ms, me = cross_point_flags(domain, l)
        mult = build_multiplier_space(
            trace.kv, variant, modify_start=ms, modify_end=me, interface=l
        )
        blk = assemble_coupling(
            itf,
            trace,
            mult,
            domain.patches[itf.master],
            spaces[itf.master],
            domain.patches[itf.slave],
            spaces[itf.slave],
        )
        traces.append(trace)
        multipliers.append(mult)
        blocks.append(blk)
        mult_offsets.append(off)
        mult_dims.append(mult.dim)
        off += components * mult.dim

    N_M = off
    B = SparseMatrix((N_M, N_V))
    for l, (itf, mult, blk) in enumerate(zip(domain.interfaces, multipliers, blocks)):
        for c in range(components):
            rows = np.arange(mult.dim) + mult_offsets[l] + c * mult.dim
            mcols = offsets[itf.master] + c * dims[itf.master] + blk.master_dofs
            scols = offsets[itf.slave] + c * dims[itf.slave] + blk.slave_dofs
            B.add_dense(rows, mcols, blk.Bm)
            B.add_dense(rows, scols, -blk.Bs)

    dofmap = DofMap(
        patch_offsets=offsets,
        patch_dims=dims,
        components=components,
        multiplier_offsets=mult_offsets,
        multiplier_dims=mult_dims,
    )
    system = SaddleSystem(
        A=A_csr,
        B=B.tocsr(),
        f=f,
        dofmap=dofmap,
        dirichlet=dirichlet_values(domain, spaces, data, components),
        traces=traces,
        multipliers=multipliers,
        coupling_gaps=[b.inversion_gap for b in blocks],
    )
    return system


def apply_dirichlet(system):
    """Strong elimination of the Dirichlet dofs.

    Returns (K, rhs, free, u_fixed): the reduced KKT matrix and right-hand
    side, the free primal dof indices, and the full primal vector with the
    prescribed values filled in.
    """
    N_V = system.A.shape[0]
    N_M = system.B.shape[0]
    fixed = np.fromiter(system.dirichlet.keys(), dtype=np.int64, count=len(system.dirichlet))
    u_fixed = np.zeros(N_V)
    if fixed.size:
        u_fixed[fixed] = np.fromiter(system.dirichlet.values(), dtype=float, count=fixed.size)
    free = np.setdiff1d(np.arange(N_V), fixed)
    A_ff = system.A[free][:, free]
    B_f = system.B[:, free]
    rhs_u = system.f[free]
    rhs_l = np.zeros(N_M)
    if fixed.size:
        rhs_u = rhs_u - system.A[free][:, fixed] @ u_fixed[fixed]
        rhs_l = -(system.B[:, fixed] @ u_fixed[fixed])
    K = sp.bmat([[A_ff, B_f.T], [B_f, None]], format="csc") if N_M else A_ff.tocsc()
    rhs = np.concatenate([rhs_u, rhs_l]) if N_M else rhs_u
    return K, rhs, free, u_fixed


def solve_saddle(system):
    """Direct factorization of the reduced saddle system.

    Raises :class:`SolverError` on factorization failure (rank-deficient
    coupling included) and reports the KKT and constraint residuals.
    """
    K, rhs, free, u = apply_dirichlet(system)
    N_M = system.B.shape[0]
    try:
        x = lu_solve(K, rhs)
    except Exception as exc:
        raise SolverError(
            f"saddle factorization failed ({exc}); the coupling block of an "
            f"interface may be rank deficient"
        ) from exc
    nf = free.size
    u[free] = x[:nf]
    lam = x[nf:] if N_M else np.zeros(0)

    kkt = float(np.abs(K @ x - rhs).max())
    scale = max(float(np.abs(rhs).max()), 1e-300)
    uscale = max(float(np.abs(u).max()), 1e-300)
    constraint = float(np.abs(system.B @ u).max()) / uscale if N_M else 0.0
    return MortarSolution(
        u=u,
        lam=lam,
        system=system,
        kkt_residual=kkt / scale,
        constraint_residual=constraint,
    )
