"""NURBS patch geometry and multipatch domain descriptions.

A patch is the image of the unit square under a rational tensor-product map
built from a control net and positive weights.  Domains are collections of
patches glued along declared interfaces; each interface names a master and a
slave side, and the slave side is always a whole parametric face of its
patch.  Master-side evaluation goes through closest-point inversion, which
also covers geometrically non-matching interfaces.

Faces are named ``south`` (zeta2 = 0), ``east`` (zeta1 = 1), ``north``
(zeta2 = 1) and ``west`` (zeta1 = 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError, InputError, InversionError
from .splinecore import KnotVector, collocation_matrix

FACES = ("south", "east", "north", "west")

#: minimum |det J| before geometry counts as degenerate
JACOBIAN_TOL = 1e-10

#: Newton tolerance on the parametric increment for point inversion
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
#: samples for the grid-search seed along a face
SEED_SAMPLES = 32


def _face_axis(face):
    """(running direction, fixed direction, fixed value) of a face."""
    if face == "south":
        return 0, 1, 0.0
    if face == "north":
        return 0, 1, 1.0
    if face == "west":
        return 1, 0, 0.0
    if face == "east":
        return 1, 0, 1.0
    raise InputError(f"unknown face {face!r}, expected one of {FACES}")


class NurbsPatch:
    """Tensor-product NURBS patch in the plane.

    Parameters
    ----------
    kvs : (KnotVector, KnotVector)
        Per-direction knot vectors of the geometry map.
    control_points : array (n1, n2, 2)
        Control net in physical coordinates.
    weights : array (n1, n2), optional
        Positive rational weights; all ones gives a plain B-spline patch.
    """

    __slots__ = ("kvs", "control_points", "weights", "_homog")

    def __init__(self, kvs, control_points, weights=None):
        kv1, kv2 = kvs
        C = np.asarray(control_points, dtype=float)
        if C.shape != (kv1.n, kv2.n, 2):
            raise GeometryError(
                f"control net shape {C.shape} does not match knot vectors "
                f"({kv1.n} x {kv2.n} x 2 expected)"
            )
        if weights is None:
            w = np.ones((kv1.n, kv2.n))
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (kv1.n, kv2.n):
                raise GeometryError(f"weight array shape {w.shape} != ({kv1.n}, {kv2.n})")
        if np.any(w <= 0):
            raise GeometryError("NURBS weights must be positive")
        # homogeneous net (w*x, w*y, w); immutable after construction
        H = np.empty((kv1.n, kv2.n, 3))
        H[..., 0] = w * C[..., 0]
        H[..., 1] = w * C[..., 1]
        H[..., 2] = w
        for arr in (C, w, H):
            arr.flags.writeable = False
        object.__setattr__(self, "kvs", (kv1, kv2))
        object.__setattr__(self, "control_points", C)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_homog", H)

    def __setattr__(self, name, value):
        raise AttributeError("NurbsPatch is immutable")

    # -- evaluation ---------------------------------------------------------

    def evaluate_grid(self, u, v, nderiv=0):
        """Map and derivatives on the tensor grid ``u x v``.

        Returns
        -------
        X : ndarray (m1, m2, 2)
            Physical points.
        J : ndarray (m1, m2, 2, 2), only when ``nderiv >= 1``
            Jacobian, columns are the partials along each direction.
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        Cu = collocation_matrix(self.kvs[0], u, nderiv)
        Cv = collocation_matrix(self.kvs[1], v, nderiv)
        H = self._homog

        def tensor(a, b):
            return np.stack([Cu[a] @ H[..., c] @ Cv[b].T for c in range(3)], axis=-1)

        S = tensor(0, 0)
        W = S[..., 2]
        if np.any(W <= 0):
            raise GeometryError("weight function is not positive on the sample grid")
        X = S[..., :2] / W[..., None]
        if nderiv == 0:
            return X
        Su = tensor(1, 0)
        Sv = tensor(0, 1)
        # columns of J are the partials along each parametric direction
        J = np.empty(X.shape[:2] + (2, 2))
        J[..., 0] = (Su[..., :2] - X * Su[..., 2:]) / W[..., None]
        J[..., 1] = (Sv[..., :2] - X * Sv[..., 2:]) / W[..., None]
        return X, J

    def map_point(self, zeta):
        """Physical image of a parametric point."""
        z1, z2 = zeta
        if not (0.0 <= z1 <= 1.0 and 0.0 <= z2 <= 1.0):
            raise DomainError(f"parametric point {zeta} outside the unit square")
        return self.evaluate_grid([z1], [z2])[0, 0]

    def jacobian(self, zeta):
        """2x2 Jacobian at a parametric point; raises on degeneracy."""
        z1, z2 = zeta
        if not (0.0 <= z1 <= 1.0 and 0.0 <= z2 <= 1.0):
            raise DomainError(f"parametric point {zeta} outside the unit square")
        _, J = self.evaluate_grid([z1], [z2], nderiv=1)
        J = J[0, 0]
        if abs(np.linalg.det(J)) <= JACOBIAN_TOL:
            raise GeometryError(f"singular Jacobian at {tuple(zeta)}")
        return J

    def check_regularity(self, samples_per_element=3):
        """Verify |det J| > tolerance with constant sign on a sample grid."""
        pts = []
        for kv in self.kvs:
            loc = []
            for a, b in kv.elements():
                loc.extend(np.linspace(a, b, samples_per_element + 2)[1:-1])
            pts.append(np.array(loc))
        _, J = self.evaluate_grid(pts[0], pts[1], nderiv=1)
        det = np.linalg.det(J)
        if np.any(np.abs(det) <= JACOBIAN_TOL):
            raise GeometryError("Jacobian determinant vanishes on the patch")
        if det.max() > 0 and det.min() < 0:
            raise GeometryError("Jacobian determinant changes sign on the patch")
        return float(det.min()), float(det.max())

    # -- faces --------------------------------------------------------------

    def face_kv(self, face):
        """Knot vector of the running direction along a face."""
        run, _, _ = _face_axis(face)
        return self.kvs[run]

    def face_points(self, face, t):
        """Parametric points (m, 2) along a face for parameters ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        run, fixed, val = _face_axis(face)
        Z = np.empty((t.size, 2))
        Z[:, run] = t
        Z[:, fixed] = val
        return Z

    def edge_curve(self, face):
        """The face as a univariate NURBS curve (kv, control points, weights)."""
        run, fixed, val = _face_axis(face)
        idx = 0 if val == 0.0 else -1
        if run == 0:
            ctrl = self.control_points[:, idx, :]
            wts = self.weights[:, idx]
        else:
            ctrl = self.control_points[idx, :, :]
            wts = self.weights[idx, :]
        return EdgeCurve(self.kvs[run], np.array(ctrl), np.array(wts))

    def edge_measure(self, face, t):
        """Arc-length factor |dF/dt| along a face (surface measure)."""
        return self.edge_curve(face).measure(t)

    def outward_normal(self, face, t):
        """Unit outward normal(s) of the patch along a face."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        run, fixed, val = _face_axis(face)
        Z = self.face_points(face, t)
        u = np.unique(Z[:, 0])
        v = np.unique(Z[:, 1])
        # evaluate along the face without forming a full grid
        normals = np.empty((t.size, 2))
        for i, (z1, z2) in enumerate(Z):
            _, J = self.evaluate_grid([z1], [z2], nderiv=1)
            J = J[0, 0]
            tau = J[:, run]
            n = np.array([tau[1], -tau[0]])
            inward = J[:, fixed] * (1.0 if val == 0.0 else -1.0)
            if n @ inward > 0:
                n = -n
            normals[i] = n / np.linalg.norm(n)
        return normals if normals.shape[0] > 1 else normals[0]


class EdgeCurve:
    """Univariate NURBS curve extracted from a patch face."""

    __slots__ = ("kv", "control_points", "weights", "_homog")

    def __init__(self, kv, control_points, weights):
        object.__setattr__(self, "kv", kv)
        object.__setattr__(self, "control_points", np.asarray(control_points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(weights, dtype=float))
        H = np.empty((kv.n, 3))
        H[:, 0] = self.weights * self.control_points[:, 0]
        H[:, 1] = self.weights * self.control_points[:, 1]
        H[:, 2] = self.weights
        object.__setattr__(self, "_homog", H)

    def __setattr__(self, name, value):
        raise AttributeError("EdgeCurve is immutable")

    def evaluate(self, t, nderiv=0):
        """Points (m, 2) and optionally derivative rows along the curve."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mats = collocation_matrix(self.kv, t, nderiv)
        S = [m @ self._homog for m in mats]
        W = S[0][:, 2]
        X = S[0][:, :2] / W[:, None]
        if nderiv == 0:
            return X
        out = [X]
        dX = (S[1][:, :2] - X * S[1][:, 2:]) / W[:, None]
        out.append(dX)
        if nderiv >= 2:
            d2X = (S[2][:, :2] - 2 * dX * S[1][:, 2:] - X * S[2][:, 2:]) / W[:, None]
            out.append(d2X)
        return out

    def measure(self, t):
        """|dF/dt| at the given parameters."""
        _, d = self.evaluate(t, nderiv=1)
        m = np.linalg.norm(d, axis=1)
        if np.any(m <= JACOBIAN_TOL):
            raise GeometryError("degenerate edge (zero tangent)")
        return m if m.size > 1 else float(m[0])


@dataclass(frozen=True)
class InversionResult:
    """Outcome of a closest-point inversion."""

    param: float | tuple
    residual: float
    iterations: int
    converged: bool


def invert_point(patch, x, face=None):
    """Parameters of the closest point to ``x`` on a patch (or one face).

    With ``face`` given, runs a 1D projected Newton iteration for the closest
    point along that face, seeded by a grid search; this is the workhorse for
    evaluating master traces at slave quadrature points.  Without a face, a
    2D Newton solves ``F(zeta) = x`` directly.

    When no exact preimage exists (non-matching interfaces) the returned
    residual equals the geometric gap.
    """
    x = np.asarray(x, dtype=float)
    if face is not None:
        return _invert_on_face(patch, x, face)
    return _invert_interior(patch, x)


def _invert_on_face(patch, x, face):
    curve = patch.edge_curve(face)
    ts = np.linspace(0.0, 1.0, SEED_SAMPLES + 1)
    X = curve.evaluate(ts)
    t = float(ts[np.argmin(np.sum((X - x) ** 2, axis=1))])
    best_t, best_r = t, np.inf
    for it in range(NEWTON_MAXIT):
        pt, d1, d2 = curve.evaluate([t], nderiv=2)
        r = pt[0] - x
        rn = float(np.linalg.norm(r))
        if rn < best_r:
            best_t, best_r = t, rn
        g = float(d1[0] @ r)
        h = float(d2[0] @ r + d1[0] @ d1[0])
        if h <= 0:
            h = float(d1[0] @ d1[0])
        step = -g / h
        t_new = min(1.0, max(0.0, t + step))
        moved = abs(t_new - t)
        at_end = (t_new in (0.0, 1.0)) and (t_new == t)
        t = t_new
        if moved < NEWTON_TOL or (at_end and g * (1 if t == 0.0 else -1) > 0):
            pt = curve.evaluate([t])
            return InversionResult(
                param=t, residual=float(np.linalg.norm(pt[0] - x)), iterations=it + 1, converged=True
            )
    raise InversionError(
        f"face inversion did not converge after {NEWTON_MAXIT} iterations "
        f"(best residual {best_r:.3e})",
        residual=best_r,
    )


def _invert_interior(patch, x):
    seeds = np.linspace(0.05, 0.95, 8)
    Xs = patch.evaluate_grid(seeds, seeds)
    d2 = np.sum((Xs - x) ** 2, axis=-1)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    z = np.array([seeds[i], seeds[j]])
    best = (z.copy(), np.inf)
    for it in range(NEWTON_MAXIT):
        Xp, J = patch.evaluate_grid([z[0]], [z[1]], nderiv=1)
        r = Xp[0, 0] - x
        rn = float(np.linalg.norm(r))
        if rn < best[1]:
            best = (z.copy(), rn)
        try:
            step = np.linalg.solve(J[0, 0], -r)
        except np.linalg.LinAlgError as exc:
            raise InversionError("singular Jacobian during inversion", residual=rn) from exc
        z_new = np.clip(z + step, 0.0, 1.0)
        moved = float(np.linalg.norm(z_new - z))
        z = z_new
        if moved < NEWTON_TOL:
            Xp = patch.evaluate_grid([z[0]], [z[1]])
            return InversionResult(
                param=(float(z[0]), float(z[1])),
                residual=float(np.linalg.norm(Xp[0, 0] - x)),
                iterations=it + 1,
                converged=True,
            )
    raise InversionError(
        f"inversion did not converge after {NEWTON_MAXIT} iterations "
        f"(best residual {best[1]:.3e})",
        residual=best[1],
    )


@dataclass(frozen=True)
class Interface:
    """One glued interface: master/slave patch ids and their faces.

    The slave face must be a whole parametric edge (slave conforming).  The
    orientation flag records whether the two face parametrizations run the
    same way; it is informational, master evaluation goes through point
    inversion and does not rely on it.
    """

    master: int
    slave: int
    master_face: str
    slave_face: str
    orientation: int = 1


class MultipatchDomain:
    """A 2D computational domain split into NURBS patches.

    Parameters
    ----------
    patches : list of NurbsPatch
    interfaces : list of Interface
    boundary : dict mapping (patch index, face name) to a tag dict
        Tags: ``{"type": "dirichlet", "value": ..., "components": [...]}``,
        ``{"type": "neumann", "value": ...}`` or ``{"type": "free"}``.
        Untagged non-interface faces default to ``free`` (zero flux).
    coefficients : list of dict, one per patch
        Scalar problems: ``{"alpha": ..., "beta": ...}``; elasticity:
        ``{"lam": ..., "mu": ...}``.  Values may be numbers or callables
        of physical coordinates.
    kind : "scalar" or "elasticity"
    """

    def __init__(self, patches, interfaces, boundary=None, coefficients=None, kind="scalar"):
        self.patches = list(patches)
        self.interfaces = [
            itf if isinstance(itf, Interface) else Interface(**itf) for itf in interfaces
        ]
        self.boundary = dict(boundary or {})
        self.kind = kind
        if coefficients is None:
            default = {"alpha": 1.0, "beta": 0.0} if kind == "scalar" else {"lam": 1.0, "mu": 1.0}
            coefficients = [dict(default) for _ in self.patches]
        self.coefficients = list(coefficients)
        self._validate()

    def _validate(self):
        K = len(self.patches)
        iface_faces = set()
        for l, itf in enumerate(self.interfaces):
            if itf.master == itf.slave:
                raise InputError(f"interface {l} references a single patch twice")
            if not (0 <= itf.master < K and 0 <= itf.slave < K):
                raise InputError(f"interface {l} references an unknown patch")
            _face_axis(itf.master_face)
            _face_axis(itf.slave_face)
            iface_faces.add((itf.slave, itf.slave_face))
            iface_faces.add((itf.master, itf.master_face))
        for (k, f), tag in self.boundary.items():
            _face_axis(f)
            if not (0 <= k < K):
                raise InputError(f"boundary tag references unknown patch {k}")
            if tag.get("type") == "dirichlet" and (k, f) in iface_faces:
                raise InputError(
                    f"face {f!r} of patch {k} carries both a Dirichlet tag and an interface"
                )

    def boundary_tag(self, k, face):
        """Tag dict of a face; untagged non-interface faces are free."""
        return self.boundary.get((k, face), {"type": "free"})

    def interface_faces(self):
        """Set of (patch, face) pairs that belong to some interface."""
        out = set()
        for itf in self.interfaces:
            out.add((itf.master, itf.master_face))
            out.add((itf.slave, itf.slave_face))
        return out

    def interface_gap(self, l, samples=9):
        """Largest distance from slave-face samples to the master face.

        Zero (to inversion tolerance) for geometrically matching interfaces;
        equals the geometric gap for non-matching ones.
        """
        itf = self.interfaces[l]
        slave = self.patches[itf.slave]
        master = self.patches[itf.master]
        curve = slave.edge_curve(itf.slave_face)
        ts = np.linspace(0.0, 1.0, samples)
        X = curve.evaluate(ts)
        gap = 0.0
        for xi in X:
            res = invert_point(master, xi, face=itf.master_face)
            gap = max(gap, res.residual)
        return gap

    def check_interfaces(self, tol=1e-8):
        """Classify each interface as matching (gap below tol) or not."""
        return [self.interface_gap(l) <= tol for l in range(len(self.interfaces))]

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        """JSON-ready description (callable coefficients are not storable)."""
        patches = []
        for p in self.patches:
            patches.append(
                {
                    "degrees": [p.kvs[0].degree, p.kvs[1].degree],
                    "knots": [p.kvs[0].knots.tolist(), p.kvs[1].knots.tolist()],
                    "control_points": p.control_points.reshape(-1, 2).tolist(),
                    "weights": p.weights.reshape(-1).tolist(),
                }
            )
        boundaries = [
            {"patch": k, "face": f, **tag} for (k, f), tag in sorted(self.boundary.items())
        ]
        return {
            "kind": self.kind,
            "patches": patches,
            "interfaces": [
                {
                    "master": i.master,
                    "slave": i.slave,
                    "master_face": i.master_face,
                    "slave_face": i.slave_face,
                }
                for i in self.interfaces
            ],
            "boundaries": boundaries,
            "coefficients": self.coefficients,
        }

    @classmethod
    def from_dict(cls, data):
        patches = []
        for spec in data["patches"]:
            p1, p2 = spec["degrees"]
            kv1 = KnotVector(p1, spec["knots"][0])
            kv2 = KnotVector(p2, spec["knots"][1])
            C = np.asarray(spec["control_points"], dtype=float).reshape(kv1.n, kv2.n, 2)
            w = spec.get("weights")
            w = None if w is None else np.asarray(w, dtype=float).reshape(kv1.n, kv2.n)
            patches.append(NurbsPatch((kv1, kv2), C, w))
        boundary = {}
        for tag in data.get("boundaries", []):
            tag = dict(tag)
            k = tag.pop("patch")
            f = tag.pop("face")
            boundary[(k, f)] = tag
        return cls(
            patches,
            data.get("interfaces", []),
            boundary=boundary,
            coefficients=data.get("coefficients"),
            kind=data.get("kind", "scalar"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read domain file {path}: {exc}") from exc
        return cls.from_dict(data)


# -- common patch constructors ----------------------------------------------


def bilinear_patch(c00, c10, c11, c01):
    """Bilinear patch from four corners (counterclockwise)."""
    kv = KnotVector(1, [0, 0, 1, 1])
    C = np.empty((2, 2, 2))
    C[0, 0], C[1, 0], C[1, 1], C[0, 1] = c00, c10, c11, c01
    return NurbsPatch((kv, kv), C)


def unit_square_patch():
    """Identity map of the unit square."""
    return bilinear_patch((0, 0), (1, 0), (1, 1), (0, 1))


def quarter_annulus_patch(r_in, r_out):
    """Exact quarter annulus: radial direction first (linear), angular second.

    The circular arcs are represented exactly with the standard conic weight
    on the middle control point.  Faces: west = inner arc, east = outer arc,
    south = the straight edge on the x axis, north = the edge on the y axis.
    """
    kv_rad = KnotVector(1, [0, 0, 1, 1])
    kv_ang = KnotVector(2, [0, 0, 0, 1, 1, 1])
    C = np.empty((2, 3, 2))
    w = np.empty((2, 3))
    arc = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    for j in range(3):
        C[0, j] = r_in * arc[j]
        C[1, j] = r_out * arc[j]
        w[:, j] = np.sqrt(0.5) if j == 1 else 1.0
    return NurbsPatch((kv_rad, kv_ang), C, w)
