"""Convergence harness: error norms, refinement loops, slope estimation.

Errors are integrated with p+2 Gauss points per direction.  The broken V
error sums full per-patch H1 norms; the dual error is the interface L2
distance between the multiplier and the exact conormal flux (the multiplier
approximates minus the master-side flux under the master-minus-slave jump
convention, so the sign is flipped before comparing).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .assembly import _face_order, build_system, iter_patch_quadrature, solve_saddle
from .errors import InputError
from .spaces import field_space
from .splinecore import element_quadrature


def solve_case(case, variant, degree, level=0, nonmatching=False):
    """Discretize and solve one case at one refinement level.

    Non-matching meshes refine the designated patch once more than the rest
    before the uniform loop.
    """
    spaces = []
    for k, patch in enumerate(case.domain.patches):
        extra = 1 if (nonmatching and k == case.nonmatching_patch) else 0
        spaces.append(field_space(patch, degree, case.initial_levels + level + extra))
    system = build_system(case.domain, spaces, variant, case.data)
    return spaces, solve_saddle(system)


def max_mesh_size(domain, spaces):
    """Largest physical element diagonal over all patches."""
    h = 0.0
    for patch, space in zip(domain.patches, spaces):
        z1 = space.kvs[0].breakpoints
        z2 = space.kvs[1].breakpoints
        X = patch.evaluate_grid(z1, z2)
        d1 = X[1:, 1:] - X[:-1, :-1]
        d2 = X[1:, :-1] - X[:-1, 1:]
        h = max(h, float(np.sqrt(np.sum(d1**2, axis=-1)).max()))
        h = max(h, float(np.sqrt(np.sum(d2**2, axis=-1)).max()))
    return h


def _patch_errors(case, patch, space, coeffs):
    """(L2^2, H1-seminorm^2) of the discretization error on one patch."""
    p = max(space.degrees)
    components = 1 if case.kind == "scalar" else 2
    e_l2 = 0.0
    e_h1 = 0.0
    for pq in iter_patch_quadrature(patch, space, order=p + 2):
        ue = case.exact_value(pq.X)
        ge = case.exact_gradient(pq.X)
        if components == 1:
            local = coeffs[pq.dofs]
            uh = np.einsum("eql,el->eq", pq.B, local)
            gx = np.einsum("eql,el->eq", pq.Gx, local)
            gy = np.einsum("eql,el->eq", pq.Gy, local)
            e_l2 += float(np.sum(pq.wdet * (uh - ue) ** 2))
            e_h1 += float(np.sum(pq.wdet * ((gx - ge[..., 0]) ** 2 + (gy - ge[..., 1]) ** 2)))
        else:
            for c in range(2):
                local = coeffs[c][pq.dofs]
                uh = np.einsum("eql,el->eq", pq.B, local)
                gx = np.einsum("eql,el->eq", pq.Gx, local)
                gy = np.einsum("eql,el->eq", pq.Gy, local)
                e_l2 += float(np.sum(pq.wdet * (uh - ue[..., c]) ** 2))
                e_h1 += float(
                    np.sum(pq.wdet * ((gx - ge[..., c, 0]) ** 2 + (gy - ge[..., c, 1]) ** 2))
                )
    return e_l2, e_h1


def _dual_errors(case, spaces, solution):
    """Interface L2 distance between the flux multiplier and the exact flux."""
    system = solution.system
    domain = case.domain
    errs = []
    for l, itf in enumerate(domain.interfaces):
        trace = system.traces[l]
        mult = system.multipliers[l]
        kv = trace.kv
        pts, wts = element_quadrature(kv, _face_order(kv.degree))
        ts = pts.ravel()
        w = wts.ravel()
        slave = domain.patches[itf.slave]
        curve = slave.edge_curve(itf.slave_face)
        X = curve.evaluate(ts)
        jac = curve.measure(ts)
        # n_l is the outward normal of the master side = inward for the slave
        n_l = -slave.outward_normal(itf.slave_face, ts)
        exact = case.interface_flux(X, n_l)
        Mu = mult.evaluate(ts)
        lam = solution.multiplier_coefficients(l)
        # jump = master - slave makes -lambda the master-side flux
        if system.dofmap.components == 1:
            lam_h = -(lam @ Mu)
            errs.append(float(np.sqrt(np.sum(w * jac * (lam_h - exact) ** 2))))
        else:
            total = 0.0
            for c in range(2):
                lam_h = -(lam[c] @ Mu)
                total += float(np.sum(w * jac * (lam_h - exact[..., c]) ** 2))
            errs.append(float(np.sqrt(total)))
    return errs


def error_norms(case, spaces, solution):
    """One study row: mesh size, primal L2 / broken V errors, dual errors.

    The broken V norm is the root sum of full per-patch H1 norms; per-patch
    contributions are reported alongside.
    """
    l2_per = []
    h1_per = []
    for k, patch in enumerate(case.domain.patches):
        coeffs = solution.patch_coefficients(k)
        e2, s2 = _patch_errors(case, patch, spaces[k], coeffs)
        l2_per.append(np.sqrt(e2))
        h1_per.append(np.sqrt(e2 + s2))
    l2 = float(np.sqrt(np.sum(np.square(l2_per))))
    broken = float(np.sqrt(np.sum(np.square(h1_per))))
    return {
        "h": max_mesh_size(case.domain, spaces),
        "l2": l2,
        "brokenV": broken,
        "dual_l2": _dual_errors(case, spaces, solution),
        "l2_per_patch": l2_per,
        "h1_per_patch": h1_per,
        "constraint_residual": solution.constraint_residual,
    }


def slope_fit(errors, hs=None, window=3):
    """Pairwise and least-squares convergence slopes.

    Pairwise slopes are log2 ratios of consecutive errors (uniform bisection
    halves h per level); the summary slope is a least-squares fit of log e
    against log h over the last ``window`` levels.  Entries at or below
    1e-14 are skipped.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size < 2:
        raise InputError("need at least two levels for a slope")
    if hs is None:
        hs = 2.0 ** -np.arange(errors.size)
    hs = np.asarray(hs, dtype=float)
    pairwise = []
    for a, b in zip(errors[:-1], errors[1:]):
        pairwise.append(float(np.log2(a / b)) if min(a, b) > 1e-14 else np.nan)
    keep = errors > 1e-14
    tail = np.nonzero(keep)[0][-window:]
    if tail.size >= 2:
        ls = float(np.polyfit(np.log(hs[tail]), np.log(errors[tail]), 1)[0])
    else:
        ls = np.nan
    return {"pairwise": pairwise, "ls": ls}


@dataclass
class ErrorReport:
    """Per-level error rows of one convergence run plus fitted slopes."""

    case: str
    variant: str
    degree: int
    rows: list = field(default_factory=list)

    def column(self, key):
        return np.array([r[key] for r in self.rows])

    def slopes(self, key="l2", window=3):
        return slope_fit(self.column(key), self.column("h"), window=window)

    def to_csv(self, path_or_buffer):
        n_ifaces = len(self.rows[0]["dual_l2"]) if self.rows else 0
        duals = ",".join(f"dual_l2_{i}" for i in range(n_ifaces))
        header = "level,h,l2,brokenV" + ("," + duals if duals else "") + ",slope_l2\n"
        pw = self.slopes("l2")["pairwise"] if len(self.rows) > 1 else []
        buf = io.StringIO()
        buf.write(header)
        for i, r in enumerate(self.rows):
            slope = "" if i == 0 or np.isnan(pw[i - 1]) else f"{pw[i - 1]:.3f}"
            dual = "".join(f",{d:.12e}" for d in r["dual_l2"])
            buf.write(f"{i},{r['h']:.10g},{r['l2']:.12e},{r['brokenV']:.12e}{dual},{slope}\n")
        text = buf.getvalue()
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w") as fh:
                fh.write(text)


def run_convergence(case, variant, degree, levels, nonmatching=False):
    """Uniform refinement loop returning an :class:`ErrorReport`.

    Levels refine every patch once each; the non-matching option refines the
    case's designated patch once before the loop so meshes never match.
    """
    report = ErrorReport(case=case.name, variant=variant, degree=degree)
    for level in range(levels):
        spaces, solution = solve_case(case, variant, degree, level, nonmatching)
        report.rows.append(error_norms(case, spaces, solution))
    return report
