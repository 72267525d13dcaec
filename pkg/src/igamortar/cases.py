"""Benchmark problem definitions for the convergence studies.

Each case bundles a multipatch domain, the exact field with derived source
and boundary data, and the interface flux used for the dual error.  The
shipped cases:

* ``annulus``: Poisson on a quarter annulus 0.2 < r < 2 split at r = 1 by a
  curved interface; manufactured u = sin(pi x) sin(pi y); Neumann on the
  straight edges so equal-order multipliers need no end modification.
* ``corner``: Laplace on a domain with a re-entrant corner (interior angle
  3 pi / 2) split into three bilinear patches whose interfaces meet at an
  interior cross point; exact solution r^(2/3) sin(2 phi / 3) imposed on the
  whole boundary, so every interface end is modified.
* ``nonmatching``: Poisson on the unit square split horizontally, with an
  optional geometric bump of the slave side so the interfaces do not match;
  u = sin(6x) sin(5y), Neumann on the vertical edges.
* ``plate``: plane-strain elasticity, quarter plate with a traction-free
  circular hole under far-field uniaxial tension, split by the diagonal into
  two NURBS patches; exact tractions on the outer edges, symmetry rollers on
  the axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemData
from .errors import InputError
from .fields import CornerSingular, PlateWithHole, SinSin
from .geometry import (
    Interface,
    MultipatchDomain,
    NurbsPatch,
    bilinear_patch,
    quarter_annulus_patch,
)
from .splinecore import KnotVector


@dataclass(frozen=True)
class ManufacturedCase:
    """A benchmark problem with exact solution and derived data."""

    name: str
    domain: MultipatchDomain
    data: ProblemData
    exact_value: object
    exact_gradient: object
    interface_flux: object  # (X, N) -> conormal flux / traction toward N
    initial_levels: int = 1
    nonmatching_patch: int = 0
    singular_points: tuple = ()

    @property
    def kind(self):
        return self.domain.kind


def annulus_case(initial_levels=1):
    """Two-patch quarter annulus with a curved interface at r = 1."""
    inner = quarter_annulus_patch(0.2, 1.0)
    outer = quarter_annulus_patch(1.0, 2.0)
    # faces (radial first): west = inner radius, east = outer radius,
    # south = edge on the x axis, north = edge on the y axis
    domain = MultipatchDomain(
        [inner, outer],
        [Interface(master=0, slave=1, master_face="east", slave_face="west")],
        boundary={
            (0, "west"): {"type": "dirichlet"},
            (1, "east"): {"type": "dirichlet"},
            (0, "south"): {"type": "neumann"},
            (0, "north"): {"type": "neumann"},
            (1, "south"): {"type": "neumann"},
            (1, "north"): {"type": "neumann"},
        },
        coefficients=[{"alpha": 1.0, "beta": 0.0}] * 2,
    )
    u = SinSin(np.pi, np.pi)
    data = ProblemData(source=u.source(), dirichlet=u.value, neumann=u.flux())
    return ManufacturedCase(
        name="annulus",
        domain=domain,
        data=data,
        exact_value=u.value,
        exact_gradient=u.gradient,
        interface_flux=u.flux(),
        initial_levels=initial_levels,
        nonmatching_patch=0,
    )


def corner_case(initial_levels=1):
    """Re-entrant corner (interior angle 3 pi / 2), three bilinear patches.

    The corner sits at the origin with edges on the positive x axis and the
    negative y axis.  The three interfaces meet at an interior cross point Q
    and end on the Dirichlet boundary, so the equal-order pairing is end
    modified everywhere.  The outer box is stretched upward so that all
    three quadrilaterals are convex.
    """
    A = (0.0, 0.0)
    B = (1.0, 0.0)
    C = (1.0, 3.0)
    D = (-1.0, 3.0)
    E = (-1.0, -1.0)
    F = (0.0, -1.0)
    Q = (-0.3, 0.2)
    p_tl = bilinear_patch(Q, C, D, E)  # patch 0, left/top
    p_b = bilinear_patch(Q, E, F, A)  # patch 1, bottom
    p_r = bilinear_patch(A, B, C, Q)  # patch 2, right
    domain = MultipatchDomain(
        [p_tl, p_b, p_r],
        [
            Interface(master=0, slave=2, master_face="south", slave_face="north"),  # Q-C
            Interface(master=1, slave=2, master_face="west", slave_face="west"),  # Q-A
            Interface(master=0, slave=1, master_face="west", slave_face="south"),  # Q-E
        ],
        boundary={
            (0, "east"): {"type": "dirichlet"},  # C-D, top
            (0, "north"): {"type": "dirichlet"},  # E-D, left
            (1, "east"): {"type": "dirichlet"},  # E-F, bottom
            (1, "north"): {"type": "dirichlet"},  # A-F, notch vertical
            (2, "south"): {"type": "dirichlet"},  # A-B, notch horizontal
            (2, "east"): {"type": "dirichlet"},  # B-C, right
        },
        coefficients=[{"alpha": 1.0, "beta": 0.0}] * 3,
    )
    u = CornerSingular()
    data = ProblemData(source=0.0, dirichlet=u.value)
    return ManufacturedCase(
        name="corner",
        domain=domain,
        data=data,
        exact_value=u.value,
        exact_gradient=u.gradient,
        interface_flux=u.flux(),
        initial_levels=initial_levels,
        nonmatching_patch=2,
        singular_points=((0.0, 0.0),),
    )


def nonmatching_case(gap=1e-3, initial_levels=1):
    """Unit square split horizontally, slave side bulged by ``gap``.

    The slave (bottom) patch's top edge is the quadratic curve
    y = 1/2 + 4 g x (1 - x) with g = ``gap``, so the largest distance to the
    straight master edge equals ``gap``; gap 0 gives matching geometry.
    The interface ends lie on the Neumann edges x = 0 and x = 1.
    """
    kvx = KnotVector(2, [0, 0, 0, 1, 1, 1])
    kvy = KnotVector(1, [0, 0, 1, 1])
    C = np.zeros((3, 2, 2))
    C[:, 0, :] = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]
    C[:, 1, :] = [[0.0, 0.5], [0.5, 0.5 + 2.0 * gap], [1.0, 0.5]]
    bottom = NurbsPatch((kvx, kvy), C)
    top = bilinear_patch((0, 0.5), (1, 0.5), (1, 1), (0, 1))
    domain = MultipatchDomain(
        [bottom, top],
        [Interface(master=1, slave=0, master_face="south", slave_face="north")],
        boundary={
            (0, "south"): {"type": "dirichlet"},
            (1, "north"): {"type": "dirichlet"},
            (0, "west"): {"type": "neumann"},
            (0, "east"): {"type": "neumann"},
            (1, "west"): {"type": "neumann"},
            (1, "east"): {"type": "neumann"},
        },
        coefficients=[{"alpha": 1.0, "beta": 0.0}] * 2,
    )
    u = SinSin(6.0, 5.0)
    data = ProblemData(source=u.source(), dirichlet=u.value, neumann=u.flux())
    return ManufacturedCase(
        name="nonmatching",
        domain=domain,
        data=data,
        exact_value=u.value,
        exact_gradient=u.gradient,
        interface_flux=u.flux(),
        initial_levels=initial_levels,
        nonmatching_patch=0,
    )


def _plate_patch(radius, half):
    """One 45-degree sector of the quarter plate with hole.

    ``half = 0`` covers polar angles [0, 45] (bottom), ``half = 1`` covers
    [45, 90].  Radial direction first: west face is the hole arc, east the
    outer square edge; the north/south faces at 45 degrees carry the
    interface.
    """
    a = radius
    t8 = np.tan(np.pi / 8.0)
    w8 = np.cos(np.pi / 8.0)
    s45 = np.sqrt(0.5)
    kv_rad = KnotVector(1, [0, 0, 1, 1])
    kv_ang = KnotVector(2, [0, 0, 0, 1, 1, 1])
    C = np.empty((2, 3, 2))
    w = np.empty((2, 3))
    if half == 0:
        C[0] = [[a, 0.0], [a, a * t8], [a * s45, a * s45]]
        C[1] = [[2.0, 0.0], [2.0, 2.0 * t8], [2.0, 2.0]]
    else:
        C[0] = [[a * s45, a * s45], [a * t8, a], [0.0, a]]
        C[1] = [[2.0, 2.0], [2.0 * t8, 2.0], [0.0, 2.0]]
    w[:, :] = [1.0, w8, 1.0]
    return NurbsPatch((kv_rad, kv_ang), C, w)


def plate_case(radius=0.2, tension=1.0, lam=0.576923, mu=0.384615, initial_levels=1):
    """Quarter plate with a circular hole, two patches split by the diagonal.

    Plane strain; the default Lame pair corresponds to E = 1, nu = 0.3.
    Exact tractions act on the outer square edges, the hole arc is traction
    free, and symmetry rollers constrain the normal displacement on the two
    axis edges.  No interface end touches a Dirichlet face, so equal-order
    multipliers stay unmodified.
    """
    lower = _plate_patch(radius, 0)
    upper = _plate_patch(radius, 1)
    domain = MultipatchDomain(
        [lower, upper],
        [Interface(master=0, slave=1, master_face="north", slave_face="south")],
        boundary={
            (0, "south"): {"type": "dirichlet", "components": [1], "value": 0.0},
            (1, "north"): {"type": "dirichlet", "components": [0], "value": 0.0},
            (0, "east"): {"type": "neumann"},
            (1, "east"): {"type": "neumann"},
            (0, "west"): {"type": "free"},
            (1, "west"): {"type": "free"},
        },
        coefficients=[{"lam": lam, "mu": mu}] * 2,
        kind="elasticity",
    )
    exact = PlateWithHole(radius=radius, tension=tension, lam=lam, mu=mu)

    def traction_flux(X, N):
        S = exact.stress(X)
        return np.einsum("...ij,...j->...i", S, N)

    data = ProblemData(source=None, dirichlet=exact.displacement, neumann=traction_flux)
    return ManufacturedCase(
        name="plate",
        domain=domain,
        data=data,
        exact_value=exact.displacement,
        exact_gradient=exact.displacement_gradient,
        interface_flux=traction_flux,
        initial_levels=initial_levels,
        nonmatching_patch=0,
    )


_CASES = {
    "annulus": annulus_case,
    "corner": corner_case,
    "plate": plate_case,
    "nonmatching": nonmatching_case,
}


def get_case(name, **kwargs):
    """Benchmark case by name (annulus | corner | plate | nonmatching)."""
    try:
        factory = _CASES[name]
    except KeyError:
        raise InputError(f"unknown case {name!r}; known: {sorted(_CASES)}") from None
    return factory(**kwargs)
