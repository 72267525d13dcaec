"""Closed-form exact fields for the manufactured-solution studies.

Scalar fields expose values, gradients and Laplacians at arrays of physical
points (shape (..., 2)); the elasticity benchmark exposes displacements and
stresses.  Sources, fluxes and boundary data are derived from these, so a
study only ever names its exact field.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


class ScalarField:
    """Base class wiring sources and boundary data to the exact field."""

    def value(self, X):
        raise NotImplementedError

    def gradient(self, X):
        raise NotImplementedError

    def laplacian(self, X):
        raise NotImplementedError

    def source(self, alpha=1.0, beta=0.0):
        """Right-hand side -alpha lap(u) + beta u for constant coefficients."""

        def f(X):
            return -alpha * self.laplacian(X) + beta * self.value(X)

        return f

    def flux(self, alpha=1.0):
        """Conormal data alpha grad(u) . n for Neumann faces."""

        def g(X, N):
            return alpha * np.sum(self.gradient(X) * N, axis=-1)

        return g


class SinSin(ScalarField):
    """u = sin(a x) sin(b y)."""

    def __init__(self, a=np.pi, b=np.pi):
        self.a = a
        self.b = b

    def value(self, X):
        X = np.asarray(X)
        return np.sin(self.a * X[..., 0]) * np.sin(self.b * X[..., 1])

    def gradient(self, X):
        X = np.asarray(X)
        sx, cx = np.sin(self.a * X[..., 0]), np.cos(self.a * X[..., 0])
        sy, cy = np.sin(self.b * X[..., 1]), np.cos(self.b * X[..., 1])
        return np.stack([self.a * cx * sy, self.b * sx * cy], axis=-1)

    def laplacian(self, X):
        return -(self.a**2 + self.b**2) * self.value(X)


class CornerSingular(ScalarField):
    """Harmonic corner field r^(2/3) sin(2 phi / 3).

    The polar angle is measured counterclockwise from the positive x axis
    and wrapped to [0, 2 pi), matching a re-entrant corner of interior angle
    3 pi / 2 whose edges lie on the positive x axis and the negative y axis.
    The gradient is unbounded at the origin; it is only ever evaluated at
    quadrature points, never at the corner itself.
    """

    exponent = 2.0 / 3.0

    def _polar(self, X):
        X = np.asarray(X)
        r = np.hypot(X[..., 0], X[..., 1])
        phi = np.arctan2(X[..., 1], X[..., 0])
        phi = np.where(phi < 0, phi + 2 * np.pi, phi)
        return r, phi

    def value(self, X):
        r, phi = self._polar(X)
        return r**self.exponent * np.sin(self.exponent * phi)

    def gradient(self, X):
        r, phi = self._polar(X)
        k = self.exponent
        rk = np.where(r > 0, r ** (k - 1), 0.0)
        ur = k * rk * np.sin(k * phi)
        ut = k * rk * np.cos(k * phi)
        cx, sx = np.cos(phi), np.sin(phi)
        return np.stack([ur * cx - ut * sx, ur * sx + ut * cx], axis=-1)

    def laplacian(self, X):
        X = np.asarray(X)
        return np.zeros(X.shape[:-1])


class PlateWithHole:
    """Infinite plate with a circular hole under far-field uniaxial tension.

    Plane-strain displacements and stresses of the classical closed-form
    solution for tension ``T`` along x and hole radius ``a``.  The hole
    boundary is traction free and the stresses decay to the uniaxial state
    at infinity, so applying the exact tractions on a finite outer boundary
    reproduces the infinite-plate field.
    """

    def __init__(self, radius=0.2, tension=1.0, lam=1.0, mu=1.0):
        self.a = radius
        self.T = tension
        self.lam = lam
        self.mu = mu
        nu = lam / (2.0 * (lam + mu))
        self.kappa = 3.0 - 4.0 * nu  # plane strain Kolosov constant

    def _polar(self, X):
        X = np.asarray(X)
        r = np.hypot(X[..., 0], X[..., 1])
        th = np.arctan2(X[..., 1], X[..., 0])
        return r, th

    def displacement(self, X):
        r, th = self._polar(X)
        a, T, mu, k = self.a, self.T, self.mu, self.kappa
        c = T * a / (8.0 * mu)
        ra = r / a
        ar = a / r
        ux = c * (ra * (k + 1) * np.cos(th) + 2 * ar * ((1 + k) * np.cos(th) + np.cos(3 * th)) - 2 * ar**3 * np.cos(3 * th))
        uy = c * (ra * (k - 3) * np.sin(th) + 2 * ar * ((1 - k) * np.sin(th) + np.sin(3 * th)) - 2 * ar**3 * np.sin(3 * th))
        return np.stack([ux, uy], axis=-1)

    def stress(self, X):
        """Cartesian stress components, shape (..., 2, 2)."""
        r, th = self._polar(X)
        T = self.T
        ar2 = (self.a / r) ** 2
        ar4 = ar2**2
        c2, s2 = np.cos(2 * th), np.sin(2 * th)
        srr = 0.5 * T * (1 - ar2) + 0.5 * T * (1 - 4 * ar2 + 3 * ar4) * c2
        stt = 0.5 * T * (1 + ar2) - 0.5 * T * (1 + 3 * ar4) * c2
        srt = -0.5 * T * (1 + 2 * ar2 - 3 * ar4) * s2
        ct, st = np.cos(th), np.sin(th)
        sxx = srr * ct**2 + stt * st**2 - 2 * srt * st * ct
        syy = srr * st**2 + stt * ct**2 + 2 * srt * st * ct
        sxy = (srr - stt) * st * ct + srt * (ct**2 - st**2)
        S = np.empty(np.shape(r) + (2, 2))
        S[..., 0, 0] = sxx
        S[..., 1, 1] = syy
        S[..., 0, 1] = sxy
        S[..., 1, 0] = sxy
        return S

    def displacement_gradient(self, X, step=1e-7):
        """Central finite differences of the displacement (for strains)."""
        X = np.asarray(X, dtype=float)
        G = np.empty(X.shape[:-1] + (2, 2))
        for d in range(2):
            dX = np.zeros_like(X)
            dX[..., d] = step
            G[..., d] = (self.displacement(X + dX) - self.displacement(X - dX)) / (2 * step)
        return G

    def traction(self):
        """Exact traction callable (X, N) -> (..., 2) for Neumann faces."""

        def g(X, N):
            S = self.stress(X)
            return np.einsum("...ij,...j->...i", S, N)

        return g


_SCALAR_FIELDS = {
    "sin_pi": lambda: SinSin(np.pi, np.pi),
    "sin56": lambda: SinSin(6.0, 5.0),  # u = sin(6x) sin(5y)
    "corner": CornerSingular,
}


def scalar_field(name):
    """Look up a named scalar exact field."""
    try:
        return _SCALAR_FIELDS[name]()
    except KeyError:
        raise InputError(
            f"unknown exact field {name!r}; known: {sorted(_SCALAR_FIELDS)}"
        ) from None
