"""Closed-form resolvents and their directional derivatives."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import ConfigError
from .operators import ResolventOp

TOL_ACTIVE = 1e-12


def _bounds(values, n, fill):
    if values is None:
        return np.full(n, fill)
    arr = np.array([fill if v is None else v for v in np.ravel(np.asarray(values, dtype=object))], dtype=float)
    return np.broadcast_to(arr, (n,)).copy()


class BoxNormalCone(ResolventOp):
    """B = N_K for the box K = {lower <= y <= upper}; J is the clamp onto K.

    Infinite bounds are allowed.  Requires a diagonal Gram matrix.
    """

    def __init__(self, space, lower=None, upper=None, tol_active=TOL_ACTIVE):
        if not space.gram_is_diagonal:
            raise ConfigError("box resolvent needs a diagonal Gram matrix")
        super().__init__(space)
        self.lower = _bounds(lower, space.dim, -np.inf)
        self.upper = _bounds(upper, space.dim, np.inf)
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ConfigError("box bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ConfigError("box requires lower <= upper componentwise")
        self.tol_active = float(tol_active)

    def resolvent(self, rho, q, u=None):
        return np.minimum(np.maximum(self.space.check(q), self.lower), self.upper)

    def critical_cone_projection(self, q, k):
        """Projection of k onto T_K(y*) intersected with the annihilator of xi*.

        y* = clamp(q) and xi* = R(q - y*).  Componentwise:
        interior -> k_i, strictly active -> 0, weakly active -> one-sided clamp.
        """
        q = self.space.check(q)
        k = self.space.check(k)
        y = self.resolvent(1.0, q)
        xi = self.space.riesz(q - y)
        tol = self.tol_active
        at_lo = np.abs(y - self.lower) <= tol
        at_hi = np.abs(y - self.upper) <= tol
        weak = np.abs(xi) <= tol
        out = k.copy()
        fixed = at_lo & at_hi
        lo = at_lo & ~fixed
        hi = at_hi & ~fixed
        out[fixed] = 0.0
        out[lo & ~weak] = 0.0
        out[hi & ~weak] = 0.0
        out[lo & weak] = np.maximum(k[lo & weak], 0.0)
        out[hi & weak] = np.minimum(k[hi & weak], 0.0)
        return out

    def resolvent_dir_deriv(self, rho, q, u, k, h=None):
        return self.critical_cone_projection(q, k)

    def contains(self, y, xi, u=None, tol=1e-8):
        y = self.space.check(y)
        xi = self.space.check(xi)
        scale = tol * (1.0 + np.abs(y))
        if np.any(y < self.lower - scale) or np.any(y > self.upper + scale):
            return False
        xscale = tol * (1.0 + np.abs(xi).max())
        pos_ok = np.all((xi <= xscale) | (y >= self.upper - scale))
        neg_ok = np.all((xi >= -xscale) | (y <= self.lower + scale))
        return bool(pos_ok and neg_ok)


def shrink(q, w):
    """max(|q| - w, 0) sign(q), with sign(0) = 0."""
    q = np.asarray(q, dtype=float)
    return np.maximum(np.abs(q) - w, 0.0) * np.sign(q)


def shrink_dir_deriv(rho, q, u, k, h, tol=TOL_ACTIVE):
    """Directional derivative of (q, u) -> shrink_{rho |u|}(q) in direction (k, h).

    With w = rho |u| and dw = rho |.|'(u; h) the cases are
    |q| > w: k - sign(q) dw;  |q| < w: 0;  |q| = w > 0: sign(q) max(sign(q) k - dw, 0);
    q = u = 0: shrink_{rho |h|}(k) (the map is positively homogeneous there).
    """
    q, u, k, h = (np.asarray(a, dtype=float) for a in (q, u, k, h))
    w = rho * np.abs(u)
    dw = rho * np.where(u != 0, np.sign(u) * h, np.abs(h))
    s = np.sign(q)
    gap = np.abs(q) - w
    kink = np.abs(gap) <= tol * (1.0 + np.abs(q))
    out = np.where(gap > 0, k - s * dw, 0.0)
    origin = kink & (np.abs(q) <= tol) & (w <= tol)
    edge = kink & ~origin
    out = np.where(edge, s * np.maximum(s * k - dw, 0.0), out)
    out = np.where(origin, shrink(k, rho * np.abs(h)), out)
    return out


class WeightedShrinkage(ResolventOp):
    """B(y, u) = subdifferential of y -> sum_i d_i |u_i y_i|, d = diag(G).

    The parameter u is the pointwise weight; its length must equal dim.
    """

    def __init__(self, space):
        if not space.gram_is_diagonal:
            raise ConfigError("shrinkage resolvent needs a diagonal Gram matrix")
        super().__init__(space)
        self.weights = np.diag(space.gram).copy()

    def _u(self, u):
        return self.space.check(np.zeros(self.space.dim) if u is None else u, "u")

    def resolvent(self, rho, q, u):
        return shrink(self.space.check(q), rho * np.abs(self._u(u)))

    def resolvent_dir_deriv(self, rho, q, u, k, h):
        h = np.zeros(self.space.dim) if h is None else h
        return shrink_dir_deriv(rho, self.space.check(q), self._u(u), self.space.check(k), self._u(h))

    def contains(self, y, xi, u, tol=1e-8):
        y = self.space.check(y)
        g = self.space.check(xi) / self.weights
        w = np.abs(self._u(u))
        scale = tol * (1.0 + np.abs(g) + w)
        nz = y != 0
        ok_nz = np.abs(g[nz] - w[nz] * np.sign(y[nz])) <= scale[nz]
        ok_z = np.abs(g[~nz]) <= w[~nz] + scale[~nz]
        return bool(np.all(ok_nz) and np.all(ok_z))


class LinearMonotoneB(ResolventOp):
    """Single-valued B(y, u) = M y with M + M^T positive semidefinite."""

    def __init__(self, space, matrix):
        super().__init__(space)
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        if M.shape != (space.dim, space.dim):
            raise ConfigError(f"matrix has shape {M.shape}, expected {(space.dim, space.dim)}")
        lam = np.linalg.eigvalsh(M + M.T)
        if lam[0] < -1e-12 * (1.0 + np.abs(lam).max()):
            raise ConfigError("linear B is not monotone: M + M^T has a negative eigenvalue")
        self.matrix = M
        self._lu = lru_cache(maxsize=8)(self._factor)

    def _factor(self, rho):
        A = self.space.gram + rho * self.matrix
        lu = linalg.lu_factor(A)
        if np.any(np.abs(np.diag(lu[0])) <= 1e-14 * np.abs(A).max()):
            raise ConfigError(f"G + rho M is singular for rho={rho}")
        return lu

    def resolvent(self, rho, q, u=None):
        return linalg.lu_solve(self._lu(float(rho)), self.space.riesz(q))

    def resolvent_dir_deriv(self, rho, q, u, k, h=None):
        return linalg.lu_solve(self._lu(float(rho)), self.space.riesz(k))

    def contains(self, y, xi, u=None, tol=1e-8):
        My = self.matrix @ self.space.check(y)
        return bool(np.linalg.norm(My - self.space.check(xi)) <= tol * (1.0 + np.linalg.norm(My)))


class ShiftedResolvent(ResolventOp):
    """Resolvent of y -> B(y - phi, u) for a frozen shift phi.

    J(q) = J_B(q - phi, u) + phi.  ``deriv_shift`` plays the same role for the
    derivative: J'(q; k, h) = J_B'(q - phi; k - psi, h) + psi.
    """

    def __init__(self, base: ResolventOp, shift, deriv_shift=None):
        super().__init__(base.space)
        self.base = base
        self.shift = base.space.check(shift, "shift")
        self.deriv_shift = base.space.zeros() if deriv_shift is None else base.space.check(deriv_shift)

    def resolvent(self, rho, q, u):
        return self.base.resolvent(rho, self.space.check(q) - self.shift, u) + self.shift

    def resolvent_dir_deriv(self, rho, q, u, k, h):
        psi = self.deriv_shift
        return self.base.resolvent_dir_deriv(rho, self.space.check(q) - self.shift, u, self.space.check(k) - psi, h) + psi

    def contains(self, y, xi, u, tol=1e-8):
        return self.base.contains(self.space.check(y) - self.shift, xi, u, tol)
