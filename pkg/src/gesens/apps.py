"""Ready-made problems: sparse-weighted minimisation and a 1-D quasilinear obstacle QVI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .ge import GEProblem
from .hilbert import HilbertSpace
from .operators import AbsPhi, AffineOp, AffinePhi, SingleValuedOp
from .qvi import QVIProblem
from .resolvents import BoxNormalCone, WeightedShrinkage


# -- sparse weighted problem -----------------------------------------------

@dataclass
class SparseProblemSpec:
    """min 1/2 y^T Q y - b^T y + sum_i d_i |u_i y_i| over R^n with weights d."""

    Q: np.ndarray
    b: np.ndarray
    weights: np.ndarray | None = None

    @property
    def n(self):
        return len(self.b)


def build_sparse(spec: SparseProblemSpec) -> GEProblem:
    Q = np.atleast_2d(np.asarray(spec.Q, dtype=float))
    b = np.atleast_1d(np.asarray(spec.b, dtype=float))
    n = b.size
    if Q.shape != (n, n):
        raise ConfigError(f"Q has shape {Q.shape}, expected {(n, n)}")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * (1 + np.abs(Q).max())):
        raise ConfigError("Q must be symmetric")
    if np.linalg.eigvalsh(0.5 * (Q + Q.T))[0] <= 0:
        raise ConfigError("Q must be positive definite")
    d = np.ones(n) if spec.weights is None else np.broadcast_to(np.asarray(spec.weights, dtype=float), (n,))
    space = HilbertSpace.diagonal(d)
    A = AffineOp(space, Q, offset=-b)
    return GEProblem(space, A, WeightedShrinkage(space))


def sparse_objective(spec: SparseProblemSpec, y, u) -> float:
    Q = np.atleast_2d(np.asarray(spec.Q, dtype=float))
    b = np.atleast_1d(np.asarray(spec.b, dtype=float))
    d = np.ones(b.size) if spec.weights is None else np.broadcast_to(np.asarray(spec.weights, dtype=float), (b.size,))
    y = np.asarray(y, dtype=float)
    return float(0.5 * y @ Q @ y - b @ y + np.sum(d * np.abs(np.asarray(u, dtype=float) * y)))


# -- quasilinear obstacle QVI ----------------------------------------------

@dataclass
class QuasilinearSpec:
    """-(g(y', u))' + f(u) on (0, 1), y(0) = y(1) = 0, n interior nodes.

    g(p, u) = p + beta arctan(p) / (1 + u^2), f(u) = u.  The constraint is
    y - Phi(y, u) <= obstacle with Phi(y, u) = alpha |y|_tau + psi0.
    ``phi`` selects "smooth_abs" (tau > 0), "abs" (exact kink) or "none".
    """

    n: int = 32
    beta: float = 0.5
    alpha: float = 0.05
    tau: float = 1e-6
    obstacle: float | np.ndarray | None = 0.1
    psi0: float = 0.0
    phi: str = "smooth_abs"
    smallness_case: str = "auto"

    @property
    def mesh(self):
        return 1.0 / (self.n + 1)

    @property
    def nodes(self):
        return np.arange(1, self.n + 1) * self.mesh


def flux(p, u, beta):
    return p + beta * np.arctan(p) / (1.0 + u * u)


def flux_dp(p, u, beta):
    return 1.0 + beta / ((1.0 + p * p) * (1.0 + u * u))


def flux_du(p, u, beta):
    return -2.0 * beta * u * np.arctan(p) / (1.0 + u * u) ** 2


def _grad(y, mesh):
    return np.diff(np.concatenate(([0.0], y, [0.0]))) / mesh


def _edge_avg(u):
    up = np.concatenate(([u[0]], u, [u[-1]]))
    return 0.5 * (up[:-1] + up[1:])


def _param(u, n, name="u"):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        return np.full(n, float(u))
    if u.shape != (n,):
        raise DimensionError(f"{name} has shape {u.shape}, expected ({n},)")
    return u


def _div(g):
    # node i sees edge i on its left and edge i + 1 on its right
    return g[:-1] - g[1:]


class QuasilinearOp(SingleValuedOp):
    """Finite-difference realisation of y -> -(g(y', u))' + f(u) as a dual vector."""

    is_gradient = True

    def __init__(self, space, beta, mu, lip):
        self.beta = float(beta)
        self.mesh = float(space.gram[0, 0])
        super().__init__(space, mu, lip)

    def eval(self, y, u):
        y = self.space.check(y)
        u = _param(u, y.size)
        p = _grad(y, self.mesh)
        return _div(flux(p, _edge_avg(u), self.beta)) + self.mesh * u

    def dir_deriv(self, y, u, dy, du):
        y = self.space.check(y)
        u = _param(u, y.size)
        du = np.zeros_like(y) if du is None else _param(du, y.size, "h")
        p = _grad(y, self.mesh)
        ue = _edge_avg(u)
        dg = flux_dp(p, ue, self.beta) * _grad(self.space.check(dy), self.mesh) + flux_du(p, ue, self.beta) * _edge_avg(du)
        return _div(dg) + self.mesh * du


def laplacian_extremes(n):
    """Extreme eigenvalues of D^T D for the Dirichlet forward-difference gradient."""
    mesh = 1.0 / (n + 1)
    return (4.0 / mesh ** 2 * np.sin(np.pi * mesh / 2.0) ** 2,
            4.0 / mesh ** 2 * np.cos(np.pi * mesh / 2.0) ** 2)


def quasilinear_constants(n, beta):
    """Global (mu, L) in the mass-lumped metric.

    The y-Jacobian is D^T diag(g_p) D in the scaled metric with 1 <= g_p <= 1 + beta,
    so the bounds follow from the extreme eigenvalues of D^T D.
    """
    lo, hi = laplacian_extremes(n)
    return lo, (1.0 + beta) * hi


def build_quasilinear(spec: QuasilinearSpec) -> QVIProblem:
    if spec.n < 2:
        raise ConfigError("quasilinear mesh needs n >= 2")
    if not 0.0 <= spec.beta < 1.0:
        raise ConfigError("beta must lie in [0, 1)")
    space = HilbertSpace.diagonal(np.full(spec.n, spec.mesh))
    mu, lip = quasilinear_constants(spec.n, spec.beta)
    A = QuasilinearOp(space, spec.beta, mu, lip)
    upper = None if spec.obstacle is None else np.broadcast_to(np.asarray(spec.obstacle, dtype=float), (spec.n,))
    B = BoxNormalCone(space, upper=upper)
    if spec.phi == "none":
        Phi = AffinePhi(space, offset=np.full(spec.n, spec.psi0), lip_phi=0.0)
    elif spec.phi in ("smooth_abs", "abs"):
        tau = spec.tau if spec.phi == "smooth_abs" else 0.0
        Phi = AbsPhi(space, spec.alpha, offset=spec.psi0, tau=tau)
    else:
        raise ConfigError(f"unknown Phi kind {spec.phi!r}")
    return QVIProblem(space, A, B, Phi, smallness_case=spec.smallness_case, potential=True)


def quasilinear_dirderiv_A(spec: QuasilinearSpec, y, u, dy, du):
    space = HilbertSpace.diagonal(np.full(spec.n, spec.mesh))
    mu, lip = quasilinear_constants(spec.n, spec.beta)
    return QuasilinearOp(space, spec.beta, mu, lip).dir_deriv(y, u, dy, du)


def dirichlet_stiffness(n, mesh=None):
    """Tridiagonal matrix (1/h) tridiag(-1, 2, -1) of the beta = 0 operator."""
    mesh = 1.0 / (n + 1) if mesh is None else mesh
    return (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / mesh
