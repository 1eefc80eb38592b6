"""Operator contracts for A (single-valued), B (through its resolvent) and Phi.

Parameters ``u`` live in R^m with the Euclidean norm.  Operators that do not
depend on the parameter accept ``u=None``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonConvergedDerivative
from .hilbert import HilbertSpace, operator_constants
from .report import PropertyReport

DEFAULT_STEPS = (1e-2, 1e-3, 1e-4, 1e-5)


def _param_term(N, u):
    if N is None or u is None:
        return 0.0
    return N @ np.asarray(u, dtype=float)


def _shift_param(u, h, t):
    if u is None:
        return None
    if h is None:
        return np.asarray(u, dtype=float)
    return np.asarray(u, dtype=float) + t * np.asarray(h, dtype=float)


class SingleValuedOp(ABC):
    """A(y, u): Y x U -> Y*, strongly monotone and Lipschitz in y.

    ``mu`` and ``lip`` are trusted metadata; ``oracle_verify`` can audit them.
    ``center``/``radius`` optionally record where they are claimed to hold.
    """

    #: set to True by operators that are the y-gradient of a potential
    is_gradient = False

    def __init__(self, space: HilbertSpace, mu: float, lip: float, center=None, radius=None):
        mu = float(mu)
        lip = float(lip)
        if not mu > 0:
            raise ConfigError(f"strong monotonicity constant must be positive, got mu={mu}")
        if not lip >= mu:
            raise ConfigError(f"Lipschitz constant must satisfy lip >= mu, got mu={mu}, lip={lip}")
        self.space = space
        self.mu = mu
        self.lip = lip
        self.center = None if center is None else space.check(center, "center")
        self.radius = radius

    @property
    def gamma(self) -> float:
        return self.lip / self.mu

    @abstractmethod
    def eval(self, y, u) -> np.ndarray:
        """Value A(y, u) as a dual vector."""

    @abstractmethod
    def dir_deriv(self, y, u, dy, du) -> np.ndarray:
        """Directional derivative A'(y, u; dy, du) as a dual vector."""

    def __call__(self, y, u):
        return self.eval(y, u)

    def with_constants(self, mu=None, lip=None) -> "SingleValuedOp":
        """Shallow copy with overridden metadata (validated again)."""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        SingleValuedOp.__init__(
            clone,
            self.space,
            self.mu if mu is None else mu,
            self.lip if lip is None else lip,
            self.center,
            self.radius,
        )
        return clone


class AffineOp(SingleValuedOp):
    """A(y, u) = M y + N u + b.

    Constants default to the exact values in the metric of ``space``.
    """

    def __init__(self, space, matrix, param_matrix=None, offset=None, mu=None, lip=None):
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        if M.shape != (space.dim, space.dim):
            raise ConfigError(f"matrix has shape {M.shape}, expected {(space.dim, space.dim)}")
        self.matrix = M
        self.param_matrix = None if param_matrix is None else np.atleast_2d(np.asarray(param_matrix, dtype=float))
        if self.param_matrix is not None and self.param_matrix.shape[0] != space.dim:
            raise ConfigError("param_matrix must have one row per state component")
        self.offset = np.zeros(space.dim) if offset is None else space.check(offset, "offset")
        if mu is None or lip is None:
            mu_exact, lip_exact = operator_constants(space, M)
            lip_exact = max(lip_exact, mu_exact)
            mu = mu_exact if mu is None else mu
            lip = lip_exact if lip is None else lip
        self.is_gradient = bool(np.allclose(M, M.T, rtol=0, atol=1e-14 * (1 + np.abs(M).max())))
        super().__init__(space, mu, lip)

    def eval(self, y, u):
        return self.matrix @ self.space.check(y) + _param_term(self.param_matrix, u) + self.offset

    def dir_deriv(self, y, u, dy, du):
        return self.matrix @ self.space.check(dy) + _param_term(self.param_matrix, du)


class FunctionOp(SingleValuedOp):
    """Wraps plain callables ``f(y, u)`` and ``df(y, u, dy, du)``."""

    def __init__(self, space, f, df, mu, lip, is_gradient=False):
        self._f = f
        self._df = df
        self.is_gradient = is_gradient
        super().__init__(space, mu, lip)

    def eval(self, y, u):
        return np.asarray(self._f(self.space.check(y), u), dtype=float)

    def dir_deriv(self, y, u, dy, du):
        return np.asarray(self._df(self.space.check(y), u, self.space.check(dy), du), dtype=float)


class ResolventOp(ABC):
    """A parametrised maximally monotone B(., u), accessed only via J_{rho B}.

    ``resolvent(rho, q, u)`` returns the unique y with 0 in R(y - q) + rho B(y, u).
    """

    def __init__(self, space: HilbertSpace):
        self.space = space

    @abstractmethod
    def resolvent(self, rho, q, u) -> np.ndarray:
        ...

    @abstractmethod
    def resolvent_dir_deriv(self, rho, q, u, k, h) -> np.ndarray:
        """J_{rho B}'(q, u; k, h)."""

    def graph_residual(self, y, xi, u) -> float:
        """||y - J_B(y + R^{-1} xi, u)||; zero exactly when xi is in B(y, u)."""
        y = self.space.check(y)
        return self.space.norm(y - self.resolvent(1.0, y + self.space.riesz_inv(xi), u))

    def contains(self, y, xi, u, tol=1e-8) -> bool:
        """Membership xi in B(y, u).  Subclasses with a direct test override this."""
        return self.graph_residual(y, xi, u) <= tol * (1.0 + self.space.norm(y))


class PhiOp(ABC):
    """Phi(y, u): Y x U -> Y, a contraction in y with constant ``lip_phi``."""

    def __init__(self, space: HilbertSpace, lip_phi: float):
        lip_phi = float(lip_phi)
        if not 0.0 <= lip_phi < 1.0:
            raise ConfigError(f"lip_phi must lie in [0, 1), got {lip_phi}")
        self.space = space
        self.lip_phi = lip_phi

    @abstractmethod
    def eval(self, y, u) -> np.ndarray:
        ...

    @abstractmethod
    def dir_deriv(self, y, u, dy, du) -> np.ndarray:
        ...

    def __call__(self, y, u):
        return self.eval(y, u)


class AffinePhi(PhiOp):
    """Phi(y, u) = P y + N u + c."""

    def __init__(self, space, matrix=None, param_matrix=None, offset=None, lip_phi=None):
        n = space.dim
        P = np.zeros((n, n)) if matrix is None else np.atleast_2d(np.asarray(matrix, dtype=float))
        if P.shape != (n, n):
            raise ConfigError(f"Phi matrix has shape {P.shape}, expected {(n, n)}")
        self.matrix = P
        self.param_matrix = None if param_matrix is None else np.atleast_2d(np.asarray(param_matrix, dtype=float))
        self.offset = np.zeros(n) if offset is None else space.check(offset, "offset")
        if lip_phi is None:
            S = space.sqrt_gram()
            lip_phi = float(np.linalg.norm(S @ P @ np.linalg.inv(S), 2))
        super().__init__(space, lip_phi)

    def eval(self, y, u):
        return self.matrix @ self.space.check(y) + _param_term(self.param_matrix, u) + self.offset

    def dir_deriv(self, y, u, dy, du):
        return self.matrix @ self.space.check(dy) + _param_term(self.param_matrix, du)


class AbsPhi(PhiOp):
    """Phi(y, u)_i = alpha |y_i|_tau + (N u)_i + c_i with |s|_tau = sqrt(s^2 + tau^2).

    ``tau = 0`` gives the exact absolute value (kinks at y_i = 0).  Needs a
    diagonal Gram so that the pointwise map is alpha-Lipschitz.
    """

    def __init__(self, space, alpha, offset=None, param_matrix=None, tau=0.0):
        if not space.gram_is_diagonal:
            raise ConfigError("AbsPhi requires a diagonal Gram matrix")
        self.alpha = float(alpha)
        self.tau = float(tau)
        if self.tau < 0:
            raise ConfigError("tau must be non-negative")
        self.offset = np.zeros(space.dim) if offset is None else np.broadcast_to(
            np.asarray(offset, dtype=float), (space.dim,)).copy()
        self.param_matrix = None if param_matrix is None else np.atleast_2d(np.asarray(param_matrix, dtype=float))
        super().__init__(space, abs(self.alpha))

    def eval(self, y, u):
        y = self.space.check(y)
        mag = np.sqrt(y * y + self.tau ** 2) if self.tau > 0 else np.abs(y)
        return self.alpha * mag + _param_term(self.param_matrix, u) + self.offset

    def dir_deriv(self, y, u, dy, du):
        y = self.space.check(y)
        dy = self.space.check(dy)
        if self.tau > 0:
            slope = y / np.sqrt(y * y + self.tau ** 2)
            d = slope * dy
        else:
            d = np.where(y != 0, np.sign(y) * dy, np.abs(dy))
        return self.alpha * d + _param_term(self.param_matrix, du)


@dataclass
class NumericDerivative:
    value: np.ndarray
    steps: tuple
    quotients: list = field(default_factory=list)
    drift: float = 0.0


def numeric_resolvent_deriv(B: ResolventOp, rho, q, u, k, h=None, steps=DEFAULT_STEPS, max_drift=1e-6):
    """Difference quotients (J(q + t k, u + t h) - J(q, u)) / t over decreasing t.

    Returns the quotient at the smallest step; ``drift`` is the norm of the
    change between the last two quotients.  Raises NonConvergedDerivative when
    ``drift > max_drift * (1 + |value|)`` (pass ``max_drift=None`` to disable).
    """
    steps = tuple(float(t) for t in steps)
    if not steps or any(t <= 0 for t in steps) or any(a <= b for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be positive and strictly decreasing")
    space = B.space
    q = space.check(q)
    k = space.check(k)
    base = B.resolvent(rho, q, u)
    quotients = [(B.resolvent(rho, q + t * k, _shift_param(u, h, t)) - base) / t for t in steps]
    drift = space.norm(quotients[-1] - quotients[-2]) if len(quotients) > 1 else 0.0
    result = NumericDerivative(quotients[-1], steps, quotients, drift)
    if max_drift is not None and drift > max_drift * (1.0 + space.norm(result.value)):
        raise NonConvergedDerivative(f"difference quotients drift by {drift:.3e}", result)
    return result


def check_firm_nonexpansive(B: ResolventOp, rho, u, trials=1000, radius=1.0, center=None, seed=0, tol=1e-10):
    """Sample pairs q1, q2 in a ball and test ||dJ||^2 <= <dJ, dq>."""
    space = B.space
    rng = np.random.default_rng(seed)
    center = space.zeros() if center is None else space.check(center)
    worst = -np.inf
    witness = None
    for _ in range(trials):
        q1 = center + radius * rng.uniform() * space.random_unit(rng)
        q2 = center + radius * rng.uniform() * space.random_unit(rng)
        dJ = B.resolvent(rho, q1, u) - B.resolvent(rho, q2, u)
        lhs = space.inner(dJ, dJ)
        rhs = space.inner(dJ, q1 - q2)
        v = (lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
        if v > worst:
            worst = v
            witness = {"q1": q1.tolist(), "q2": q2.tolist(), "lhs": lhs, "rhs": rhs}
    return PropertyReport("firm_nonexpansive", trials, float(worst), tol, witness if worst > tol else None)
