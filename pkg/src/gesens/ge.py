"""Generalized equations 0 in A(y, u) + B(y, u): solver and sensitivities.

The solver iterates the forward-backward map

    T(y) = J_{rho B}(y - rho R^{-1} A(y, u), u),

which is a contraction with factor c = sqrt(1 - 2 rho mu + rho^2 L^2) for
rho in (0, 2 mu / L^2).  Directional derivatives of the solution map solve
the same kind of inclusion with A replaced by A'(y*, u*; ., h) and the
resolvent replaced by its directional derivative at q*_rho.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, ContractionViolation, InconsistentSolution, NonConverged
from .hilbert import HilbertSpace
from .operators import DEFAULT_STEPS, ResolventOp, SingleValuedOp, numeric_resolvent_deriv

# steps smaller than this (relative to 1 + |y|) are too noisy to enter c_measured
RATIO_FLOOR = 1e-8
NONMONOTONE_WINDOW = 5


@dataclass
class GEProblem:
    space: HilbertSpace
    A: SingleValuedOp
    B: ResolventOp

    def __post_init__(self):
        for name, op in (("A", self.A), ("B", self.B)):
            if op.space.dim != self.space.dim:
                raise ConfigError(f"{name} acts on dimension {op.space.dim}, space has {self.space.dim}")


@dataclass
class SolverConfig:
    """Solver settings.

    ``method="fb"`` runs the certified contraction iteration.  ``"newton"``
    runs a semismooth Newton iteration on the natural residual (for badly
    conditioned problems) and certifies through the strong-monotonicity
    error bound instead.
    """

    rho: Any = "auto"
    tol_residual: float = 1e-10
    max_iters: int = 10_000
    y0: Any = "zero"
    method: str = "fb"
    keep_history: bool = True

    def __post_init__(self):
        if self.method not in ("fb", "newton"):
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.tol_residual > 0:
            raise ConfigError("tol_residual must be positive")
        if int(self.max_iters) < 1:
            raise ConfigError("max_iters must be at least 1")
        if not (self.rho == "auto" or (isinstance(self.rho, (int, float)) and self.rho > 0)):
            raise ConfigError(f"rho must be 'auto' or a positive number, got {self.rho!r}")

    def resolve_rho(self, mu: float, lip: float) -> float:
        if not (mu > 0 and lip >= mu):
            raise ConfigError(f"need 0 < mu <= lip, got mu={mu}, lip={lip}")
        if self.rho == "auto":
            return mu / lip ** 2
        rho = float(self.rho)
        if not rho < 2 * mu / lip ** 2:
            raise ConfigError(f"rho={rho} outside (0, 2 mu / L^2) = (0, {2 * mu / lip ** 2})")
        return rho

    def replace(self, **changes) -> "SolverConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return SolverConfig(**data)


def contraction_factor(rho: float, mu: float, lip: float) -> float:
    return math.sqrt(max(1.0 - 2.0 * rho * mu + rho ** 2 * lip ** 2, 0.0))


@dataclass
class SolveReport:
    y: np.ndarray
    iters: int
    rho_used: float
    c_predicted: float
    c_measured: float
    residual: float
    converged: bool
    method: str = "fb"
    error_bound: float = math.inf
    history: list = field(default_factory=list)

    def require(self, what="solve"):
        if not self.converged:
            raise NonConverged(f"{what} did not converge in {self.iters} iterations "
                               f"(residual {self.residual:.3e})", self)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["y"] = np.asarray(self.y).tolist()
        return d


def _measured_rate(steps, scale):
    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > RATIO_FLOOR * scale]
    return max(ratios) if ratios else 0.0


def fixed_point_solve(
    space: HilbertSpace,
    a_eval: Callable,
    resolvent: Callable,
    mu: float,
    lip: float,
    cfg: SolverConfig,
    y0=None,
    a_deriv: Callable | None = None,
    res_deriv: Callable | None = None,
) -> SolveReport:
    """Solve 0 in a(y) + B(y) given ``a_eval(y)`` (dual) and ``resolvent(rho, q)``.

    ``a_deriv(y, dy)`` and ``res_deriv(rho, q, k)`` are optional directional
    derivatives; the Newton method builds its Jacobian from them when given and
    from finite differences otherwise.
    """
    if y0 is None:
        y0 = space.zeros() if isinstance(cfg.y0, str) and cfg.y0 == "zero" else cfg.y0
    y = space.check(np.array(y0, dtype=float), "y0")
    if cfg.method == "newton":
        return _newton(space, a_eval, resolvent, mu, lip, cfg, y, a_deriv, res_deriv)

    rho = cfg.resolve_rho(mu, lip)
    c = contraction_factor(rho, mu, lip)

    def T(x):
        return resolvent(rho, x - rho * space.riesz_inv(a_eval(x)))

    threshold = cfg.tol_residual * (1.0 - c) / c if c > 0 else math.inf
    steps = []
    converged = False
    for _ in range(int(cfg.max_iters)):
        y_new = T(y)
        steps.append(space.norm(y_new - y))
        y = y_new
        if steps[-1] <= threshold:
            converged = True
            break
    residual = space.norm(y - T(y))
    c_measured = _measured_rate(steps, 1.0 + space.norm(y))
    if c_measured > c + 0.05:
        warnings.warn(ContractionViolation(
            f"measured contraction {c_measured:.4f} exceeds predicted {c:.4f}; check mu/lip metadata"))
    bound = c / (1.0 - c) * steps[-1] if c < 1 else math.inf
    return SolveReport(y, len(steps), rho, c, c_measured, residual, converged, "fb", bound,
                       steps if cfg.keep_history else [])


def _newton(space, a_eval, resolvent, mu, lip, cfg, y, a_deriv=None, res_deriv=None):
    """Semismooth Newton on F(y) = y - T_rho(y) with rho = 1/lip.

    Stops once ||y - y_sol|| is certified below tol via
    ||y - y_sol|| <= (1 + rho L)/(rho mu) ||F(y)||, then returns T(y).
    """
    rho = 1.0 / lip
    rho_fb = mu / lip ** 2
    c = contraction_factor(rho_fb, mu, lip)
    factor = (1.0 + rho * lip) / (rho * mu) + 1.0
    n = space.dim

    def T(x, r=rho):
        return resolvent(r, x - r * space.riesz_inv(a_eval(x)))

    steps = []
    converged = False
    Ty = T(y)
    res = space.norm(y - Ty)
    recent = [res]
    for _ in range(int(cfg.max_iters)):
        if factor * res <= cfg.tol_residual:
            converged = True
            steps.append(space.norm(Ty - y))
            y = Ty
            break
        F = y - Ty
        J = np.empty((n, n))
        if a_deriv is not None and res_deriv is not None:
            q = y - rho * space.riesz_inv(a_eval(y))
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                J[:, i] = e - res_deriv(rho, q, e - rho * space.riesz_inv(a_deriv(y, e)))
        else:
            for i in range(n):
                s = 1e-7 * max(1.0, abs(y[i]))
                e = np.zeros(n)
                e[i] = s
                J[:, i] = (e - (T(y + e) - Ty)) / s
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(J, -F, rcond=None)[0]
        # nonmonotone test: semismooth steps may raise the residual once before it collapses
        ref = max(recent[-NONMONOTONE_WINDOW:])
        lam = 1.0
        accepted = False
        while lam >= 2.0 ** -10:
            y_try = y + lam * d
            T_try = T(y_try)
            res_try = space.norm(y_try - T_try)
            if res_try <= (1.0 - 1e-4 * lam) * ref:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            y_try = T(y, rho_fb)
            T_try = T(y_try)
            res_try = space.norm(y_try - T_try)
        steps.append(space.norm(y_try - y))
        y, Ty, res = y_try, T_try, res_try
        recent.append(res)
    residual = space.norm(y - T(y))
    c_measured = _measured_rate(steps, 1.0 + space.norm(y))
    return SolveReport(y, len(steps), rho, c, c_measured, residual, converged, "newton",
                       factor * res, steps if cfg.keep_history else [])


def solve(prob: GEProblem, u, cfg: SolverConfig | None = None, y0=None, zeta=None) -> SolveReport:
    """Solve 0 in zeta + A(y, u) + B(y, u); ``zeta`` (dual) defaults to 0."""
    cfg = cfg or SolverConfig()
    A, B = prob.A, prob.B
    if zeta is None:
        def a_eval(y):
            return A.eval(y, u)
    else:
        zeta = prob.space.check(zeta, "zeta")

        def a_eval(y):
            return A.eval(y, u) + zeta

    def res(rho, q):
        return B.resolvent(rho, q, u)

    a_d, r_d = frozen_param_derivs(A, B, u)
    return fixed_point_solve(prob.space, a_eval, res, A.mu, A.lip, cfg, y0, a_d, r_d)


def _zero_like(u):
    return None if u is None else np.zeros_like(np.asarray(u, dtype=float))


def frozen_param_derivs(A, B, u, shift_B=None):
    """Directional derivatives in y only (parameter direction zero), for Newton Jacobians."""
    h0 = _zero_like(u)
    Bx = B if shift_B is None else shift_B

    def a_d(y, dy):
        return A.dir_deriv(y, u, dy, h0)

    def r_d(rho, q, k):
        return Bx.resolvent_dir_deriv(rho, q, u, k, h0)

    return a_d, r_d


def perturbation_bound(report: SolveReport, zeta_norm: float) -> float:
    """rho ||zeta|| / (1 - c): distance between solutions with and without zeta."""
    return report.rho_used * float(zeta_norm) / (1.0 - report.c_predicted)


def check_multiplier(prob: GEProblem, y_star, u_star, tol=1e-8):
    """xi* = -A(y*, u*) must lie in B(y*, u*); checked by the resolvent identity."""
    xi = -prob.A.eval(y_star, u_star)
    gap = prob.B.graph_residual(y_star, xi, u_star)
    if gap > tol * (1.0 + prob.space.norm(y_star)):
        raise InconsistentSolution(f"resolvent identity violated by {gap:.3e}: y* is not a solution")
    return xi


def sensitivity(prob: GEProblem, u_star, h, cfg: SolverConfig | None = None, y_star=None,
                numeric=False, full=False):
    """Directional derivative S'(u*; h) of the solution map.

    Solves 0 in A'(y*, u*; delta, h) + DB(y*, u* | xi*)(delta, h), where the
    resolvent of rho DB is k -> J_{rho B}'(q*_rho, u*; k, h) with
    q*_rho = y* - rho R^{-1} A(y*, u*).  ``numeric=True`` replaces the analytic
    resolvent derivative by difference quotients.
    """
    cfg = cfg or SolverConfig()
    space, A, B = prob.space, prob.A, prob.B
    if y_star is None:
        y_star = solve(prob, u_star, cfg).require("base solve").y
    y_star = space.check(y_star, "y_star")
    check_multiplier(prob, y_star, u_star)
    step = space.riesz_inv(A.eval(y_star, u_star))

    def a_lin(delta):
        return A.dir_deriv(y_star, u_star, delta, h)

    def res_lin(rho, k):
        q_rho = y_star - rho * step
        if numeric:
            return numeric_resolvent_deriv(B, rho, q_rho, u_star, k, h, max_drift=None).value
        return B.resolvent_dir_deriv(rho, q_rho, u_star, k, h)

    rep = fixed_point_solve(space, a_lin, res_lin, A.mu, A.lip, cfg.replace(y0="zero"))
    rep.require("linearized solve")
    return (rep.y, rep) if full else rep.y


@dataclass
class FDOracle:
    value: np.ndarray
    steps: tuple
    quotients: list
    drift: float

    def to_dict(self):
        return {"value": self.value.tolist(), "steps": list(self.steps),
                "quotients": [q.tolist() for q in self.quotients], "drift": self.drift}


def fd_oracle_sensitivity(prob: GEProblem, u_star, h, cfg: SolverConfig | None = None,
                          steps=DEFAULT_STEPS, y_star=None) -> FDOracle:
    """(S(u* + t h) - S(u*)) / t for each t; the value is the one at the smallest t."""
    cfg = cfg or SolverConfig()
    u_star = np.asarray(u_star, dtype=float)
    h = np.asarray(h, dtype=float)
    if y_star is None:
        y_star = solve(prob, u_star, cfg).require("base solve").y
    quotients = []
    for t in steps:
        y_t = solve(prob, u_star + t * h, cfg, y0=y_star).require(f"solve at t={t}").y
        quotients.append((y_t - y_star) / t)
    drift = prob.space.norm(quotients[-1] - quotients[-2]) if len(quotients) > 1 else 0.0
    return FDOracle(quotients[-1], tuple(steps), quotients, drift)
