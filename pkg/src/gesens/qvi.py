"""Quasi-generalized equations 0 in A(y, u) + B(y - Phi(y, u), u).

Two solution routes are provided and meant to be cross-checked:

* transformation: substitute z = y - Phi(y, u), solve the GE in z for
  A~(z, u) = A(Psi(z, u), u) with Psi = (id - Phi(., u))^{-1}, map back;
* iteration: freeze the shift phi = Phi(y_{n-1}, u), solve the GE with the
  shifted resolvent J(q - phi) + phi, repeat.

Both have sensitivity counterparts.  Everything requires the smallness
condition on L_Phi checked by :func:`check_smallness`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, ContractionViolation, InconsistentSolution,
                     NonConverged, SmallnessViolated)
from .ge import (RATIO_FLOOR, SolveReport, SolverConfig, _zero_like, fixed_point_solve,
                 frozen_param_derivs)
from .hilbert import HilbertSpace
from .operators import PhiOp, ResolventOp, SingleValuedOp
from .resolvents import ShiftedResolvent

PSI_TOL = 1e-14
MAX_PSI_ITERS = 10_000


@dataclass
class QVIProblem:
    space: HilbertSpace
    A: SingleValuedOp
    B: ResolventOp
    Phi: PhiOp
    smallness_case: str = "auto"
    potential: bool = False

    def __post_init__(self):
        for name, op in (("A", self.A), ("B", self.B), ("Phi", self.Phi)):
            if op.space.dim != self.space.dim:
                raise ConfigError(f"{name} acts on dimension {op.space.dim}, space has {self.space.dim}")
        if self.smallness_case not in ("A", "B", "auto"):
            raise ConfigError(f"smallness_case must be 'A', 'B' or 'auto', got {self.smallness_case!r}")


@dataclass
class SmallnessReport:
    case: str
    gamma_A: float
    L_phi: float
    bound: float
    margin: float
    C: float
    c_tilde: float
    bound_A: float
    bound_B: float
    potential: bool

    def to_dict(self):
        return dict(self.__dict__)


def smallness_constants(mu, lip, lip_phi, case):
    """(bound, C, c_tilde) for the general case "A" or the gradient case "B"."""
    gamma = lip / mu
    if case == "A":
        return 1.0 / gamma, mu / 2.0, gamma * lip_phi
    return (2.0 * math.sqrt(gamma) / (1.0 + gamma), mu * lip / (mu + lip),
            (1.0 + gamma) * lip_phi / (2.0 * math.sqrt(gamma)))


def check_smallness(prob: QVIProblem) -> SmallnessReport:
    mu, lip, lphi = prob.A.mu, prob.A.lip, prob.Phi.lip_phi
    gamma = lip / mu
    bound_a = smallness_constants(mu, lip, lphi, "A")[0]
    bound_b = smallness_constants(mu, lip, lphi, "B")[0]
    ok_a = lphi < bound_a
    ok_b = lphi < bound_b and prob.potential
    if prob.smallness_case == "A":
        case = "A" if ok_a else None
    elif prob.smallness_case == "B":
        case = "B" if ok_b else None
    else:
        case = "A" if ok_a else ("B" if ok_b else None)

    def report(c):
        bound, C, ct = smallness_constants(mu, lip, lphi, c)
        return SmallnessReport(c, gamma, lphi, bound, bound - lphi, C, ct, bound_a, bound_b, prob.potential)

    if case is None:
        c = "B" if prob.smallness_case == "B" else "A"
        rep = report(c)
        msg = (f"smallness violated: L_phi={lphi:.6g}, gamma={gamma:.6g}; "
               f"general bound 1/gamma={bound_a:.6g}, gradient bound 2 sqrt(gamma)/(1+gamma)={bound_b:.6g}")
        if lphi < bound_b and not prob.potential:
            msg += "; the gradient bound holds but requires potential=true"
        raise SmallnessViolated(msg, rep)
    return report(case)


def transformed_constants(prob: QVIProblem, sr: SmallnessReport):
    """(mu, lip) of z -> A(Psi(z, u), u)."""
    lphi = prob.Phi.lip_phi
    mu = sr.C * (1.0 - sr.c_tilde) / (1.0 + lphi) ** 2
    lip = prob.A.lip / (1.0 - lphi)
    return mu, max(lip, mu)


def _contract(space, step_map, start, lip, what):
    """Fixed point of a lip-contraction, iterated down to roundoff."""
    x = start
    for _ in range(MAX_PSI_ITERS):
        x_new = step_map(x)
        s = space.norm(x_new - x)
        x = x_new
        if s == 0.0 or (lip == 0.0) or s * lip / (1.0 - lip) <= PSI_TOL * (1.0 + space.norm(x)):
            return x
    raise NonConverged(f"{what} fixed point did not converge", None)


def psi(prob: QVIProblem, z, u):
    """Psi(z, u) = (id - Phi(., u))^{-1}(z): the y with y = z + Phi(y, u), from a cold start at z."""
    z = prob.space.check(z, "z")
    return _contract(prob.space, lambda y: z + prob.Phi.eval(y, u), z, prob.Phi.lip_phi, "Psi")


def psi_dir_deriv(prob: QVIProblem, y, u, k, h):
    """Psi'(z, u; k, h): the delta with delta = k + Phi'(y, u; delta, h), y = Psi(z, u)."""
    k = prob.space.check(k, "k")
    return _contract(prob.space, lambda d: k + prob.Phi.dir_deriv(y, u, d, h), k, prob.Phi.lip_phi, "Psi'")


def qvi_residual(prob: QVIProblem, y, u, rho=None) -> float:
    """||y - (J_{rho B}(y - rho R^{-1} A(y, u) - phi, u) + phi)|| with phi = Phi(y, u)."""
    space = prob.space
    rho = prob.A.mu / prob.A.lip ** 2 if rho is None else rho
    phi = prob.Phi.eval(y, u)
    q = y - rho * space.riesz_inv(prob.A.eval(y, u))
    return space.norm(y - prob.B.resolvent(rho, q - phi, u) - phi)


@dataclass
class QVIReport:
    y: np.ndarray
    method: str
    converged: bool
    stages: int
    residual: float
    smallness: SmallnessReport
    z: np.ndarray | None = None
    inner: SolveReport | None = None
    history: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    outer_rate: float = 0.0

    def require(self, what="QVI solve"):
        if not self.converged:
            raise NonConverged(f"{what} ({self.method}) did not converge after {self.stages} stages", self)
        return self

    def to_dict(self):
        return {
            "y": self.y.tolist(),
            "method": self.method,
            "converged": self.converged,
            "stages": self.stages,
            "residual": self.residual,
            "smallness": self.smallness.to_dict(),
            "z": None if self.z is None else self.z.tolist(),
            "inner": None if self.inner is None else self.inner.to_dict(),
            "history": list(self.history),
            "inner_iters": list(self.inner_iters),
            "outer_rate": self.outer_rate,
        }


def solve_transformation(prob: QVIProblem, u, cfg: SolverConfig | None = None, z0=None) -> QVIReport:
    cfg = cfg or SolverConfig()
    sr = check_smallness(prob)
    mu_t, lip_t = transformed_constants(prob, sr)

    def a_eval(z):
        return prob.A.eval(psi(prob, z, u), u)

    def res(rho, q):
        return prob.B.resolvent(rho, q, u)

    if z0 is None and not (isinstance(cfg.y0, str) and cfg.y0 == "zero"):
        y0 = prob.space.check(cfg.y0, "y0")
        z0 = y0 - prob.Phi.eval(y0, u)
    h0 = _zero_like(u)

    def a_d(z, dz):
        y = psi(prob, z, u)
        return prob.A.dir_deriv(y, u, psi_dir_deriv(prob, y, u, dz, h0), h0)

    _, r_d = frozen_param_derivs(prob.A, prob.B, u)
    rep = fixed_point_solve(prob.space, a_eval, res, mu_t, lip_t, cfg, z0, a_d, r_d)
    y = psi(prob, rep.y, u)
    return QVIReport(y, "transformation", rep.converged, 1, qvi_residual(prob, y, u), sr,
                     z=rep.y, inner=rep, history=[], iterates=[], inner_iters=[rep.iters])


def _ratio_sup(steps, scale):
    r = [b / a for a, b in zip(steps, steps[1:]) if a > RATIO_FLOOR * scale]
    return max(r) if r else 0.0


def solve_iteration(prob: QVIProblem, u, cfg: SolverConfig | None = None, anchor=None,
                    tol_outer=None, max_stages=500) -> QVIReport:
    """Frozen-shift iteration y_n solves 0 in A(y, u) + B(y - Phi(y_{n-1}, u), u).

    Stops when ||y_n - y_{n-1}|| <= tol_outer (default ``cfg.tol_residual``)
    or when the next shift equals the current one exactly.  Inner solves use
    tolerance tol_outer / 10.
    """
    cfg = cfg or SolverConfig()
    sr = check_smallness(prob)
    space, A = prob.space, prob.A
    tol_outer = cfg.tol_residual if tol_outer is None else float(tol_outer)
    inner_cfg = cfg.replace(tol_residual=tol_outer / 10.0)
    y_prev = space.zeros() if anchor is None else space.check(anchor, "anchor").copy()
    phi = prob.Phi.eval(y_prev, u)
    steps, iterates, inner_iters = [], [y_prev.copy()], []
    converged = False

    def a_eval(y):
        return A.eval(y, u)

    for _ in range(int(max_stages)):
        Bh = ShiftedResolvent(prob.B, phi)
        a_d, r_d = frozen_param_derivs(A, prob.B, u, shift_B=Bh)
        rep = fixed_point_solve(space, a_eval, lambda rho, q: Bh.resolvent(rho, q, u),
                                A.mu, A.lip, inner_cfg, y_prev, a_d, r_d)
        rep.require("inner GE stage")
        y = rep.y
        inner_iters.append(rep.iters)
        steps.append(space.norm(y - y_prev))
        if cfg.keep_history:
            iterates.append(y.copy())
        phi_next = prob.Phi.eval(y, u)
        y_prev = y
        if steps[-1] <= tol_outer or np.array_equal(phi_next, phi):
            converged = True
            break
        phi = phi_next
    rate = _ratio_sup(steps, 1.0 + space.norm(y_prev))
    if rate > sr.c_tilde + 0.05:
        warnings.warn(ContractionViolation(
            f"outer rate {rate:.4f} exceeds c_tilde={sr.c_tilde:.4f}"))
    return QVIReport(y_prev, "iteration", converged, len(steps), qvi_residual(prob, y_prev, u), sr,
                     history=steps, iterates=iterates, inner_iters=inner_iters, outer_rate=rate)


def solve(prob: QVIProblem, u, cfg: SolverConfig | None = None, method="transformation", **kw) -> QVIReport:
    if method in ("transformation", "transfo"):
        return solve_transformation(prob, u, cfg, **kw)
    if method in ("iteration", "iter"):
        return solve_iteration(prob, u, cfg, **kw)
    raise ConfigError(f"unknown QVI method {method!r}")


def c_rho_diagnostic(prob: QVIProblem, u, u_star, y_star, rho) -> float:
    """2||Phi(y*, u) - phi*|| + ||J(q*_rho - phi*, u) - J(q*_rho - phi*, u*)|| + rho ||A(y*, u) - A(y*, u*)||_*."""
    space = prob.space
    y_star = space.check(y_star, "y_star")
    phi_star = prob.Phi.eval(y_star, u_star)
    A_star = prob.A.eval(y_star, u_star)
    base = y_star - rho * space.riesz_inv(A_star) - phi_star
    return (2.0 * space.norm(prob.Phi.eval(y_star, u) - phi_star)
            + space.norm(prob.B.resolvent(rho, base, u) - prob.B.resolvent(rho, base, u_star))
            + rho * space.dual_norm(prob.A.eval(y_star, u) - A_star))


def apriori_bound(c_tilde, c, n, c_rho) -> float:
    """c_tilde^n / ((1 - c)(1 - c_tilde)) * C_rho(u)."""
    return c_tilde ** n / ((1.0 - c) * (1.0 - c_tilde)) * c_rho


def _base_point(prob, u_star, y_star):
    space = prob.space
    y_star = space.check(y_star, "y_star")
    phi_star = prob.Phi.eval(y_star, u_star)
    A_star = prob.A.eval(y_star, u_star)
    z_star = y_star - phi_star
    gap = prob.B.graph_residual(z_star, -A_star, u_star)
    if gap > 1e-8 * (1.0 + space.norm(y_star)):
        raise InconsistentSolution(f"resolvent identity violated by {gap:.3e}: y* does not solve the QVI")
    return y_star, phi_star, space.riesz_inv(A_star)


@dataclass
class QVISensitivity:
    delta: np.ndarray
    method: str
    stages: int
    history: list = field(default_factory=list)
    k: np.ndarray | None = None

    def to_dict(self):
        return {"delta": self.delta.tolist(), "method": self.method, "stages": self.stages,
                "history": list(self.history), "k": None if self.k is None else self.k.tolist()}


def sensitivity_transformation(prob: QVIProblem, u_star, h, cfg: SolverConfig | None = None,
                               y_star=None, full=False):
    """delta = Psi'(k) where k solves 0 in A'(y*, u*; Psi'(k), h) + DB(z*, u* | xi*)(k, h)."""
    cfg = cfg or SolverConfig()
    sr = check_smallness(prob)
    if y_star is None:
        y_star = solve_transformation(prob, u_star, cfg).require().y
    y_star, phi_star, step = _base_point(prob, u_star, y_star)
    mu_t, lip_t = transformed_constants(prob, sr)

    def a_lin(k):
        return prob.A.dir_deriv(y_star, u_star, psi_dir_deriv(prob, y_star, u_star, k, h), h)

    def res_lin(rho, k):
        return prob.B.resolvent_dir_deriv(rho, y_star - phi_star - rho * step, u_star, k, h)

    rep = fixed_point_solve(prob.space, a_lin, res_lin, mu_t, lip_t, cfg.replace(y0="zero"))
    rep.require("linearized transformed solve")
    delta = psi_dir_deriv(prob, y_star, u_star, rep.y, h)
    out = QVISensitivity(delta, "transformation", 1, [], rep.y)
    return out if full else delta


def sensitivity_iteration(prob: QVIProblem, u_star, h, cfg: SolverConfig | None = None,
                          y_star=None, tol_outer=None, max_stages=500, full=False):
    """delta_n solves 0 in A'(y*, u*; delta, h) + DB(z*, u* | xi*)(delta - psi_n, h),
    psi_n = Phi'(y*, u*; delta_{n-1}, h), delta_0 = 0."""
    cfg = cfg or SolverConfig()
    check_smallness(prob)
    space, A = prob.space, prob.A
    if y_star is None:
        y_star = solve_transformation(prob, u_star, cfg).require().y
    y_star, phi_star, step = _base_point(prob, u_star, y_star)
    tol_outer = cfg.tol_residual if tol_outer is None else float(tol_outer)
    inner_cfg = cfg.replace(tol_residual=tol_outer / 10.0, y0="zero")

    def a_lin(d):
        return A.dir_deriv(y_star, u_star, d, h)

    delta = space.zeros()
    shift = prob.Phi.dir_deriv(y_star, u_star, delta, h)
    steps = []
    converged = False
    for _ in range(int(max_stages)):
        def res_lin(rho, k, shift=shift):
            base = y_star - phi_star - rho * step
            return prob.B.resolvent_dir_deriv(rho, base, u_star, k - shift, h) + shift

        rep = fixed_point_solve(space, a_lin, res_lin, A.mu, A.lip, inner_cfg, delta)
        rep.require("linearized inner stage")
        steps.append(space.norm(rep.y - delta))
        delta = rep.y
        shift_next = prob.Phi.dir_deriv(y_star, u_star, delta, h)
        if steps[-1] <= tol_outer or np.array_equal(shift_next, shift):
            converged = True
            break
        shift = shift_next
    if not converged:
        raise NonConverged(f"derivative iteration did not converge in {max_stages} stages", None)
    out = QVISensitivity(delta, "iteration", len(steps), steps)
    return out if full else delta


def sensitivity(prob: QVIProblem, u_star, h, cfg=None, method="transformation", **kw):
    if method in ("transformation", "transfo"):
        return sensitivity_transformation(prob, u_star, h, cfg, **kw)
    if method in ("iteration", "iter"):
        return sensitivity_iteration(prob, u_star, h, cfg, **kw)
    raise ConfigError(f"unknown QVI method {method!r}")


def fd_oracle_sensitivity(prob: QVIProblem, u_star, h, cfg=None, steps=(1e-2, 1e-3, 1e-4, 1e-5),
                          y_star=None, method="transformation"):
    """Difference quotients of the QVI solution map; returns (value, quotients)."""
    cfg = cfg or SolverConfig()
    u_star = np.asarray(u_star, dtype=float)
    h = np.asarray(h, dtype=float)
    if y_star is None:
        y_star = solve(prob, u_star, cfg, method).require().y
    quotients = [(solve(prob, u_star + t * h, cfg, method).require().y - y_star) / t for t in steps]
    return quotients[-1], quotients
