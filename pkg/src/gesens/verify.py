"""Independent oracles: convex-gradient inequalities, constant audits, brute-force prox."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertSpace
from .operators import PhiOp, SingleValuedOp
from .report import PropertyReport

VIOLATION_TOL = 1e-10


@dataclass
class Region:
    """Ball of ``radius`` around ``center`` (origin by default) in the space metric."""

    space: HilbertSpace
    radius: float = 1.0
    center: np.ndarray | None = None

    def sample(self, rng):
        c = self.space.zeros() if self.center is None else self.space.check(self.center)
        return c + self.radius * rng.uniform() ** (1.0 / self.space.dim) * self.space.random_unit(rng)


def _normalized(lhs, rhs):
    """Positive when lhs >= rhs is violated, scaled by the size of both sides."""
    return (rhs - lhs) / (1.0 + abs(lhs) + abs(rhs))


def _pair_check(name, region, trials, seed, sides, tol=VIOLATION_TOL, pairs=None):
    rng = np.random.default_rng(seed)
    worst, witness = -np.inf, None
    if pairs is None:
        pairs = ((region.sample(rng), region.sample(rng)) for _ in range(trials))
    n = 0
    for y1, y2 in pairs:
        n += 1
        lhs, rhs = sides(y1, y2)
        v = _normalized(lhs, rhs)
        if v > worst:
            worst = v
            witness = {"y1": np.asarray(y1).tolist(), "y2": np.asarray(y2).tolist(), "lhs": lhs, "rhs": rhs}
    return PropertyReport(name, n, float(worst), tol, witness if worst > tol else None)


def check_cocoercivity(f_grad, L, region: Region, trials=1000, seed=0, pairs=None) -> PropertyReport:
    """<f'(y2) - f'(y1), y2 - y1> >= (1/L) ||f'(y2) - f'(y1)||_*^2."""
    sp = region.space

    def sides(y1, y2):
        dg = f_grad(y2) - f_grad(y1)
        return sp.pair(dg, y2 - y1), sp.dual_norm(dg) ** 2 / L

    return _pair_check("cocoercivity", region, trials, seed, sides, pairs=pairs)


def check_combined_inequality(f_grad, mu, L, region: Region, trials=1000, seed=0, pairs=None) -> PropertyReport:
    """<dg, dy> >= mu L/(mu + L) ||dy||^2 + 1/(mu + L) ||dg||_*^2 for gradients of
    mu-strongly convex functions with L-Lipschitz gradient."""
    sp = region.space

    def sides(y1, y2):
        dy = y2 - y1
        dg = f_grad(y2) - f_grad(y1)
        return sp.pair(dg, dy), mu * L / (mu + L) * sp.norm(dy) ** 2 + sp.dual_norm(dg) ** 2 / (mu + L)

    return _pair_check("combined_inequality", region, trials, seed, sides, pairs=pairs)


@dataclass
class ConstantEstimate:
    mu_est: float
    lip_est: float
    trials: int

    def audit(self, mu, lip, slack=1e-9) -> PropertyReport:
        """Declared constants must bracket the sampled ones: mu <= mu_est, lip >= lip_est."""
        worst = max(mu - self.mu_est, self.lip_est - lip) if self.mu_est == self.mu_est else self.lip_est - lip
        return PropertyReport("constants", self.trials, float(worst), slack,
                              details={"mu": mu, "lip": lip, "mu_est": self.mu_est, "lip_est": self.lip_est})


def estimate_constants(op, region: Region, u=None, trials=1000, seed=0) -> ConstantEstimate:
    """Sampled min of <dA, dy>/||dy||^2 and max of ||dA||/||dy||.

    For a Phi operator only the Lipschitz estimate (primal norms) is meaningful;
    ``mu_est`` is then NaN.
    """
    sp = region.space
    rng = np.random.default_rng(seed)
    is_phi = isinstance(op, PhiOp)
    mu_est, lip_est = np.inf, 0.0
    for _ in range(trials):
        y1, y2 = region.sample(rng), region.sample(rng)
        dy = y2 - y1
        ny = sp.norm(dy)
        if ny == 0:
            continue
        d = op.eval(y2, u) - op.eval(y1, u)
        if is_phi:
            lip_est = max(lip_est, sp.norm(d) / ny)
        else:
            mu_est = min(mu_est, sp.pair(d, dy) / ny ** 2)
            lip_est = max(lip_est, sp.dual_norm(d) / ny)
    return ConstantEstimate(float("nan") if is_phi else float(mu_est), float(lip_est), trials)


def brute_force_prox(q, w, rho=1.0, resolution=2001, iters=200) -> float:
    """argmin_v 1/2 (v - q)^2 + rho w |v| by a grid scan refined with ternary search."""
    q, w, rho = float(q), abs(float(w)), float(rho)

    def obj(v):
        return 0.5 * (v - q) ** 2 + rho * w * abs(v)

    lo, hi = q - rho * w - 1.0, q + rho * w + 1.0
    grid = np.linspace(lo, hi, resolution)
    vals = 0.5 * (grid - q) ** 2 + rho * w * np.abs(grid)
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, resolution - 1)]
    for _ in range(iters):
        m1, m2 = a + (b - a) / 3.0, b - (b - a) / 3.0
        if obj(m1) <= obj(m2):
            b = m2
        else:
            a = m1
    v = 0.5 * (a + b)
    # the kink at 0 is the only non-smooth candidate
    return 0.0 if obj(0.0) <= obj(v) else v


def check_potential_symmetry(op: SingleValuedOp, region: Region, u, trials=200, seed=0, tol=1e-8) -> PropertyReport:
    """<A'(y; d1), d2> = <A'(y; d2), d1> at sampled y, the testable shadow of A being a gradient."""
    sp = region.space
    rng = np.random.default_rng(seed)
    zero_h = None if u is None else np.zeros_like(np.asarray(u, dtype=float))
    worst, witness = -np.inf, None
    for _ in range(trials):
        y = region.sample(rng)
        d1, d2 = sp.random_unit(rng), sp.random_unit(rng)
        a = sp.pair(op.dir_deriv(y, u, d1, zero_h), d2)
        b = sp.pair(op.dir_deriv(y, u, d2, zero_h), d1)
        v = abs(a - b) / (1.0 + abs(a) + abs(b))
        if v > worst:
            worst, witness = v, {"y": y.tolist(), "lhs": a, "rhs": b}
    return PropertyReport("potential_symmetry", trials, float(worst), tol, witness if worst > tol else None)


def check_strong_monotonicity(op: SingleValuedOp, region: Region, u=None, trials=1000, seed=0):
    """<A(y2) - A(y1), dy> >= mu ||dy||^2 and ||dA||_* <= lip ||dy|| with the declared constants."""
    sp = region.space

    def sides(y1, y2):
        dy = y2 - y1
        d = op.eval(y2, u) - op.eval(y1, u)
        return sp.pair(d, dy), op.mu * sp.norm(dy) ** 2

    mono = _pair_check("strong_monotonicity", region, trials, seed, sides)

    def lip_sides(y1, y2):
        dy = y2 - y1
        d = op.eval(y2, u) - op.eval(y1, u)
        return op.lip * sp.norm(dy), sp.dual_norm(d)

    lip = _pair_check("lipschitz", region, trials, seed + 1, lip_sides)
    return mono, lip
