"""Problem generators shared by the test modules."""

import numpy as np

from gesens import (AbsPhi, AffineOp, AffinePhi, BoxNormalCone, FunctionOp, GEProblem,
                    HilbertSpace, LinearMonotoneB, QVIProblem)
from gesens.hilbert import operator_constants


def random_spd(rng, n, lo=1.0, hi=4.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(lo, hi, n)) @ Q.T


def random_monotone(rng, n, lo=1.0, hi=3.0, skew=0.3):
    K = rng.standard_normal((n, n))
    return random_spd(rng, n, lo, hi) + skew * (K - K.T) / np.sqrt(n)


def random_linear_ge(rng, n=None, m=None, kind=None):
    """Affine A with exact constants in a random diagonal metric; B a box or a linear monotone map."""
    n = int(rng.integers(1, 51)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m
    kind = rng.choice(["box", "linear"]) if kind is None else kind
    space = HilbertSpace.diagonal(rng.uniform(0.5, 2.0, n))
    S = space.sqrt_gram()
    M = S @ random_monotone(rng, n) @ S
    A = AffineOp(space, M, param_matrix=rng.standard_normal((n, m)), offset=rng.standard_normal(n))
    if kind == "box":
        lo = np.where(rng.uniform(size=n) < 0.7, -rng.uniform(0, 1, n), -np.inf)
        hi = np.where(rng.uniform(size=n) < 0.7, rng.uniform(0, 1, n), np.inf)
        B = BoxNormalCone(space, lo, hi)
    else:
        P = rng.standard_normal((n, n))
        B = LinearMonotoneB(space, 0.5 * P @ P.T / n + 0.5 * (P - P.T) / n)
    return GEProblem(space, A, B), rng.standard_normal(m)


def smooth_ge(rng, n=4, kappa=1.0):
    """A(y, u) = M y + N u + kappa tanh(y) with B linear monotone: a C^1 solution map."""
    space = HilbertSpace.identity(n)
    M = random_monotone(rng, n, 1.0, 1.5, skew=0.1)
    N = rng.standard_normal((n, 2))
    mu0, lip0 = operator_constants(space, M)

    def f(y, u):
        return M @ y + N @ np.asarray(u) + kappa * np.tanh(y)

    def df(y, u, dy, du):
        return M @ dy + N @ np.asarray(du) + kappa * dy / np.cosh(y) ** 2

    A = FunctionOp(space, f, df, mu0, lip0 + kappa)
    P = rng.standard_normal((n, n))
    B = LinearMonotoneB(space, 0.2 * P @ P.T / n)
    return GEProblem(space, A, B), rng.standard_normal(2)


def box1d():
    space = HilbertSpace.identity(1)
    A = AffineOp(space, [[1.0]], param_matrix=[[-1.0]])
    return GEProblem(space, A, BoxNormalCone(space, lower=[0.0]))


def qvi_abs1d(offset=1.0, alpha=0.5):
    """A = y - u, y - (alpha |y| + offset) <= 0."""
    space = HilbertSpace.identity(1)
    A = AffineOp(space, [[1.0]], param_matrix=[[-1.0]])
    return QVIProblem(space, A, BoxNormalCone(space, upper=[0.0]), AbsPhi(space, alpha, offset=offset),
                      smallness_case="A")


def qvi_affine1d():
    """A = 2y - u, Phi = 0.3 y + 0.2 u + 0.1, y - Phi <= 0."""
    space = HilbertSpace.identity(1)
    A = AffineOp(space, [[2.0]], param_matrix=[[-1.0]])
    Phi = AffinePhi(space, [[0.3]], param_matrix=[[0.2]], offset=[0.1])
    return QVIProblem(space, A, BoxNormalCone(space, upper=[0.0]), Phi, smallness_case="A")


def qvi_multi(seed=3, n=3):
    rng = np.random.default_rng(seed)
    space = HilbertSpace.diagonal(rng.uniform(0.5, 1.5, n))
    S = space.sqrt_gram()
    M = S @ random_monotone(rng, n, 1.0, 1.3, skew=0.05) @ S
    A = AffineOp(space, M, param_matrix=-np.eye(n))
    lphi = 0.5 / A.gamma
    Phi = AbsPhi(space, lphi, offset=0.2 * np.ones(n), param_matrix=0.1 * np.eye(n))
    return QVIProblem(space, A, BoxNormalCone(space, upper=np.zeros(n)), Phi, smallness_case="A")


# (problem, u*, list of h) for the one-dimensional QVI suite
def qvi_suite():
    return [
        (qvi_abs1d(), [4.0], [[1.0], [-1.0]]),
        (qvi_abs1d(), [1.0], [[1.0], [-1.0]]),
        (qvi_abs1d(offset=0.0), [0.0], [[1.0], [-1.0]]),
        (qvi_affine1d(), [2.0], [[1.0], [-1.0]]),
        (qvi_affine1d(), [0.0], [[1.0], [-1.0]]),
    ]
