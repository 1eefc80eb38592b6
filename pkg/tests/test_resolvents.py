import numpy as np
import pytest
from hypothesis import given, strategies as st

from gesens import BoxNormalCone, ConfigError, HilbertSpace, LinearMonotoneB, ShiftedResolvent, WeightedShrinkage
from gesens.operators import check_firm_nonexpansive, numeric_resolvent_deriv
from gesens.resolvents import shrink, shrink_dir_deriv

ONE = HilbertSpace.identity(1)


def test_box_resolvent_examples():
    sp = HilbertSpace.identity(2)
    B = BoxNormalCone(sp, lower=0.0)
    np.testing.assert_array_equal(B.resolvent(1.0, [2.0, -1.0], None), [2.0, 0.0])
    np.testing.assert_array_equal(B.resolvent(7.0, [2.0, -1.0], None), B.resolvent(0.1, [2.0, -1.0], None))
    assert BoxNormalCone(ONE, -1, 1).resolvent(1.0, [0.5], None)[0] == 0.5


def test_box_validation():
    with pytest.raises(ConfigError):
        BoxNormalCone(HilbertSpace(np.array([[2.0, 1.0], [1.0, 2.0]])), 0, 1)
    with pytest.raises(ConfigError):
        BoxNormalCone(ONE, lower=[1.0], upper=[0.0])
    with pytest.raises(ConfigError):
        WeightedShrinkage(HilbertSpace(np.array([[2.0, 1.0], [1.0, 2.0]])))


def test_box_derivative_examples():
    B = BoxNormalCone(ONE, lower=[0.0])
    assert B.resolvent_dir_deriv(1.0, [2.0], None, [5.0], None)[0] == 5.0
    assert B.resolvent_dir_deriv(1.0, [-1.0], None, [3.0], None)[0] == 0.0
    assert B.resolvent_dir_deriv(1.0, [0.0], None, [-2.0], None)[0] == 0.0
    assert B.resolvent_dir_deriv(1.0, [0.0], None, [2.0], None)[0] == 2.0
    # upper weakly active and fixed components
    B = BoxNormalCone(HilbertSpace.identity(2), lower=[-np.inf, 1.0], upper=[0.0, 1.0])
    np.testing.assert_array_equal(B.resolvent_dir_deriv(1.0, [0.0, 1.0], None, [2.0, 2.0], None), [0.0, 0.0])
    np.testing.assert_array_equal(B.resolvent_dir_deriv(1.0, [0.0, 1.0], None, [-2.0, -2.0], None), [-2.0, 0.0])


@given(st.integers(0, 10_000))
def test_critical_cone_projection_properties(seed):
    rng = np.random.default_rng(seed)
    n = 6
    sp = HilbertSpace.diagonal(rng.uniform(0.5, 2, n))
    lo, hi = -np.ones(n), np.ones(n)
    B = BoxNormalCone(sp, lo, hi)
    # hit interior, strictly active and weakly active components on purpose
    q = rng.choice([-2.0, -1.0, 0.3, 1.0, 2.0], n)
    k = rng.standard_normal(n)
    D = B.critical_cone_projection(q, k)
    np.testing.assert_array_equal(B.critical_cone_projection(q, D), D)
    for t in (0.0, 0.5, 3.0):
        np.testing.assert_allclose(B.critical_cone_projection(q, t * k), t * D, rtol=1e-15)
    num = numeric_resolvent_deriv(B, 1.0, q, None, k, max_drift=None)
    np.testing.assert_allclose(D, num.value, atol=1e-12)


def test_shrink_examples():
    sp = ONE
    S = WeightedShrinkage(sp)
    assert S.resolvent(1.0, [2.0], [1.0])[0] == 1.0
    assert S.resolvent(1.0, [-0.5], [1.0])[0] == 0.0
    assert S.resolvent(3.0, [-0.7], [0.0])[0] == -0.7


def test_shrink_derivative_examples():
    S = WeightedShrinkage(ONE)
    assert S.resolvent_dir_deriv(1.0, [2.0], [1.0], [1.0], [0.0])[0] == 1.0
    assert S.resolvent_dir_deriv(1.0, [2.0], [1.0], [0.0], [1.0])[0] == -1.0
    assert S.resolvent_dir_deriv(1.0, [1.0], [1.0], [2.0], [1.0])[0] == 1.0
    assert S.resolvent_dir_deriv(1.0, [1.0], [1.0], [1.0], [2.0])[0] == 0.0
    # origin: shrink_{rho |h|}(k)
    assert S.resolvent_dir_deriv(2.0, [0.0], [0.0], [3.0], [1.0])[0] == 1.0
    assert S.resolvent_dir_deriv(2.0, [0.0], [0.0], [-1.0], [1.0])[0] == 0.0


@given(st.floats(-5, 5), st.floats(-3, 3), st.floats(0.01, 3))
def test_shrink_prox_optimality(q, u, rho):
    v = shrink(np.array([q]), rho * abs(u))[0]
    w = rho * abs(u)
    if v != 0:
        assert np.sign(v) == np.sign(q)
        assert abs(v - (q - w * np.sign(v))) <= 1e-14 * (1 + abs(q))
    else:
        assert abs(q) <= w + 1e-14


def _kink_points(rng):
    q, u = rng.standard_normal(), rng.standard_normal()
    rho = rng.uniform(0.2, 2)
    kind = rng.integers(4)
    if kind == 0:
        q = np.sign(q) * rho * abs(u)        # |q| = rho |u|
    elif kind == 1:
        q, u = 0.0, 0.0                      # double degenerate
    elif kind == 2:
        u = 0.0                              # zero weight
    return q, u, rho


@given(st.integers(0, 10_000))
def test_shrink_derivative_matches_quotients(seed):
    rng = np.random.default_rng(seed)
    q, u, rho = _kink_points(rng)
    k, h = rng.standard_normal(), rng.standard_normal()
    d = shrink_dir_deriv(rho, np.array([q]), np.array([u]), np.array([k]), np.array([h]))[0]
    errs = []
    for t in (1e-2, 1e-3, 1e-4, 1e-5):
        quo = (shrink(np.array([q + t * k]), rho * abs(u + t * h))[0] - shrink(np.array([q]), rho * abs(u))[0]) / t
        errs.append(abs(quo - d))
    C = errs[0] / 1e-2
    for t, e in zip((1e-3, 1e-4, 1e-5), errs[1:]):
        assert e <= C * t + 1e-9


def test_linear_b_examples():
    sp = ONE
    assert LinearMonotoneB(sp, [[0.0]]).resolvent(1.0, [3.0], None)[0] == 3.0
    assert LinearMonotoneB(sp, [[1.0]]).resolvent(1.0, [2.0], None)[0] == 1.0
    with pytest.raises(ConfigError):
        LinearMonotoneB(sp, [[-1.0]])
    B = LinearMonotoneB(HilbertSpace.identity(2), [[0.0, 1.0], [-1.0, 0.0]])
    assert check_firm_nonexpansive(B, 1.0, None, trials=1000).passed


def test_shifted_resolvent():
    B = BoxNormalCone(ONE, upper=[0.0])
    S = ShiftedResolvent(B, [1.5], deriv_shift=[0.5])
    assert S.resolvent(1.0, [3.0], None)[0] == 1.5
    assert S.resolvent(1.0, [1.0], None)[0] == 1.0
    # q - phi = 0 is weakly active; direction k - psi
    assert S.resolvent_dir_deriv(1.0, [1.5], None, [2.0], None)[0] == 0.5
    assert S.resolvent_dir_deriv(1.0, [1.5], None, [-2.0], None)[0] == -2.0
    assert S.contains([1.5], [1.0], None)
    assert not S.contains([1.5], [-1.0], None)
