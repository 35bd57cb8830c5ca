import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypwalk.cones import (ConeVector, PositiveOperator, birkhoff_beta,
                           liverani_gap, operator_diameter, tau, theta)
from oracles import brute_force_theta


def cv(*xs, t=2.0):
    return ConeVector(np.array(xs, float), t)


def test_tau_examples():
    assert tau(cv(1, 1), cv(2, 1)) == 2.0
    f = cv(0.3, 1.7)
    assert tau(f, f) == 1.0
    assert tau(cv(1, 0), cv(0, 1)) == math.inf


def test_tau_index_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        tau(cv(1, 1), cv(1, 1, 1))


def test_theta_examples():
    assert abs(theta(cv(1, 1), cv(2, 1)) - math.log(2)) < 1e-15
    assert theta(cv(2, 4, 6), cv(1, 2, 3)) == 0.0
    assert abs(theta(cv(1, 2, 3), cv(3, 2, 1)) - math.log(9)) < 1e-15
    assert theta(cv(1, 0), cv(0, 1)) == math.inf


def test_theta_matches_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(200):
        f = rng.random(5) + 0.01
        g = rng.random(5) + 0.01
        assert abs(theta(ConeVector(f), ConeVector(g))
                   - brute_force_theta(f, g)) < 1e-12


def test_theta_metric_properties_randomized():
    # 10^4 randomized instances: symmetry, triangle inequality, projective
    # invariance, diagonal-scaling isometry, t-independence
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        n = int(rng.integers(2, 6))
        f = rng.random(n) + 1e-3
        g = rng.random(n) + 1e-3
        h = rng.random(n) + 1e-3
        tfg = theta(ConeVector(f), ConeVector(g))
        assert abs(tfg - theta(ConeVector(g), ConeVector(f))) < 1e-12
        assert tfg >= -1e-15
        tfh = theta(ConeVector(f), ConeVector(h))
        tgh = theta(ConeVector(g), ConeVector(h))
        assert tfg <= tfh + tgh + 1e-10
        a, b = float(rng.random() * 5 + 0.1), float(rng.random() * 5 + 0.1)
        assert abs(theta(ConeVector(a * f), ConeVector(b * g)) - tfg) < 1e-10
        d = rng.random(n) + 0.1
        assert abs(theta(ConeVector(d * f), ConeVector(d * g)) - tfg) < 1e-10
        for t in (1.5, 4.0):
            assert theta(ConeVector(f, t), ConeVector(g, t)) == pytest.approx(tfg)


@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=6),
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=200, deadline=None)
def test_theta_projective_identity_hypothesis(xs, a, b):
    f = ConeVector(np.array(xs))
    assert theta(ConeVector(a * f.entries), ConeVector(b * f.entries)) \
        == pytest.approx(0.0, abs=1e-9)


def test_operator_diameter_examples():
    A = PositiveOperator(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert abs(operator_diameter(A) - math.log(4)) < 1e-15
    assert A.diameter_certificate == pytest.approx(math.log(4))
    B = PositiveOperator(np.array([[1.0, 2.0], [0.5, 1.0]]))
    assert operator_diameter(B) == 0.0  # identical columns projectively
    I2 = PositiveOperator(np.eye(2))
    assert operator_diameter(I2) == math.inf


def test_operator_diameter_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        operator_diameter(PositiveOperator(np.zeros((2, 2))))
    with pytest.raises(ValueError, match="degenerate"):
        operator_diameter(PositiveOperator(np.array([[1.0, 1.0], [0.0, 0.0]])))


def test_birkhoff_beta():
    assert birkhoff_beta(0.0) == 0.0
    assert abs(birkhoff_beta(math.log(4)) - 1.0 / 3.0) < 1e-15
    assert birkhoff_beta(math.inf) == 1.0
    with pytest.raises(ValueError):
        birkhoff_beta(-0.1)


def test_contraction_randomized():
    # theta(Af, Ag) <= tanh(diam/4) theta(f, g) on sampled pairs
    rng = np.random.default_rng(8)
    for _ in range(300):
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        A = PositiveOperator(rng.random((n, m)) + 1e-3)
        beta = birkhoff_beta(operator_diameter(A))
        for _ in range(5):
            f = ConeVector(rng.random(m) + 1e-3)
            g = ConeVector(rng.random(m) + 1e-3)
            assert theta(A.apply(f), A.apply(g)) <= beta * theta(f, g) + 1e-10


def test_liverani_examples():
    f = cv(1, 1).normalized()
    assert liverani_gap(f, f) == (0.0, 0.0)
    g = cv(2, 1).normalized()
    lhs, rhs = liverani_gap(f, g)
    assert lhs < rhs
    assert rhs == pytest.approx((math.exp(theta(f, g)) - 1.0))


def test_liverani_norm_mismatch():
    with pytest.raises(ValueError, match="norms differ"):
        liverani_gap(cv(1, 1), cv(2, 2))


def test_liverani_randomized():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        t = float(rng.choice([1.0, 1.5, 2.0, 4.0]))
        f = ConeVector(rng.random(n) + 1e-4, t).normalized()
        g = ConeVector(rng.random(n) + 1e-4, t).normalized()
        lhs, rhs = liverani_gap(f, g)
        assert lhs <= rhs * (1 + 1e-12) + 1e-15


def test_cone_vector_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        ConeVector(np.array([1.0, -0.1]))
    with pytest.raises(ZeroDivisionError):
        ConeVector(np.zeros(3)).normalized()
    with pytest.raises(ValueError, match="t must be"):
        ConeVector(np.ones(2), t=0.5)
