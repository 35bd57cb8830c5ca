import math
from fractions import Fraction

import numpy as np
import pytest

from hypwalk.groups import (BallSizeError, FamilyMismatchError, FreeGroup,
                            FreeProduct, IntegerLine, make_group)
from oracles import brute_force_reduced_words


def test_mul_examples(F2, Z):
    assert F2.mul((1, 2), (-2, 1)) == (1, 1)         # ab . b^-1 a = aa
    assert Z.mul(3, -5) == -2
    assert F2.mul((1,), F2.inv((1,))) == ()


def test_mul_random_inverses(F2, P23, Z):
    rng = np.random.default_rng(0)
    for g in (F2, P23, Z):
        ball = g.ball(5 if g is not Z else 40)
        for _ in range(1000):
            x = ball[rng.integers(len(ball))]
            assert g.mul(x, g.inv(x)) == g.identity
            assert g.length(g.inv(x)) == g.length(x)


def test_mul_associative_random(F2, P23):
    rng = np.random.default_rng(1)
    for g in (F2, P23):
        ball = g.ball(4)
        for _ in range(300):
            a, b, c = (ball[rng.integers(len(ball))] for _ in range(3))
            assert g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c))


def test_family_mismatch(F2, Z, P23):
    with pytest.raises(FamilyMismatchError):
        F2.mul((1,), 3)
    with pytest.raises(FamilyMismatchError):
        Z.mul(1, (1,))
    with pytest.raises(FamilyMismatchError):
        F2.mul((5,), (1,))          # letter outside the alphabet
    with pytest.raises(FamilyMismatchError):
        F2.mul((1, -1), (1,))       # unreduced word rejected
    with pytest.raises(FamilyMismatchError):
        P23.mul(((0, 1), (0, 1)), ((1, 1),))  # non-alternating


def test_gromov_product_examples(F2):
    assert F2.gromov_product((1, 2), (1, -2)) == 1
    x = (1, 2, 1)
    assert F2.gromov_product(x, x) == F2.length(x)
    assert F2.gromov_product((1, 1, 1), (1, 1, 2)) == 2
    # symmetry and nonnegativity at a random base
    assert F2.gromov_product((1, 2), (2,), base=(1,)) == \
        F2.gromov_product((2,), (1, 2), base=(1,))


def test_geodesic_words(F2, Z, P23):
    assert F2.geodesic_word((1, -2)) == [(1,), (-2,)]
    assert Z.geodesic_word(-3) == [-1, -1, -1]
    assert F2.geodesic_word(()) == []
    assert P23.geodesic_word(((1, 2), (0, 1))) == [((1, 2),), ((0, 1),)]


def test_geodesic_word_lengths_ball6(F2):
    for x in F2.ball(6):
        word = F2.geodesic_word(x)
        assert len(word) == F2.length(x)
        y = F2.identity
        for s in word:
            y = F2.mul(y, s)
        assert y == x


def test_ball_sizes(F2, Z, P23):
    assert len(F2.ball(1)) == 5
    assert len(F2.ball(2)) == 17
    assert len(Z.ball(3)) == 7
    for g, R in ((F2, 5), (Z, 9), (P23, 6)):
        assert len(g.ball(R)) == 1 + sum(g.sphere_size(k) for k in range(1, R + 1))


def test_ball_matches_brute_force():
    # independent enumeration of reduced words
    for rank, R in ((2, 2), (2, 3), (3, 2)):
        g = FreeGroup(rank)
        assert len(g.ball(R)) == brute_force_reduced_words(rank, R)


def test_ball_cap_error(F2):
    with pytest.raises(BallSizeError, match="cap"):
        F2.ball(10, cap=1000)


def test_delta_zero_families(F2, Z):
    assert F2.estimate_delta(3) == 0
    assert Z.estimate_delta(6) == 0


def test_delta_free_product_frozen(P23):
    # exhaustive quadruple scan at R=4, frozen as a regression constant:
    # the syllable metric is clique-tree like and scans to zero
    assert P23.estimate_delta(4) == Fraction(0)
    assert P23.delta == 0.0


def test_four_point_inequality_rescan(F2, P23):
    for g, R in ((F2, 3), (P23, 4)):
        delta = float(g.estimate_delta(R))
        pts = g.ball(R)
        rng = np.random.default_rng(2)
        for _ in range(2000):
            x, y, z, w = (pts[rng.integers(len(pts))] for _ in range(4))
            gxy = float(g.gromov_product(x, y, w))
            gxz = float(g.gromov_product(x, z, w))
            gyz = float(g.gromov_product(y, z, w))
            assert gxy >= min(gxz, gyz) - delta - 1e-12


def test_metric_axioms_random(F2, P23, Z):
    rng = np.random.default_rng(3)
    for g in (F2, P23, Z):
        ball = g.ball(5 if g is not Z else 30)
        for _ in range(1000):
            x, y, z = (ball[rng.integers(len(ball))] for _ in range(3))
            dxy = g.dist(x, y)
            assert dxy == g.dist(y, x)
            assert (dxy == 0) == (x == y)
            assert g.dist(x, z) <= dxy + g.dist(y, z)
            assert g.dist(g.mul(z, x), g.mul(z, y)) == dxy  # left-invariance


def test_triangle_inequality_lengths(F2):
    rng = np.random.default_rng(4)
    ball = F2.ball(5)
    for _ in range(500):
        x, y = ball[rng.integers(len(ball))], ball[rng.integers(len(ball))]
        assert F2.length(F2.mul(x, y)) <= F2.length(x) + F2.length(y)


def test_support_set_radius(F2, Z):
    s = F2.support_set([(1,), (-1,), (2,), (-2,), (1, 1)])
    assert s.radius == 2
    sz = Z.support_set([-2, -1, 1, 2])
    assert sz.radius == 2


def test_support_set_generation_check(Z):
    # {+-2} only reaches even integers, so ball(2) is not covered
    with pytest.raises(ValueError, match="generate"):
        Z.support_set([2, -2])


def test_make_group_factory():
    assert make_group("integer-line").name == "Z"
    assert make_group("free", rank=3).name == "F3"
    assert make_group("free-product", m=2, n=3).name == "Z2*Z3"
    with pytest.raises(ValueError):
        make_group("surface")


def test_generator_order_shortlex():
    g = FreeGroup(2, generator_order=[2, -2, 1, -1])
    assert g.generators[0] == (2,)
    assert g.letter_alphabet() == (2, -2, 1, -1)
