import math

import numpy as np
import pytest

from hypwalk.green import (ConvergenceError, Interval,
                           SpectralRadiusWarningError, fitted_decay, green,
                           green_hitting, green_identity, green_series_values,
                           martin_kernel, martin_kernel_boundary,
                           restricted_hitting, spectral_radius_estimate)
from hypwalk.linsys import StateSpace
from hypwalk.measures import (SparseDistribution, convolve, step_measure,
                              uniform_measure)
from oracles import (radial_return_probabilities, tree_boundary_kernel,
                     tree_green_identity, tree_hit_probability,
                     tree_passage_probs)


def test_spectral_estimate_uniform(F2, p_uniform):
    est = spectral_radius_estimate(p_uniform)
    assert 0.5 <= est.zeta < math.sqrt(3) / 2  # monotone from below
    assert est.sequence == sorted(est.sequence)
    # oracle: exact return probabilities on the 4-regular tree converge to
    # sqrt(3)/2 = 0.8660...
    probs = radial_return_probabilities(4, 2000)
    zeta_oracle = probs[2000] ** (1.0 / 2000)
    assert abs(zeta_oracle - math.sqrt(3) / 2) < 0.01
    assert probs[2] == pytest.approx(0.25)
    assert est.zeta <= zeta_oracle


def test_spectral_amenable_error(Z):
    p = step_measure(Z, [(1, 0.5), (-1, 0.5)])
    with pytest.raises(SpectralRadiusWarningError, match="amenable"):
        spectral_radius_estimate(p)
    est = spectral_radius_estimate(p, allow_amenable=True)
    assert est.zeta > 0.85  # tending to 1


def test_green_identity_hitting(F2, p_uniform):
    ge = green_identity(p_uniform, trunc_R=8)
    oracle = tree_green_identity(F2, p_uniform.probs)
    assert abs(oracle - 1.5) < 1e-12
    assert ge.lo - 1e-3 <= 1.5 <= ge.hi + 1e-3
    assert ge.width < 5e-3


def test_green_series_certificate(F2, p_uniform):
    gv = green(p_uniform, (), eps=1.2, n_max=10)
    assert gv.value <= 1.5 <= gv.value + gv.tail_bound
    with pytest.raises(ConvergenceError, match="tail"):
        green(p_uniform, (), eps=1e-6, n_max=10)


def test_green_dominates_convolution_terms(F2, p_uniform):
    gv = green_hitting(p_uniform, (1, 2), trunc_R=8)
    d = SparseDistribution.dirac(F2)
    total = 0.0
    for _ in range(8):
        d = convolve(d, p_uniform)
        total += d.masses.get((1, 2), 0.0)
        assert gv.hi >= d.masses.get((1, 2), 0.0)
    assert gv.hi + 1e-6 >= total  # partial series below the full value


def test_restricted_hitting_conventions(F2, p_uniform):
    assert restricted_hitting(p_uniform, (1,), (1,)) == Interval(1.0, 1.0)
    # a domain separating x from y kills everything
    blocked = restricted_hitting(p_uniform, (), (1, 1),
                                 domain=lambda z: z != (1,), trunc_R=6)
    assert blocked.lo == 0.0 and blocked.hi < 2e-4


def test_restricted_hitting_precision(F2, p_uniform):
    u = restricted_hitting(p_uniform, (), (1,), trunc_R=11)
    assert 1.0 / 3.0 - 1e-6 <= u.lo <= 1.0 / 3.0
    assert u.hi <= 1.0 / 3.0 + 1e-4


def test_restricted_hitting_biased_oracle(F2, p_biased):
    q = tree_passage_probs(F2, p_biased.probs)
    for target in ((1,), (2, 2), (-1, 2)):
        u = restricted_hitting(p_biased, (), target, trunc_R=8)
        oracle = tree_hit_probability(F2, p_biased.probs, target)
        assert u.lo - 1e-9 <= oracle <= u.hi + 1e-9
        assert abs(u.lo - oracle) < 5e-4


def test_martin_kernel_interior(F2, p_uniform):
    y = (1, 1, 1, 1, 1)
    kv = martin_kernel(p_uniform, y, (1,), trunc_R=8, series_n_max=9)
    assert abs(kv.value - 3.0) < 1e-3
    kv_b = martin_kernel(p_uniform, y, (2,), trunc_R=8, series_n_max=9)
    assert abs(kv_b.value - 1.0 / 3.0) < 1e-3
    kv_e = martin_kernel(p_uniform, y, (), trunc_R=6, series_n_max=6)
    assert kv_e.value == pytest.approx(1.0, abs=1e-9)


def test_martin_routes_overlap_random_pairs(F2, p_uniform):
    # interval consistency of the Green-ratio and hitting-ratio formulas on
    # 200 random (x, y) pairs spanning ball(8); the hitting intervals come
    # from one killed resolvent from the identity plus G(z,z) = G(e)
    rng = np.random.default_rng(10)
    b3, b5 = F2.ball(3), F2.ball(5)
    pairs = [(b3[rng.integers(len(b3))], b5[rng.integers(len(b5))])
             for _ in range(200)]
    pairs = [(x, y) for x, y in pairs if x != y]
    needed = sorted({z for x, y in pairs for z in (y, F2.mul(F2.inv(x), y))},
                    key=F2.length)
    series = green_series_values(p_uniform, needed, n_max=9)
    ge = green_identity(p_uniform, trunc_R=8)
    space = StateSpace.tube(p_uniform, [()], 9)
    ids, pos, Q, _, trunc_b = space._system(np.ones(space.size, bool),
                                            np.zeros(space.size, bool))
    lu = space._lu(np.ones(space.size, bool), np.zeros(space.size, bool), ids, Q)
    e0 = np.zeros(ids.size)
    e0[pos[space.index[()]]] = 1.0
    gk = lu.solve(e0, trans="T")
    esc = float(np.dot(gk, trunc_b))
    decay = fitted_decay(p_uniform)

    def u_interval(z):
        gz = gk[pos[space.index[z]]]
        slack = esc * decay.bound(10 - F2.length(z)) * ge.hi
        return Interval(gz / ge.hi, min(1.0, (gz + slack) / ge.lo))

    checked = 0
    for x, y in pairs:
        sK = series[F2.mul(F2.inv(x), y)].interval() / series[y].interval()
        hK = u_interval(F2.mul(F2.inv(x), y)) / u_interval(y)
        assert sK.overlaps(hK, slack=1e-9), (x, y)
        checked += 1
    assert checked >= 190


def test_boundary_kernel_rays(F2, p_uniform, p_biased):
    assert martin_kernel_boundary(p_uniform, [1] * 20, (), tol=1e-4).value \
        == pytest.approx(1.0)
    for p in (p_uniform, p_biased):
        for ray, x in (([1] * 20, (1,)), ([1] * 20, (-1,)), ([2] * 20, (1,)),
                       ([1, 2] * 10, (2,))):
            bk = martin_kernel_boundary(p, ray, x, tol=1e-4, trunc_R=8)
            oracle = tree_boundary_kernel(F2, p.probs, ray, x)
            assert abs(bk.value - oracle) < 1e-3


def test_boundary_kernel_convergence_failure(F2, p_uniform):
    with pytest.raises(ConvergenceError) as exc:
        martin_kernel_boundary(p_uniform, [1] * 20, (1,), tol=1e-18,
                               n_min=4, n_max=8)
    assert len(exc.value.sequence) >= 2  # carries the observed sequence


def test_martin_cocycle(F2, p_uniform, p_biased):
    # K_xi(xy) = K_xi(x) K_{x^-1 xi}(y) within 10*tol
    tol = 1e-4
    rng = np.random.default_rng(11)
    rays = ([1] * 30, [2] * 30, [1, 2] * 15)
    b3 = [w for w in F2.ball(3) if w != ()]
    for p in (p_uniform, p_biased):
        for _ in range(4):
            ray = rays[rng.integers(len(rays))]
            x = b3[rng.integers(len(b3))]
            y = b3[rng.integers(len(b3))]
            xy = F2.mul(x, y)
            if xy == ():
                continue
            kxy = martin_kernel_boundary(p, ray, xy, tol=tol, trunc_R=7).value
            kx = martin_kernel_boundary(p, ray, x, tol=tol, trunc_R=7).value
            # the translated ray x^-1 xi as a letter sequence
            deep = F2.identity
            for a in ray:
                deep = F2.mul(deep, F2.letter_element(a))
            shifted = F2.letters(F2.mul(F2.inv(x), deep))
            ky = martin_kernel_boundary(p, shifted, y, tol=tol, trunc_R=7).value
            assert abs(kxy - kx * ky) <= 10 * tol + 5e-3 * kx * ky


def test_harnack_at_infinity(F2, p_uniform):
    # c^-1 u(x,z) u(z,y) <= u(x,y) <= c u(x,z) u(z,y) on 100 sampled
    # geodesic triples (z on [x,y], whole-group domain); c recorded
    rng = np.random.default_rng(12)
    ratios = []
    for _ in range(100):
        # reduce by left-invariance to x = e and sample the far endpoint
        while True:
            y = F2.ball(8)[rng.integers(len(F2.ball(8)))]
            if F2.length(y) >= 4:
                break
        word = F2.geodesic_word(y)
        cut = rng.integers(2, len(word) - 1)
        z = F2.identity
        for s in word[:cut]:
            z = F2.mul(z, s)
        verts = [F2.identity, z, y]
        space = StateSpace.tube(p_uniform, verts, 6)
        ty = np.zeros(space.size, bool)
        ty[space.index[y]] = True
        hy, _ = space.hitting(ty)
        tz = np.zeros(space.size, bool)
        tz[space.index[z]] = True
        hz, _ = space.hitting(tz)
        u_xy = hy[space.index[()]]
        u_xz = hz[space.index[()]]
        u_zy = hy[space.index[z]]
        ratios.append(u_xy / (u_xz * u_zy))
    c = max(max(ratios), 1.0 / min(ratios))
    assert math.isfinite(c)
    assert c < 3.0  # recorded empirical constant for the uniform walk


def test_green_decay_shape(F2, p_uniform):
    # ln G(x) + delta_hat |x| stays bounded over |x| <= 10 along rays
    decay = fitted_decay(p_uniform)
    assert decay.rate > 0
    ge = green_identity(p_uniform, 8)
    rng = np.random.default_rng(13)
    vals = []
    for _ in range(5):
        word = []
        prev = None
        for _ in range(10):
            choices = [a for a in F2.letter_alphabet()
                       if prev is None or a != -prev]
            prev = int(rng.choice(choices))
            word.append(prev)
        ray = [F2.letter_element(a) for a in word]
        verts = [F2.identity]
        for s in ray:
            verts.append(F2.mul(verts[-1], s))
        space = StateSpace.tube(p_uniform, verts, 6)
        for k in (2, 5, 8, 10):
            t = np.zeros(space.size, bool)
            t[space.index[verts[k]]] = True
            h, _ = space.hitting(t)
            g_val = h[space.index[()]] * ge.mid
            vals.append(math.log(g_val) + decay.rate * k)
    assert max(vals) - min(vals) < 3.0
    assert all(math.isfinite(v) for v in vals)
