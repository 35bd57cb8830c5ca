"""Independent oracles used to freeze expected values.

Everything here is deliberately separate from the package's computation
paths: closed-form tree formulas, renewal identities, brute-force
enumeration, and direct Monte Carlo.  Tests compare package output against
these, never the other way round.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- nearest-neighbor walks on free groups ----------------------------------


def tree_passage_probs(group, probs: dict, iters: int = 5000, tol: float = 1e-15):
    """q_s = P(ever hit s from e), from the one-step renewal fixed point

        q_s = p(s) + q_s * sum_{t != s} p(t) q_{t^-1}.
    """
    gens = list(probs)
    q = {s: 0.5 for s in gens}
    for _ in range(iters):
        new = {}
        for s in gens:
            new[s] = probs[s] + q[s] * sum(probs[t] * q[group.inv(t)]
                                           for t in gens if t != s)
        gap = max(abs(new[s] - q[s]) for s in gens)
        q = new
        if gap < tol:
            break
    return q


def tree_green_identity(group, probs: dict) -> float:
    """G(e) = 1/(1-U) with U = sum_s p(s) q_{s^-1}."""
    q = tree_passage_probs(group, probs)
    U = sum(probs[s] * q[group.inv(s)] for s in probs)
    return 1.0 / (1.0 - U)


def tree_hit_probability(group, probs: dict, word) -> float:
    """u(e, w) = product of q along the cut vertices of the normal form."""
    q = tree_passage_probs(group, probs)
    out = 1.0
    for s in group.geodesic_word(word):
        out *= q[s]
    return out


def tree_boundary_kernel(group, probs: dict, ray_letters, x) -> float:
    """K_xi(x) for a nearest-neighbor walk: u(x, v)/u(e, v) at a deep ray
    vertex v, exact once v passes the confluence with x."""
    q = tree_passage_probs(group, probs)
    depth = group.length(x) + 2
    v = group.identity
    for a in ray_letters[:depth]:
        v = group.mul(v, group.letter_element(a))
    ux = 1.0
    for s in group.geodesic_word(group.mul(group.inv(x), v)):
        ux *= q[s]
    ue = 1.0
    for s in group.geodesic_word(v):
        ue *= q[s]
    return ux / ue


def tree_harmonic_markov(group, probs: dict):
    """Exact Markov data (initial, transition) of the exit measure.

    At each visit to the root the walk makes an escape attempt; attempts
    are independent, so the exit branch is the first step of the winning
    attempt and the same renewal applies one level down:

        pi(s)    prop. to  p(s) (1 - q_{s^-1})
        P(s, t)  prop. to  p(t) (1 - q_{t^-1})   over t != s^-1.
    """
    q = tree_passage_probs(group, probs)
    gens = list(probs)
    esc = {s: probs[s] * (1.0 - q[group.inv(s)]) for s in gens}
    z = sum(esc.values())
    pi = {s: esc[s] / z for s in gens}
    P = {}
    for s in gens:
        zs = sum(esc[t] for t in gens if t != group.inv(s))
        for t in gens:
            P[s, t] = 0.0 if t == group.inv(s) else esc[t] / zs
    return pi, P


def tree_cylinder_mass(group, probs: dict, word_letters) -> float:
    pi, P = tree_harmonic_markov(group, probs)
    els = [group.letter_element(a) for a in word_letters]
    m = pi[els[0]]
    for a, b in zip(els, els[1:]):
        m *= P[a, b]
    return m


# -- radially symmetric return probabilities --------------------------------


def radial_return_probabilities(degree: int, n_max: int) -> np.ndarray:
    """p^(n)(e) for the uniform nearest-neighbor walk on a degree-d tree,
    via the distance birth-death chain (away with prob (d-1)/d)."""
    up = (degree - 1) / degree
    down = 1.0 / degree
    probs = np.zeros(n_max + 1)
    probs[0] = 1.0
    dist = np.zeros(n_max + 2)
    dist[0] = 1.0
    for n in range(1, n_max + 1):
        new = np.zeros_like(dist)
        new[1] += dist[0]
        new[2:] += dist[1:-1] * up
        new[:-2] += dist[1:-1] * down
        dist = new
        probs[n] = dist[0]
    return probs


# -- the integer line --------------------------------------------------------


def line_exact_sequences(probs: dict, N: int):
    """Exact H_n, L_n for a finitely supported walk on Z by dense DP."""
    steps = sorted(probs)
    radius = max(abs(s) for s in steps)
    size = 2 * radius * N + 1
    off = radius * N
    dist = np.zeros(size)
    dist[off] = 1.0
    H = [0.0]
    L = [0.0]
    for n in range(1, N + 1):
        new = np.zeros(size)
        for s, q in probs.items():
            if s >= 0:
                new[s:] += q * dist[:size - s]
            else:
                new[:s] += q * dist[-s:]
        dist = new
        mask = dist > 0
        H.append(float(-(dist[mask] * np.log(dist[mask])).sum()))
        xs = np.abs(np.arange(size) - off)
        L.append(float((dist * xs).sum()))
    return H, L


def gamblers_ruin_up_probability(p_up: float, p_down: float) -> float:
    """P(drifting walk escapes to +infinity), one-dimensional ruin."""
    if p_up <= p_down:
        return 0.0 if p_up < p_down else 0.5
    return 1.0


# -- brute force -------------------------------------------------------------


def brute_force_reduced_words(rank: int, radius: int) -> int:
    """Count distinct reduced words of length <= radius over 2k letters."""
    letters = [s for i in range(1, rank + 1) for s in (i, -i)]
    seen = {()}
    for n in range(1, radius + 1):
        for word in itertools.product(letters, repeat=n):
            ok = all(word[i] != -word[i + 1] for i in range(n - 1))
            if ok:
                seen.add(word)
    return len(seen)


def brute_force_convolution(group, probs: dict, n: int) -> dict:
    """p^(n) by full path enumeration (tiny n only)."""
    out = {}
    for path in itertools.product(list(probs), repeat=n):
        x = group.identity
        q = 1.0
        for s in path:
            x = group.mul(x, s)
            q *= probs[s]
        out[x] = out.get(x, 0.0) + q
    return out


def brute_force_theta(f, g) -> float:
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    sup = np.inf
    inf_ = 0.0
    for fi, gi in zip(f, g):
        if gi > 0 and fi == 0:
            return math.inf
        if fi > 0 and gi == 0:
            return math.inf
        if fi > 0 and gi > 0:
            sup = min(sup, fi / gi)
            inf_ = max(inf_, fi / gi)
    if inf_ == 0.0:
        return 0.0
    return math.log(inf_ / sup)


# -- Monte Carlo -------------------------------------------------------------


def mc_radial_escape(degree: int, n_steps: int, n_paths: int, seed: int):
    """|X_n|/n for the uniform walk on a degree-d tree via the distance
    chain (vectorized); returns (mean, stderr)."""
    rng = np.random.default_rng(seed)
    up = (degree - 1) / degree
    dist = np.zeros(n_paths, dtype=np.int64)
    for _ in range(n_steps):
        u = rng.random(n_paths)
        at0 = dist == 0
        step_up = at0 | (u < up)
        dist = np.where(step_up, dist + 1, dist - 1)
    v = dist / n_steps
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_paths))
