"""Nested obstacles along geodesics, first-visit matrices, and cone chains.

An obstacle at scale M on a geodesic gamma is the nested quadruple

    U0- = {x : d(x, g(-2M)) < d(x, g(0))}     U0 = {... < d(x, g(4r))}
    U1- = {x : d(x, g(0))   < d(x, g(2M))}    U1 = {... < d(x, g(2M+4r))}

whose shells V0 = U0 \\ U0-, V1 = U1 \\ U1- every crossing trajectory must
visit in order.  The first-visit matrix A(v0, v1) factors, up to a
constant c1, as u_{U1-}(v0, g(0)) * alpha_{g(0)}(v1) (the product
inequality), which bounds the projective diameter of the matrix's image
cone by 4 ln c1 and makes chains of consecutive obstacles contract with
ratio tau = (c1^2-1)/(c1^2+1).  Boundary Martin kernels then fall out of
the chain limit vector, independent of the seed.

Set membership is decided by exact distance comparisons; shells are
enumerated inside a tube of radius trunc_R around the segment, and all
assertions are made on enumerated points (the sets themselves are
infinite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import ConeVector, PositiveOperator, operator_diameter, theta
from .green import fitted_decay
from .groups import Group
from .linsys import StateSpace
from .measures import StepMeasure

DEFAULT_OBSTACLE_RADIUS = 8


class ObstacleError(RuntimeError):
    pass


class ChainError(RuntimeError):
    pass


def _ray_vertex(group: Group, word, idx: int):
    x = group.identity
    for s in word[:idx]:
        x = group.mul(x, s)
    return x


def graph_distances(space: StateSpace, source_idx: int) -> np.ndarray:
    """BFS distances from one state across the walk edges of the space.

    Valid as word-metric distances when the support equals the generator
    set; states never reached inside the tube get -1.
    """
    n = space.size
    dist = np.full(n, -1, dtype=np.int64)
    dist[source_idx] = 0
    frontier = [source_idx]
    d = 0
    nbr = space.nbr
    while frontier:
        d += 1
        nxt = []
        for i in frontier:
            for k in nbr[i]:
                if k >= 0 and dist[k] < 0:
                    dist[k] = d
                    nxt.append(int(k))
        frontier = nxt
    if (dist < 0).any():
        raise ObstacleError("tube is not connected across walk edges")
    return dist


@dataclass
class Obstacle:
    """One obstacle, with enumerated truncated shells."""

    p: StepMeasure
    M: int
    r: int
    space: StateSpace
    anchors: dict            # s -> gamma(s) for the five defining positions
    anchor_dist: dict        # s -> distance array over the enumerated states
    v0_idx: np.ndarray       # V0 shell, indices into space.states
    v1_idx: np.ndarray       # V1 shell
    v1_active_idx: np.ndarray
    alpha_center: dict       # first-visit law of gamma(0) onto V1
    trunc_R: int

    @property
    def group(self) -> Group:
        return self.p.group

    def gamma(self, s: int):
        return self.anchors[s]

    # -- membership by exact distance comparison -----------------------------

    def in_u0_minus(self, x) -> bool:
        g = self.group
        return g.dist(x, self.gamma(-2 * self.M)) < g.dist(x, self.gamma(0))

    def in_u0(self, x) -> bool:
        g = self.group
        return g.dist(x, self.gamma(-2 * self.M)) < g.dist(x, self.gamma(4 * self.r))

    def in_u1_minus(self, x) -> bool:
        g = self.group
        return g.dist(x, self.gamma(0)) < g.dist(x, self.gamma(2 * self.M))

    def in_u1(self, x) -> bool:
        g = self.group
        return g.dist(x, self.gamma(0)) < g.dist(x, self.gamma(2 * self.M + 4 * self.r))

    def masks(self):
        """(U0-, U0, U1-, U1) membership over the enumerated states."""
        ad = self.anchor_dist
        M, r = self.M, self.r
        return (ad[-2 * M] < ad[0],
                ad[-2 * M] < ad[4 * r],
                ad[0] < ad[2 * M],
                ad[0] < ad[2 * M + 4 * r])

    def check_nesting(self) -> None:
        u0m, u0, u1m, u1 = self.masks()
        for a, b, name in ((u0m, u0, "U0- in U0"), (u0, u1m, "U0 in U1-"),
                           (u1m, u1, "U1- in U1")):
            bad = a & ~b
            if bad.any():
                x = self.space.states[int(np.flatnonzero(bad)[0])]
                raise ObstacleError(f"nesting {name} violated at {x!r}")

    def check_ball_inclusions(self, sample_cap: int = 200, seed: int = 0) -> None:
        """x in U0- => B(x,r) in U0, and x in U0 => B(x, M-3r) in U1-.

        The first is checked on every enumerated U0- point, the second on
        a sample (its ball is large).
        """
        g = self.group
        small = g.ball(self.r)
        u0m_mask, u0_mask, _, _ = self.masks()
        for i in np.flatnonzero(u0m_mask):
            x = self.space.states[int(i)]
            for b in small:
                if not self.in_u0(g.mul(x, b)):
                    raise ObstacleError(f"B({x!r}, r) leaves U0")
        rng = np.random.default_rng(seed)
        u0_pts = [self.space.states[int(i)] for i in np.flatnonzero(u0_mask)]
        if not u0_pts:
            return
        picks = rng.choice(len(u0_pts), size=min(sample_cap, len(u0_pts)),
                           replace=False)
        big = g.ball(max(self.M - 3 * self.r, 0),
                     cap=200_000) if self.M - 3 * self.r <= 7 else None
        for i in picks:
            x = u0_pts[i]
            if big is not None:
                probes = big
            else:
                # deep balls are exponential: probe along random words
                probes = []
                for _ in range(40):
                    y = g.identity
                    for s in rng.choice(len(g.generators), size=self.M - 3 * self.r):
                        y = g.mul(y, g.generators[s])
                    probes.append(y)
            for b in probes:
                if not self.in_u1_minus(g.mul(x, b)):
                    raise ObstacleError(f"B({x!r}, M-3r) leaves U1-")


def build_obstacle(p: StepMeasure, gamma_word, M: int,
                   trunc_R: int = DEFAULT_OBSTACLE_RADIUS,
                   offset: int = 0, cap: int = 3_000_000,
                   margin_factor: int = 12) -> Obstacle:
    """Obstacle on the geodesic spelled by gamma_word, anchored at `offset`.

    gamma(s) is the prefix product at position offset + (s + 2M), so the
    word must提供 at least offset + 4M + 4r letters.  Requires M >= 12 r.
    """
    g = p.group
    r = p.support.radius
    if M < margin_factor * r:
        raise ObstacleError(f"need M >= {margin_factor}r = {margin_factor * r}, got {M}")
    length = 4 * M + 4 * r
    word = list(gamma_word)
    if len(word) < offset + length:
        raise ObstacleError(
            f"geodesic word too short: need {offset + length} letters"
        )
    # verify the word is geodesic (normal forms are geodesic, so the word
    # must multiply without shortening)
    verts = []
    x = g.identity
    for s in word[: offset + length]:
        x = g.mul(x, s)
        verts.append(x)
    if g.length(verts[-1]) != offset + length:
        raise ObstacleError("gamma_word is not geodesic")
    segment = verts[offset - 1: offset + length] if offset else \
        [g.identity] + verts[:length]
    # anchor so that gamma(-2M) is the first segment vertex (keeps words short)
    base = segment[0]
    binv = g.inv(base)
    anchors = {}
    anchor_positions = (-2 * M, 0, 4 * r, 2 * M, 2 * M + 4 * r)
    for s in anchor_positions:
        anchors[s] = g.mul(binv, segment[s + 2 * M])
    centers = [g.mul(binv, v) for v in segment]
    space = StateSpace.tube(p, centers, trunc_R, cap)
    nn = set(p.support.elements) == set(g.generators)
    anchor_dist = {}
    for s in anchor_positions:
        if nn:
            anchor_dist[s] = graph_distances(space, space.index[anchors[s]])
        else:
            ai = g.inv(anchors[s])
            anchor_dist[s] = np.fromiter(
                (g.length(g.mul(ai, z)) for z in space.states),
                dtype=np.int64, count=space.size)
    u0m, u0, u1m, u1 = (anchor_dist[-2 * M] < anchor_dist[0],
                        anchor_dist[-2 * M] < anchor_dist[4 * r],
                        anchor_dist[0] < anchor_dist[2 * M],
                        anchor_dist[0] < anchor_dist[2 * M + 4 * r])
    v0_idx = np.flatnonzero(u0 & ~u0m)
    v1_idx = np.flatnonzero(u1 & ~u1m)
    if v0_idx.size == 0 or v1_idx.size == 0:
        raise ObstacleError("empty shell: enlarge trunc_R")
    target = np.zeros(space.size, dtype=bool)
    target[v1_idx] = True
    alpha_center, _ = space.first_visit(target, anchors[0])
    active = np.array(sorted(alpha_center), dtype=np.int64)
    obs = Obstacle(p, M, r, space, anchors, anchor_dist, v0_idx, v1_idx, active,
                   alpha_center, trunc_R)
    obs.check_nesting()
    return obs


@dataclass
class FirstVisitMatrix:
    """Interval-valued first-visit matrix between consecutive shells."""

    obstacle: Obstacle
    rows: list              # elements of V0 (enumerated)
    cols: list              # active elements of V1
    lower: np.ndarray       # (n_rows, n_cols)
    esc: np.ndarray         # per-row truncation-kill mass
    col_return: np.ndarray  # per-column escape-return factors

    @property
    def upper(self) -> np.ndarray:
        return np.minimum(self.lower + self.esc[:, None] * self.col_return[None, :],
                          1.0)

    def row_sum_upper(self) -> np.ndarray:
        # a trajectory first visits the shell once, so the escape mass can
        # only add max_w ret_w across the whole row
        return self.lower.sum(axis=1) + self.esc * self.col_return.max()

    def check_row_sums(self, tol: float = 1e-8) -> None:
        if (self.lower.sum(axis=1) > 1.0 + tol).any():
            raise ObstacleError("lower row sums exceed 1")
        if (self.row_sum_upper() > 1.0 + tol).any():
            raise ObstacleError("upper row sums exceed 1")

    def check_truncation(self, tol: float = 1e-9) -> None:
        if (self.upper + tol < self.lower).any():
            raise ObstacleError("upper bound fell below lower bound")

    def operator(self) -> PositiveOperator:
        return PositiveOperator(self.lower.copy())


def first_visit_matrix(p: StepMeasure, obs: Obstacle,
                       rows_idx: np.ndarray | None = None) -> FirstVisitMatrix:
    """Solve the absorbing system for A(v0, v1) on the enumerated shells.

    V1 is absorbing, the exterior of the tube is killed for the lower
    bound; the upper bound adds per-row escape mass scaled by the fitted
    return decay over each column's tube margin.
    """
    space = obs.space
    if rows_idx is None:
        rows_idx = obs.v0_idx
    target = np.zeros(space.size, dtype=bool)
    target[obs.v1_idx] = True
    cols = obs.v1_active_idx
    lower = np.zeros((rows_idx.size, cols.size))
    esc_row = None
    if not hasattr(obs, "_absorb_cache"):
        obs._absorb_cache = {}
    for cj, w in enumerate(cols):
        if int(w) not in obs._absorb_cache:
            obs._absorb_cache[int(w)] = _absorb_at(space, target, int(w))
        h, esc = obs._absorb_cache[int(w)]
        lower[:, cj] = h[rows_idx]
        if esc_row is None:
            esc_row = esc[rows_idx]
    decay = fitted_decay(p)
    margins = obs.trunc_R + 1 - space.depth[cols]
    col_ret = np.array([decay.bound(int(m)) for m in margins])
    fv = FirstVisitMatrix(obs, [space.states[i] for i in rows_idx],
                          [space.states[i] for i in cols], lower,
                          esc_row, col_ret)
    fv.check_truncation()
    fv.check_row_sums()
    return fv


def _absorb_at(space: StateSpace, target_mask: np.ndarray, w: int):
    """P(first visit of the target set happens at state w), all starts.

    Same substochastic system as `hitting`, but the reward only counts
    one-step entries into w.
    """
    allowed = np.ones(space.size, dtype=bool)
    ids, pos, Q, hit_b, trunc_b = space._system(allowed, target_mask)
    lu = space._lu(allowed, target_mask, ids, Q)
    bw = np.zeros(ids.size)
    nbr = space.nbr[ids]
    for j, q in enumerate(space.step_probs):
        bw[nbr[:, j] == w] += q
    h_in = lu.solve(bw)
    esc_in = lu.solve(trunc_b)
    h = np.zeros(space.size)
    esc = np.zeros(space.size)
    h[ids] = np.clip(h_in, 0.0, 1.0)
    esc[ids] = np.clip(esc_in, 0.0, 1.0)
    h[w] = 1.0
    return h, esc


@dataclass
class AnconaCertificate:
    c1: float
    worst_entry: tuple
    n_rows: int
    n_cols: int
    u_rest: np.ndarray
    alpha: np.ndarray


def ancona_verify(p: StepMeasure, obs: Obstacle, A: FirstVisitMatrix,
                  floor: float = 1e-300) -> AnconaCertificate:
    """Smallest c1 with c1^-1 u alpha <= A <= c1 u alpha on enumerated entries.

    u is the hitting probability of gamma(0) restricted to U1-, alpha the
    first-visit law of gamma(0) on V1.  Infinite c1 (a vanishing factor
    against a positive entry) flags the truncation as too small.
    """
    space = obs.space
    target = np.zeros(space.size, dtype=bool)
    target[space.index[obs.gamma(0)]] = True
    inside = obs.masks()[2]
    h, _ = space.hitting(target, inside)
    rows_idx = np.array([space.index[x] for x in A.rows])
    u_rest = h[rows_idx]
    alpha = np.array([obs.alpha_center.get(space.index[c], 0.0) for c in A.cols])
    c1 = 1.0
    worst = None
    for i in range(len(A.rows)):
        for j in range(len(A.cols)):
            prod = u_rest[i] * alpha[j]
            a = A.lower[i, j]
            if a <= floor and prod <= floor:
                continue
            if a <= floor or prod <= floor:
                raise ObstacleError(
                    f"infinite product-inequality constant at entry ({i},{j}): "
                    f"A={a:.3g}, u*alpha={prod:.3g}; truncation too small"
                )
            ratio = max(a / prod, prod / a)
            if ratio > c1:
                c1 = ratio
                worst = (A.rows[i], A.cols[j])
    return AnconaCertificate(c1, worst, len(A.rows), len(A.cols), u_rest, alpha)


def stability_sweep(p: StepMeasure, ray_word, trunc_R: int = DEFAULT_OBSTACLE_RADIUS,
                    candidates=(12, 24, 48), rel_change: float = 0.10) -> dict:
    """Pick the smallest scale M whose c1 moves less than rel_change at the
    next size.  Scales are multiples of the step radius."""
    r = p.support.radius
    results = {}
    chosen = None
    prev = None
    for mult in candidates:
        M = mult * r
        obs = build_obstacle(p, ray_word, M, trunc_R)
        A = first_visit_matrix(p, obs)
        cert = ancona_verify(p, obs, A)
        results[M] = cert.c1
        if prev is not None:
            m_prev, c_prev = prev
            if abs(cert.c1 - c_prev) <= rel_change * c_prev:
                chosen = m_prev
                break
        prev = (M, cert.c1)
    if chosen is None:
        chosen = prev[0]
    return {"chosen_M": chosen, "c1_by_M": results}


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------

_obstacle_cache: dict = {}


@dataclass
class ChainResult:
    kernel: float                  # <alpha_x, f0> / <alpha_e, f0>
    theta_log: list                # seed gap after j stages, j = 0..k
    f0: np.ndarray                 # limit direction on the first-shell support
    rows: list                     # first-shell support (obstacle-0 frame)
    stage_matrices: list           # dense active-to-active stage matrices
    diameters: list                # projective diameters of the stage images
    n_stages: int
    K: int
    alpha_e: np.ndarray
    alpha_x: np.ndarray


def _ray_elements(g: Group, ray_letters) -> list:
    out = []
    for a in ray_letters:
        try:
            g.check_element(a)
            out.append(a)
        except Exception:
            out.append(g.letter_element(a))
    return out


def _prefix(g: Group, word, n: int):
    x = g.identity
    for s in word[:n]:
        x = g.mul(x, s)
    return x


def chain_apply(p: StepMeasure, ray_letters, x, M: int, k: int,
                trunc_R: int = DEFAULT_OBSTACLE_RADIUS, K: int | None = None,
                t_norm: float = 2.0, seed: int = 0) -> ChainResult:
    """Apply k chained obstacle matrices along a ray, right to left.

    Obstacle j is centered at ray position K + 2jM, so consecutive shells
    coincide as sets while x and e lie strictly before the first shell
    (any K > M + |x| + 2 delta works; the default keeps words short).
    Each obstacle is built in its own anchored frame; columns are carried
    to the next frame by the 2M-segment shift.  Two distinct random seeds
    are propagated and theta_log[j] records their projective gap after j
    stages; the limit direction yields the boundary Martin kernel

        K_xi(x) = <alpha_x, f_0> / <alpha_e, f_0>

    with alpha_* the first-visit vectors onto the first shell.
    """
    g = p.group
    r = p.support.radius
    word = _ray_elements(g, ray_letters)
    if K is None:
        K = 2 * M + g.length(x) + 2 + 2 * int(math.ceil(g.delta))
    need = K + 2 * (k - 1) * M + 2 * M + 4 * r
    if len(word) < need:
        raise ChainError(f"ray too short: need {need} letters, got {len(word)}")
    if g.length(_prefix(g, word, need)) != need:
        raise ChainError("ray is not geodesic")

    obstacles = []
    seg_len = 4 * M + 4 * r
    from .green import _measure_key
    mkey = _measure_key(p)
    for j in range(k):
        offset = K + 2 * j * M - 2 * M  # position of gamma_j(-2M) on the ray
        sub = tuple(word[offset: offset + seg_len])
        key = (mkey, sub, M, trunc_R)
        if key not in _obstacle_cache:  # periodic rays repeat whole obstacles
            if len(_obstacle_cache) >= 4:
                _obstacle_cache.pop(next(iter(_obstacle_cache)))
            _obstacle_cache[key] = build_obstacle(p, word, M, trunc_R,
                                                  offset=offset)
        obstacles.append(_obstacle_cache[key])
    # frame j+1 = S_j^-1 . frame j with S_j the 2M ray letters after the
    # j-th anchor
    offsets = [K + 2 * j * M - 2 * M for j in range(k)]
    shifts_inv = []
    for j in range(k):
        s = g.identity
        for a in word[offsets[j]: offsets[j] + 2 * M]:
            s = g.mul(s, a)
        shifts_inv.append(g.inv(s))

    # first-visit vectors of e and x onto the first shell, in a global-frame
    # approach tube; their supports fix the row set of the first matrix
    g0 = _prefix(g, word, K - 2 * M)  # global anchor of obstacle 0's frame
    centers = [_prefix(g, word, n) for n in range(K + 2 * r + 1)]
    xverts = [g.identity]
    for s in g.geodesic_word(x):
        xverts.append(g.mul(xverts[-1], s))
    centers = list(dict.fromkeys(centers + xverts))
    approach = StateSpace.tube(p, centers, trunc_R)
    a_m2m = g0                          # gamma_0(-2M) in the ray frame
    a_0 = _prefix(g, word, K)           # gamma_0(0)
    a_4r = _prefix(g, word, K + 4 * r)  # gamma_0(4r)
    shell_mask = approach.mask_of(
        lambda z: (g.dist(z, a_m2m) < g.dist(z, a_4r))
        and not (g.dist(z, a_m2m) < g.dist(z, a_0)))
    if not shell_mask.any():
        raise ChainError("first shell did not intersect the approach tube")
    alpha_e_raw, _ = approach.first_visit(shell_mask, g.identity)
    alpha_x_raw, _ = approach.first_visit(shell_mask, x)
    to_frame0 = lambda z: g.mul(g.inv(g0), z)
    support = sorted({to_frame0(approach.states[i]) for i in alpha_e_raw}
                     | {to_frame0(approach.states[i]) for i in alpha_x_raw},
                     key=repr)
    rows0 = support
    alpha_e = np.array([sum(m for i, m in alpha_e_raw.items()
                            if to_frame0(approach.states[i]) == v) for v in rows0])
    alpha_x = np.array([sum(m for i, m in alpha_x_raw.items()
                            if to_frame0(approach.states[i]) == v) for v in rows0])

    # active sets per stage, each in its obstacle's own frame
    act = [rows0]
    for j in range(k):
        cols = [obstacles[j].space.states[i] for i in obstacles[j].v1_active_idx]
        act.append([g.mul(shifts_inv[j], c) for c in cols])  # frame j+1

    matrices = []
    diameters = []
    for j, obs in enumerate(obstacles):
        rows_here = act[j]
        try:
            rows_idx = np.array([obs.space.index[v] for v in rows_here])
        except KeyError as exc:
            raise ChainError(f"chain incompatibility: row {exc} not enumerated "
                             f"in obstacle {j}") from exc
        fv = first_visit_matrix(p, obs, rows_idx=rows_idx)
        # columns of the solve are obstacle j's active set in frame j; the
        # next stage's rows are the same points in frame j+1 (act[j+1])
        matrices.append(fv.lower)
        diameters.append(operator_diameter(PositiveOperator(fv.lower)))

    rng = np.random.default_rng(seed)
    nk = len(act[k])
    f = ConeVector(0.5 + rng.random(nk), t_norm)
    h = ConeVector(0.5 + rng.random(nk), t_norm)
    if nk > 1:
        # one-dimensional cones are a single ray: seeds cannot be distinct
        for _ in range(32):
            if theta(f, h) >= 1e-3:
                break
            h = ConeVector(0.5 + rng.random(nk), t_norm)
    theta_log = [theta(f, h)]
    for j in range(k - 1, -1, -1):
        f = ConeVector(matrices[j] @ f.entries, t_norm).normalized()
        h = ConeVector(matrices[j] @ h.entries, t_norm).normalized()
        theta_log.append(theta(f, h))
    f0 = f.entries
    num = float(np.dot(alpha_x, f0))
    den = float(np.dot(alpha_e, f0))
    if den <= 0 or num <= 0:
        raise ChainError("chain limit pairing degenerated")
    return ChainResult(num / den, theta_log, f0, rows0, matrices, diameters,
                       k, K, alpha_e, alpha_x)


def check_chain_contraction(theta_log, c1: float, slack: float = 1.05,
                            floor: float = 1e-12) -> None:
    """Assert per-stage decay theta[j+1] <= max(beta*slack*theta[j], floor).

    beta = tanh(ln c1) is the Birkhoff ratio of a cone of diameter
    4 ln c1.  Below `floor` the gaps are numerical noise and the decay
    claim is already settled.
    """
    beta = math.tanh(math.log(c1)) if c1 > 1.0 else 0.0
    for j in range(len(theta_log) - 1):
        bound = max(beta * slack * theta_log[j], floor)
        if theta_log[j + 1] > bound:
            raise ChainError(
                f"stage {j}: theta {theta_log[j + 1]:.3e} exceeds "
                f"contraction bound {bound:.3e}"
            )


# ---------------------------------------------------------------------------
# boundary-kernel Hoelder regression
# ---------------------------------------------------------------------------


@dataclass
class HolderEstimate:
    kappa_hat: float
    c_hat: float
    r_squared: float
    n_pairs: int
    degenerate_zero: bool = False


def holder_estimate_phi(p: StepMeasure, x, depth_pairs, tol: float = 1e-5,
                        trunc_R: int = DEFAULT_OBSTACLE_RADIUS,
                        zero_floor: float = 1e-10) -> HolderEstimate:
    """Fit |Phi(xi) - Phi(eta)| <= C exp(-kappa n) over ray pairs with
    confluence n, where Phi(xi) = -ln K_xi(x).

    depth_pairs: list of (xi_letters, eta_letters, n).  Needs 5 distinct
    confluence depths.  Nearest-neighbor walks on trees have locally
    constant kernels, so all deep differences vanish exactly; that case is
    reported as degenerate rather than regressed.
    """
    from .green import martin_kernel_boundary

    g = p.group
    ns = sorted({n for _, _, n in depth_pairs})
    if len(ns) < 5:
        raise ValueError(f"need pairs at >= 5 distinct depths, got {len(ns)}")
    if x == g.identity:
        return HolderEstimate(math.inf, 0.0, 1.0, len(depth_pairs),
                              degenerate_zero=True)
    cache: dict = {}

    def phi(ray):
        key = tuple(ray)
        if key not in cache:
            bk = martin_kernel_boundary(p, ray, x, tol=tol, trunc_R=trunc_R,
                                        n_min=g.length(x) + 2,
                                        n_max=len(ray) - 1, step=2)
            cache[key] = -math.log(bk.value)
        return cache[key]

    xs, ys = [], []
    zeros = 0
    for xi, eta, n in depth_pairs:
        d = abs(phi(xi) - phi(eta))
        if d < zero_floor:
            zeros += 1
            continue
        xs.append(float(n))
        ys.append(math.log(d))
    if zeros >= len(depth_pairs) - 2 or len(set(xs)) < 3:
        return HolderEstimate(math.inf, 0.0, 1.0, len(depth_pairs),
                              degenerate_zero=True)
    slope, icept = np.polyfit(xs, ys, 1)
    pred = slope * np.array(xs) + icept
    res = np.array(ys) - pred
    ss_tot = float(((np.array(ys) - np.mean(ys)) ** 2).sum())
    r2 = 1.0 - float((res ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    kappa = -slope
    if kappa <= 0:
        raise ObstacleError(f"fitted Hoelder exponent not positive: {kappa}")
    return HolderEstimate(kappa, math.exp(icept), r2, len(depth_pairs))
