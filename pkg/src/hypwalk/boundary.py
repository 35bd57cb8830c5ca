"""The boundary as an explicit subshift, harmonic measure, and boundary formulas.

For the shipped families the space of geodesic rays from the identity is a
subshift of finite type: reduced words for free groups, alternating
syllables for free products, two constant-sign fixed sequences for the
line.  Harmonic measure is computed two ways (a stationarity fixed point
in a Markov-measure ansatz, and Monte Carlo prefix frequencies), boundary
Martin kernels give a Ruelle transfer operator whose pressure should
vanish, and the entropy/escape rate are evaluated by their boundary
formulas

    h = -sum_x p(x) int ln(d x^-1 nu / d nu) dnu,
    l = max over components of sum_x p(x) int bus(xi, x^-1) dnu(xi),

with the density orientation frozen by a recorded calibration run against
the direct difference estimators (both orientations stay computable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .groups import FreeGroup, FreeProduct, Group, IntegerLine
from .green import Interval, _measure_key, martin_kernel_boundary
from .measures import StepMeasure, sample_path

#: orientation of the entropy integrand, frozen by calibration against the
#: direct estimator on a drifted nearest-neighbor measure (see the
#: calibration artifact produced by calibrate_density_orientation)
ENTROPY_ORIENTATION = "inverse-pushforward"

#: sign of the transfer-operator weight ln K; the eigenmeasure equation
#: needs the reciprocal of the shift Jacobian, hence the minus
TRANSFER_WEIGHT_SIGN = -1.0


class SubshiftError(ValueError):
    pass


@dataclass
class BoundarySubshift:
    """Admissible-sequence model of the boundary rays from the identity."""

    group: Group
    letters: tuple
    allowed: np.ndarray  # boolean transition matrix
    components: list     # list of letter tuples, one per transitive component

    def letter_index(self, a) -> int:
        return self.letters.index(a)

    def successors(self, a):
        i = self.letter_index(a)
        return tuple(b for j, b in enumerate(self.letters) if self.allowed[i, j])

    def is_admissible(self, word) -> bool:
        for a, b in zip(word, word[1:]):
            if not self.allowed[self.letter_index(a), self.letter_index(b)]:
                return False
        return True

    def words(self, length: int, component=None):
        """All admissible words of the given length (optionally within a
        component)."""
        letters = self.letters if component is None else component
        if length == 0:
            return [()]
        out = [(a,) for a in letters]
        for _ in range(length - 1):
            out = [w + (b,) for w in out for b in letters
                   if self.allowed[self.letter_index(w[-1]), self.letter_index(b)]]
        return out

    def extend(self, word, length: int):
        """Deterministic admissible extension of a word to the target length."""
        w = tuple(word)
        while len(w) < length:
            nxt = self.successors(w[-1]) if w else self.letters
            if not nxt:
                raise SubshiftError(f"word {w!r} has no admissible continuation")
            w = w + (nxt[0],)
        return w

    def word_element(self, word):
        return self.group.from_letters(word)


def _transitive_components(letters, allowed) -> list:
    """Strongly connected components that support recurrent sequences."""
    n = len(letters)
    index = {}
    low = {}
    stack = []
    on_stack = set()
    comps = []
    counter = [0]

    def strongconnect(v):
        work = [(v, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for w in range(pi, n):
                if not allowed[node, w]:
                    continue
                if w not in index:
                    work[-1] = (node, w + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            if pi < n:
                work[-1] = (node, n)
                continue
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comps.append(sorted(comp))
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for v in range(n):
        if v not in index:
            strongconnect(v)
    out = []
    for comp in comps:
        if len(comp) > 1 or allowed[comp[0], comp[0]]:
            out.append(tuple(letters[i] for i in comp))
    return out


def build_subshift(group: Group) -> BoundarySubshift:
    """Transition structure of geodesic rays for a shipped family."""
    if isinstance(group, (IntegerLine, FreeGroup, FreeProduct)):
        letters = tuple(group.letter_alphabet())
        n = len(letters)
        allowed = np.zeros((n, n), dtype=bool)
        for i, a in enumerate(letters):
            for j, b in enumerate(letters):
                allowed[i, j] = group.letter_allowed(a, b)
        comps = _transitive_components(letters, allowed)
        return BoundarySubshift(group, letters, allowed, comps)
    raise SubshiftError(f"unsupported family {group.name!r}")


@dataclass
class CylinderMeasure:
    """Masses on admissible words of every length up to the depth."""

    subshift: BoundarySubshift
    depth: int
    masses: dict

    TOTAL_TOL = 1e-10

    def mass(self, word) -> float:
        if len(word) == 0:
            return 1.0
        return self.masses.get(tuple(word), 0.0)

    @classmethod
    def from_deep_masses(cls, subshift, depth, deep: dict):
        """Build all marginals from masses on depth-`depth` words."""
        masses = {tuple(w): float(m) for w, m in deep.items()}
        for d in range(depth - 1, 0, -1):
            level: dict = {}
            for w, m in masses.items():
                if len(w) == d + 1:
                    level[w[:-1]] = level.get(w[:-1], 0.0) + m
            masses.update(level)
        return cls(subshift, depth, masses)

    def check_consistency(self, tol: float = 1e-9) -> float:
        worst = abs(sum(m for w, m in self.masses.items() if len(w) == 1) - 1.0)
        for w, m in self.masses.items():
            if len(w) >= self.depth:
                continue
            kids = sum(self.mass(w + (b,)) for b in self.subshift.successors(w[-1]))
            worst = max(worst, abs(kids - m))
        if worst > tol:
            raise ArithmeticError(f"cylinder masses inconsistent by {worst:.3e}")
        return worst

    def tv_distance(self, other: "CylinderMeasure", depth: int | None = None) -> float:
        d = min(self.depth, other.depth) if depth is None else depth
        words = self.subshift.words(d)
        return 0.5 * sum(abs(self.mass(w) - other.mass(w)) for w in words)


@dataclass
class MarkovAnsatz:
    """Markov measure on the subshift: initial vector + stochastic matrix."""

    subshift: BoundarySubshift
    initial: np.ndarray
    transition: np.ndarray

    def cylinder_mass(self, word) -> float:
        if not word:
            return 1.0
        sub = self.subshift
        i = sub.letter_index(word[0])
        m = self.initial[i]
        for a, b in zip(word, word[1:]):
            m *= self.transition[sub.letter_index(a), sub.letter_index(b)]
        return float(m)

    def to_cylinder_measure(self, depth: int) -> CylinderMeasure:
        masses = {}
        for d in range(1, depth + 1):
            for w in self.subshift.words(d):
                m = self.cylinder_mass(w)
                if m:
                    masses[w] = m
        return CylinderMeasure(self.subshift, depth, masses)


# ---------------------------------------------------------------------------
# boundary action on cylinders
# ---------------------------------------------------------------------------


def preimage_cylinder_mass(measure, x, word, subshift: BoundarySubshift) -> float:
    """nu({xi : x.xi lies in [word]}) = nu(x^-1 [word]).

    Decomposes over admissible words u of length |word| + |x|: the first
    |word| letters of x*u are then independent of the tail, so the set is
    a finite union of deep cylinders.  `measure` must expose cylinder
    masses at that depth (a MarkovAnsatz or a deep CylinderMeasure).
    """
    g = subshift.group
    word = tuple(word)
    lx = g.length(x)
    if lx == 0:
        return measure.cylinder_mass(word) if hasattr(measure, "cylinder_mass") \
            else measure.mass(word)
    need = len(word) + lx
    if isinstance(measure, CylinderMeasure) and need > measure.depth:
        raise SubshiftError(
            f"translating by |x|={lx} needs depth {need} but the measure "
            f"only resolves depth {measure.depth}"
        )
    getter = (measure.cylinder_mass if hasattr(measure, "cylinder_mass")
              else measure.mass)
    total = 0.0
    for u in subshift.words(need):
        z = g.mul(x, g.from_letters(u))
        if g.length(z) >= len(word) and g.letters(z)[:len(word)] == word:
            total += getter(u)
    return total


def pushforward_depth_masses(measure, x, depth: int,
                             subshift: BoundarySubshift) -> dict:
    """nu(x^-1 [w]) for every depth-`depth` word w, in one sweep.

    Same deep-cylinder decomposition as preimage_cylinder_mass, grouped by
    the image prefix so the enumeration happens once per x.
    """
    g = subshift.group
    lx = g.length(x)
    getter = (measure.cylinder_mass if hasattr(measure, "cylinder_mass")
              else measure.mass)
    out = {w: 0.0 for w in subshift.words(depth)}
    if lx == 0:
        return {w: getter(w) for w in out}
    need = depth + lx
    if isinstance(measure, CylinderMeasure) and need > measure.depth:
        raise SubshiftError(
            f"translating by |x|={lx} needs depth {need} but the measure "
            f"only resolves depth {measure.depth}"
        )
    for u in subshift.words(need):
        m = getter(u)
        if m == 0.0:
            continue
        z = g.mul(x, g.from_letters(u))
        if g.length(z) >= depth:
            w = g.letters(z)[:depth]
            if w in out:
                out[w] += m
    return out


def stationarity_residual(p: StepMeasure, ansatz: MarkovAnsatz, depth: int) -> float:
    """sup over depth-d cylinders of |nu(C) - sum_x p(x) nu(x^-1 C)|."""
    sub = ansatz.subshift
    pushed = {w: 0.0 for w in sub.words(depth)}
    for x, q in p.probs.items():
        for w, m in pushforward_depth_masses(ansatz, x, depth, sub).items():
            pushed[w] += q * m
    return max(abs(m - ansatz.cylinder_mass(w)) for w, m in pushed.items())


@dataclass
class HarmonicResult:
    measure: CylinderMeasure
    ansatz: MarkovAnsatz | None
    residual: float
    method: str
    iterations: int = 0
    n_samples: int = 0
    component_masses: dict = field(default_factory=dict)


class FixedPointError(RuntimeError):
    pass


def harmonic_measure(p: StepMeasure, depth: int, method: str = "stationary-fixed-point",
                     tol: float = 1e-13, max_iter: int = 500,
                     n_samples: int = 2000, seed: int = 0,
                     n_conv: int | None = None) -> HarmonicResult:
    """Exit law of the walk on the boundary, on depth-`depth` cylinders.

    stationary-fixed-point: iterate nu -> sum_x p(x) x_* nu through the
    Markov-measure ansatz (exact for nearest-neighbor walks on trees; the
    residual is reported either way).  monte-carlo: empirical normal-form
    prefix frequencies at time n_conv(depth) (default 20*depth).
    """
    g = p.group
    sub = build_subshift(g)
    if isinstance(g, IntegerLine):
        return _harmonic_measure_line(p, sub, depth)
    if method == "monte-carlo":
        return _harmonic_measure_mc(p, sub, depth, n_samples, seed,
                                    n_conv or 20 * depth)
    if method != "stationary-fixed-point":
        raise ValueError(f"unknown method {method!r}")
    letters = sub.letters
    n = len(letters)
    pi = np.full(n, 1.0 / n)
    P = np.where(sub.allowed, 1.0, 0.0)
    P /= P.sum(axis=1, keepdims=True)
    ansatz = MarkovAnsatz(sub, pi, P)
    for it in range(max_iter):
        new_pi = np.zeros(n)
        pair = np.zeros((n, n))
        for x, q in p.probs.items():
            for (a,), m in pushforward_depth_masses(ansatz, x, 1, sub).items():
                new_pi[sub.letter_index(a)] += q * m
            for (a, b), m in pushforward_depth_masses(ansatz, x, 2, sub).items():
                pair[sub.letter_index(a), sub.letter_index(b)] += q * m
        total = new_pi.sum()
        if total <= 0:
            raise FixedPointError("stationary iteration lost all mass")
        new_pi /= total
        new_P = np.zeros((n, n))
        for i in range(n):
            row = pair[i].sum()
            if row > 0:
                new_P[i] = pair[i] / row
            else:
                new_P[i] = ansatz.transition[i]
        change = max(np.abs(new_pi - ansatz.initial).max(),
                     np.abs(new_P - ansatz.transition).max())
        ansatz = MarkovAnsatz(sub, new_pi, new_P)
        if change < tol:
            break
    else:
        raise FixedPointError(
            f"stationary fixed point not reached in {max_iter} iterations "
            f"(last change {change:.3e})"
        )
    residual = stationarity_residual(p, ansatz, max(1, depth - p.support.radius))
    measure = ansatz.to_cylinder_measure(depth)
    comp_masses = {comp: sum(measure.mass((a,)) for a in comp)
                   for comp in map(tuple, sub.components)}
    return HarmonicResult(measure, ansatz, residual, method, iterations=it + 1,
                          component_masses=comp_masses)


def _harmonic_measure_line(p: StepMeasure, sub: BoundarySubshift,
                           depth: int) -> HarmonicResult:
    drift = sum(q * x for x, q in p.probs.items())
    if drift == 0:
        raise FixedPointError(
            "zero-drift walk on the line does not converge to a boundary point"
        )
    plus = 1.0 if drift > 0 else 0.0
    masses = {}
    for d in range(1, depth + 1):
        masses[(1,) * d] = plus
        masses[(-1,) * d] = 1.0 - plus
    measure = CylinderMeasure(sub, depth, masses)
    return HarmonicResult(measure, None, 0.0, "componentwise",
                          component_masses={(1,): plus, (-1,): 1.0 - plus})


def _harmonic_measure_mc(p: StepMeasure, sub: BoundarySubshift, depth: int,
                         n_samples: int, seed: int, n_conv: int) -> HarmonicResult:
    g = p.group
    counts: dict = {}
    for k in range(n_samples):
        path = sample_path(p, n_conv, seed + k)
        w = g.letters(path[-1])
        if len(w) < depth:
            continue  # unconverged prefix; budget diagnostics catch excess
        w = tuple(w[:depth])
        counts[w] = counts.get(w, 0) + 1
    total = sum(counts.values())
    if total < 0.5 * n_samples:
        raise FixedPointError(
            f"only {total}/{n_samples} walks resolved a depth-{depth} prefix "
            f"at n={n_conv}; increase the budget"
        )
    deep = {w: c / total for w, c in counts.items()}
    measure = CylinderMeasure.from_deep_masses(sub, depth, deep)
    comp_masses = {comp: sum(measure.mass((a,)) for a in comp)
                   for comp in map(tuple, sub.components)}
    return HarmonicResult(measure, None, float("nan"), "monte-carlo",
                          n_samples=total, component_masses=comp_masses)


# ---------------------------------------------------------------------------
# Busemann evaluation
# ---------------------------------------------------------------------------


def busemann(group: Group, xi_letters, x) -> int:
    """Horofunction value lim_n [d(x, xi_n) - d(e, xi_n)] along a ray.

    On the line this is -x at +infinity and +x at -infinity; on the tree
    families it equals |x| - 2 (x | xi), which stabilizes once the ray is
    resolved past |x| + 1 letters.
    """
    group.check_element(x)
    if isinstance(group, IntegerLine):
        sign = xi_letters[0]
        return -sign * int(x)
    need = group.length(x) + 2
    xi_letters = tuple(xi_letters)
    if len(xi_letters) < need:
        raise SubshiftError(
            f"ray resolved to depth {len(xi_letters)} but |x|+2 = {need} is needed"
        )
    a = group.from_letters(xi_letters[:need])
    b = group.from_letters(xi_letters[: need - 1])
    ga = group.gromov_product(x, a)
    gb = group.gromov_product(x, b)
    if ga != gb:
        raise SubshiftError(
            f"Gromov product with the ray not yet stable at depth {need}"
        )
    val = Fraction(group.length(x)) - 2 * ga
    if val.denominator != 1:
        raise ArithmeticError(f"non-integer horofunction value {val}")
    return int(val)


# ---------------------------------------------------------------------------
# cylinder kernels, densities, transfer operator
# ---------------------------------------------------------------------------

_kernel_space_cache: dict = {}


def _cyl_kernel_pool_depth(group: Group, x) -> int:
    # kernels are constant on cylinders deeper than the confluence of x
    # with the ray; delta = 0 for the shipped metrics
    return group.length(x) + 1


def cylinder_kernel(p: StepMeasure, word, x, trunc_R: int = 8,
                    rep_depth: int | None = None) -> Interval:
    """Boundary Martin kernel K_xi(x) on the cylinder [word], as an interval.

    Evaluated at the deterministic ray extension of the word; values for
    cylinders sharing the pool prefix coincide, so results are cached per
    pool.
    """
    g = p.group
    sub = build_subshift(g)
    pool = tuple(word)[: _cyl_kernel_pool_depth(g, x)]
    depth = rep_depth or max(len(word), g.length(x) + 3, 6)
    key = (_measure_key(p), pool, repr(x), depth, trunc_R)
    hit = _kernel_space_cache.get(key)
    if hit is not None:
        return hit
    ray = sub.extend(pool, depth + 2)
    bk = martin_kernel_boundary(p, ray, x, tol=1e-5, n_min=max(len(word), depth - 2),
                                n_max=depth + 2, step=1, trunc_R=trunc_R)
    _kernel_space_cache[key] = bk.interval
    return bk.interval


def radon_nikodym_check(p: StepMeasure, nu: HarmonicResult | CylinderMeasure, x,
                        depth: int, trunc_R: int = 8):
    """Max over depth-D cylinders of |(x_* nu)(C)/nu(C) - K_C(x)|.

    (x_* nu)(C) = nu(x^-1 C) is exact through the ansatz; the kernel side
    carries its solver interval, also returned as a slack.
    """
    measure = nu.measure if isinstance(nu, HarmonicResult) else nu
    ansatz = nu.ansatz if isinstance(nu, HarmonicResult) else None
    sub = measure.subshift
    g = p.group
    source = ansatz if ansatz is not None else measure
    pushed = pushforward_depth_masses(source, g.inv(x), depth, sub)
    worst = 0.0
    slack = 0.0
    for w in sub.words(depth):
        base = (ansatz.cylinder_mass(w) if ansatz is not None else measure.mass(w))
        if base <= 0:
            continue
        k = cylinder_kernel(p, w, x, trunc_R=trunc_R, rep_depth=depth)
        worst = max(worst, abs(pushed[w] / base - k.mid))
        slack = max(slack, k.width)
    return worst, slack


def transfer_weight_table(p: StepMeasure, depth: int, component=None,
                          trunc_R: int = 8) -> dict:
    """phi on depth-`depth` cylinders: sign * ln K_[w](first letter of w)."""
    sub = build_subshift(p.group)
    g = p.group
    table = {}
    for w in sub.words(depth, component):
        x0 = g.letter_element(w[0])
        k = cylinder_kernel(p, w, x0, trunc_R=trunc_R, rep_depth=depth)
        table[w] = TRANSFER_WEIGHT_SIGN * math.log(k.mid)
    return table


def transfer_operator(p: StepMeasure, subshift: BoundarySubshift, psi: dict,
                      depth: int, weight_table: dict | None = None,
                      component=None) -> dict:
    """One application of the Ruelle operator on the depth-D cylinder algebra.

    (L psi)(w) = sum over letters y admissible before w of
    e^{phi(y w)} psi((y w) truncated to depth D).
    """
    sub = subshift
    if weight_table is None:
        weight_table = transfer_weight_table(p, depth + 1, component)
    letters = component or sub.letters
    out = {}
    for w in sub.words(depth, component):
        acc = 0.0
        for y in letters:
            if not sub.allowed[sub.letter_index(y), sub.letter_index(w[0])]:
                continue
            yw = (y,) + w
            acc += math.exp(weight_table[yw]) * psi[yw[:depth]]
        out[w] = acc
    return out


def pressure_and_eigenmeasure(p: StepMeasure, depth: int, component=None,
                              trunc_R: int = 8, tol: float = 1e-12,
                              max_iter: int = 5000):
    """Leading eigenvalue (log) and eigenmeasure of the dual transfer operator.

    Power-iterates L* on the depth-D algebra of one transitive component;
    P_hat = ln lambda should vanish and the normalized eigenmeasure should
    match harmonic measure.
    """
    sub = build_subshift(p.group)
    if component is None:
        if len(sub.components) != 1:
            raise SubshiftError("select a transitive component")
        component = sub.components[0]
    words = sub.words(depth, component)
    windex = {w: i for i, w in enumerate(words)}
    weight_table = transfer_weight_table(p, depth + 1, component, trunc_R)
    rows, cols, vals = [], [], []
    for w in words:
        for y in component:
            if not sub.allowed[sub.letter_index(y), sub.letter_index(w[0])]:
                continue
            yw = (y,) + w
            rows.append(windex[w])
            cols.append(windex[yw[:depth]])
            vals.append(math.exp(weight_table[yw]))
    L = sp.csr_matrix((vals, (rows, cols)), shape=(len(words), len(words)))
    v = np.full(len(words), 1.0 / len(words))
    lam = 1.0
    for it in range(max_iter):
        nv = L.T @ v
        nlam = nv.sum()
        if nlam <= 0:
            raise FixedPointError("dual transfer iteration collapsed")
        nv = nv / nlam
        if abs(nlam - lam) < tol and np.abs(nv - v).max() < tol:
            v = nv
            lam = nlam
            break
        v, lam = nv, nlam
    else:
        raise FixedPointError(
            f"dual transfer iteration did not converge in {max_iter} steps "
            f"(spectral gap too small at depth {depth}; increase the depth)"
        )
    deep = {w: float(m) for w, m in zip(words, v)}
    n_phi = CylinderMeasure.from_deep_masses(sub, depth, deep)
    return math.log(lam), n_phi, it + 1


# ---------------------------------------------------------------------------
# boundary formulas for entropy and escape
# ---------------------------------------------------------------------------


def entropy_boundary(p: StepMeasure, nu: HarmonicResult, depth: int,
                     orientation: str = ENTROPY_ORIENTATION,
                     rn_threshold: float | None = 0.25,
                     trunc_R: int = 8) -> float:
    """Boundary entropy -sum_x p(x) sum_C nu(C) ln(density(C)).

    orientation "inverse-pushforward" uses d(x^-1_* nu)/d nu, i.e. the
    cylinder ratio nu(x C)/nu(C); "pushforward" uses nu(x^-1 C)/nu(C).
    Refuses when the density-vs-kernel check exceeds rn_threshold.
    """
    g = p.group
    if isinstance(g, IntegerLine):
        return 0.0  # two fixed boundary points, densities are 1
    measure, ansatz = nu.measure, nu.ansatz
    sub = measure.subshift
    source = ansatz if ansatz is not None else measure
    if rn_threshold is not None:
        x0 = g.generators[0]
        err, slack = radon_nikodym_check(p, nu, x0, min(depth, 2), trunc_R)
        if err > rn_threshold + slack:
            raise ArithmeticError(
                f"cylinder densities disagree with kernels by {err:.3g} "
                f"(threshold {rn_threshold}); harmonic measure looks unconverged"
            )
    total = 0.0
    for x, q in p.probs.items():
        arg = g.inv(x) if orientation == "inverse-pushforward" else x
        pushed = pushforward_depth_masses(source, arg, depth, sub)
        acc = 0.0
        for w in sub.words(depth):
            base = (ansatz.cylinder_mass(w) if ansatz is not None
                    else measure.mass(w))
            if base <= 0:
                continue
            if pushed[w] <= 0:
                raise ArithmeticError(
                    f"translated cylinder mass vanished on {w!r}; deepen the measure"
                )
            acc += base * math.log(pushed[w] / base)
        total += q * acc
    return -total


def escape_boundary(p: StepMeasure, nu: HarmonicResult | None = None,
                    depth: int | None = None) -> float:
    """max over boundary components of sum_x p(x) int bus(xi, x^-1) dnu(xi).

    For the shipped families the stationary measures per component are the
    line's two point masses (both always enter the maximum) or the tree
    families' unique harmonic measure on their single component.
    """
    g = p.group
    sub = build_subshift(g)
    if isinstance(g, IntegerLine):
        drift = sum(q * x for x, q in p.probs.items())
        return max(drift, -drift)
    if nu is None:
        depth = depth or (p.support.radius + 3)
        nu = harmonic_measure(p, depth)
    measure = nu.measure
    depth = depth or measure.depth
    best = -math.inf
    for comp in sub.components:
        comp_mass = sum(measure.mass((a,)) for a in comp)
        if comp_mass <= 0:
            continue
        val = 0.0
        for x, q in p.probs.items():
            xi_need = g.length(x) + 2
            acc = 0.0
            for w in sub.words(min(depth, measure.depth), comp):
                m = measure.mass(w)
                if m <= 0:
                    continue
                ray = sub.extend(w, xi_need)
                acc += m * busemann(g, ray, g.inv(x))
            val += q * acc / comp_mass
        best = max(best, val)
    return best


def calibrate_density_orientation(p: StepMeasure, depth: int,
                                  direct_estimate: float) -> dict:
    """Evaluate both entropy orientations against a direct estimate.

    Returns the calibration artifact; the winning orientation is frozen in
    ENTROPY_ORIENTATION.
    """
    nu = harmonic_measure(p, depth)
    out = {}
    for orient in ("inverse-pushforward", "pushforward"):
        out[orient] = entropy_boundary(p, nu, depth, orientation=orient,
                                       rn_threshold=None)
    gaps = {k: abs(v - direct_estimate) for k, v in out.items()}
    out["direct"] = direct_estimate
    out["chosen"] = min(gaps, key=gaps.get)
    return out
