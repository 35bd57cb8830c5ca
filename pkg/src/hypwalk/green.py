"""Green functions, hitting probabilities, and Martin kernels.

Two computation routes are kept deliberately separate:

* a convolution-series route for G(x) = sum_n p^(n)(x) with a geometric
  tail certificate C zeta^(n+1)/(1-zeta) calibrated from the observed
  return probabilities, and
* a hitting route through truncated absorbing systems, u(x,y) intervals
  from tube-killed solves plus an escape-return bound, with
  G(x) = u(e,x) G(e) and G(e) = 1/(1 - sum_s p(s) u(s,e)).

Martin kernels are computed from both routes; their intervals must
overlap, and the reported value is the midpoint of the overlap.  Boundary
kernels are ray limits K_{gamma(n)}(x) with a fitted geometric Cauchy
rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groups import Group
from .linsys import StateSpace
from .measures import SparseDistribution, StepMeasure, convolve

DEFAULT_TUBE_RADIUS = 8


class SpectralRadiusWarningError(RuntimeError):
    """Amenable family: the convolution spectral radius is not < 1."""


def _measure_key(p: StepMeasure) -> tuple:
    return (p.group.name,
            tuple(sorted((repr(x), q) for x, q in p.probs.items())))


class ConvergenceError(RuntimeError):
    """An iterative limit did not settle within its cap."""

    def __init__(self, message, sequence=None):
        super().__init__(message)
        self.sequence = list(sequence) if sequence is not None else []


@dataclass
class SpectralEstimate:
    """Even-step return estimate zeta_n = (p^(2n)(e))^(1/2n) at largest n."""

    zeta: float
    n_used: int
    sequence: list
    prefactor: float

    def __post_init__(self):
        prev = 0.0
        for z in self.sequence:
            if z < prev - 1e-12:
                raise AssertionError("even-step estimates must be nondecreasing")
            prev = z


@dataclass
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.hi < self.lo:
            # tiny numerical inversions are clamped, real ones are errors
            if self.hi < self.lo - 1e-9:
                raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")
            self.hi = self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def overlaps(self, other: "Interval", slack: float = 0.0) -> bool:
        return self.lo <= other.hi + slack and other.lo <= self.hi + slack

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0:
            raise ZeroDivisionError("interval division by a nonpositive range")
        return Interval(self.lo / other.hi, self.hi / other.lo)


@dataclass
class GreenValue:
    value: float
    tail_bound: float
    terms_used: int
    u_from_identity: float | None = None

    def interval(self) -> Interval:
        return Interval(self.value, self.value + self.tail_bound)


_spectral_cache: dict = {}


def spectral_radius_estimate(p: StepMeasure, n_max: int = 5,
                             prune_eps: float = 1e-16,
                             allow_amenable: bool = False,
                             support_cap: int = 5_000_000) -> SpectralEstimate:
    """(p^(2n)(e))^(1/2n) at the largest affordable n <= n_max.

    Even-step returns are supermultiplicative, so the sequence is
    nondecreasing and every value is a lower estimate of the true spectral
    radius.  On amenable families (the line) the estimate tends to 1 and
    the call refuses unless explicitly acknowledged.
    """
    g = p.group
    if not g.nonamenable and not allow_amenable:
        raise SpectralRadiusWarningError(
            f"{g.name} is amenable: the spectral radius is not < 1 "
            "(pass allow_amenable=True to compute the estimate anyway)"
        )
    cache_key = (_measure_key(p), n_max)
    if cache_key in _spectral_cache:
        return _spectral_cache[cache_key]
    dist = SparseDistribution.dirac(g)
    seq = []
    returns = [1.0]
    e = g.identity
    for n in range(1, 2 * n_max + 1):
        dist = convolve(dist, p, prune_eps, support_cap)
        returns.append(dist.masses.get(e, 0.0))
        if n % 2 == 0:
            seq.append(returns[n] ** (1.0 / n))
    zeta = max(seq)
    if g.nonamenable and zeta >= 1.0:
        raise AssertionError("nonamenable family produced zeta >= 1")
    # tail prefactor: observed p^(n)(e)/zeta^n, doubled for safety
    prefactor = 2.0 * max(r / zeta ** n for n, r in enumerate(returns))
    est = SpectralEstimate(zeta, 2 * n_max, seq, prefactor)
    _spectral_cache[cache_key] = est
    return est


def green(p: StepMeasure, x, eps: float, n_max: int = 12,
          prune_eps: float = 1e-16, support_cap: int = 5_000_000,
          spectral: SpectralEstimate | None = None) -> GreenValue:
    """Series route: partial sums of p^(n)(x) with a certified tail.

    Raises ConvergenceError when the requested eps is unreachable under
    the iteration cap (exponential supports stop the series early on free
    families; the hitting route takes over there).
    """
    g = p.group
    if spectral is None:
        spectral = spectral_radius_estimate(p, prune_eps=prune_eps,
                                            support_cap=support_cap)
    zeta, C = spectral.zeta, spectral.prefactor
    if zeta >= 1.0:
        raise SpectralRadiusWarningError("zeta >= 1: the Green series has no certificate")
    dist = SparseDistribution.dirac(g)
    total = 1.0 if x == g.identity else 0.0
    n = 0
    tail = C * zeta ** (n + 1) / (1.0 - zeta)
    while tail > eps and n < n_max:
        dist = convolve(dist, p, prune_eps, support_cap)
        n += 1
        total += dist.masses.get(x, 0.0)
        tail = C * zeta ** (n + 1) / (1.0 - zeta)
    # pruning can only lose mass: fold the accumulated defect into the tail
    tail += dist.defect
    if tail > eps:
        raise ConvergenceError(
            f"Green series tail {tail:.3g} > eps {eps:.3g} at the n_max={n_max} cap"
        )
    return GreenValue(total, tail, n)


def green_series_values(p: StepMeasure, xs, n_max: int = 12,
                        prune_eps: float = 1e-16, support_cap: int = 5_000_000,
                        spectral: SpectralEstimate | None = None) -> dict:
    """Partial Green sums for several elements from one convolution run."""
    g = p.group
    if spectral is None:
        spectral = spectral_radius_estimate(p, prune_eps=prune_eps,
                                            support_cap=support_cap)
    zeta, C = spectral.zeta, spectral.prefactor
    dist = SparseDistribution.dirac(g)
    totals = {x: (1.0 if x == g.identity else 0.0) for x in xs}
    for n in range(1, n_max + 1):
        dist = convolve(dist, p, prune_eps, support_cap)
        for x in totals:
            totals[x] += dist.masses.get(x, 0.0)
    tail = C * zeta ** (n_max + 1) / (1.0 - zeta) + dist.defect
    return {x: GreenValue(v, tail, n_max) for x, v in totals.items()}


# ---------------------------------------------------------------------------
# hitting route
# ---------------------------------------------------------------------------


@dataclass
class DecayModel:
    """Fitted exponential decay of hitting probabilities with distance."""

    rate: float
    prefactor: float

    def bound(self, distance: float) -> float:
        return min(1.0, self.prefactor * math.exp(-self.rate * max(distance, 0.0)))


_decay_cache: dict = {}


def fitted_decay(p: StepMeasure, k_max: int = 6,
                 radius: int = DEFAULT_TUBE_RADIUS) -> DecayModel:
    """Fit ln u(e, gamma(k)) ~ -rate*k along the first generator ray.

    Heuristic (the true constants are non-constructive); used only inside
    reported error terms, with a doubled prefactor.
    """
    key = _measure_key(p)
    model = _decay_cache.get(key)
    if model is not None:
        return model
    g = p.group
    if not g.nonamenable:
        model = DecayModel(0.0, 2.0)
        _decay_cache[key] = model
        return model
    s = g.generators[0]
    ray = [g.identity]
    for _ in range(k_max):
        ray.append(g.mul(ray[-1], s))
    space = StateSpace.tube(p, ray, radius)
    us = []
    for k in range(1, k_max + 1):
        target = np.zeros(space.size, dtype=bool)
        target[space.index[ray[k]]] = True
        h, _ = space.hitting(target)
        us.append(max(h[space.index[g.identity]], 1e-300))
    ks = np.arange(1, k_max + 1, dtype=float)
    slope, icept = np.polyfit(ks, np.log(us), 1)
    model = DecayModel(max(-slope, 1e-6), 2.0 * math.exp(max(icept, 0.0)))
    _decay_cache[key] = model
    return model


def _geodesic_vertices(g: Group, x, y) -> list:
    """Vertices of the shortlex geodesic from x to y."""
    word = g.geodesic_word(g.mul(g.inv(x), y))
    out = [x]
    for s in word:
        out.append(g.mul(out[-1], s))
    return out


def restricted_hitting(p: StepMeasure, x, y, domain=None,
                       trunc_R: int = DEFAULT_TUBE_RADIUS,
                       space: StateSpace | None = None) -> Interval:
    """Interval for u_Delta(x, y): paths from x to y staying inside Delta.

    The lower bound kills paths leaving the tube of radius trunc_R around
    the geodesic [x, y]; the upper bound adds escape mass times the fitted
    return decay over the tube margin.  u(x, x) = 1 by the time-0 visit
    convention.
    """
    g = p.group
    if x == y:
        if domain is not None and not domain(x):
            raise ValueError("x outside the domain")
        return Interval(1.0, 1.0)
    if space is None:
        space = StateSpace.tube(p, _geodesic_vertices(g, x, y), trunc_R)
    target = np.zeros(space.size, dtype=bool)
    target[space.index[y]] = True
    allowed = space.mask_of(domain) if domain is not None else None
    if allowed is not None and not allowed[space.index[x]]:
        return Interval(0.0, 0.0)
    h, esc = space.hitting(target, allowed)
    ix = space.index[x]
    margin = int(space.depth.max()) + 1 - int(space.depth[space.index[y]])
    ret = fitted_decay(p).bound(margin)
    return Interval(float(h[ix]), float(min(1.0, h[ix] + esc[ix] * ret)))


def green_hitting(p: StepMeasure, x, trunc_R: int = DEFAULT_TUBE_RADIUS) -> Interval:
    """Hitting route for G(x) = u(e,x) G(e), as an interval."""
    g = p.group
    e = g.identity
    ge = green_identity(p, trunc_R)
    if x == e:
        return ge
    u = restricted_hitting(p, e, x, trunc_R=trunc_R)
    return Interval(u.lo * ge.lo, u.hi * ge.hi)


def green_identity(p: StepMeasure, trunc_R: int = DEFAULT_TUBE_RADIUS) -> Interval:
    """G(e) = 1/(1-U) with U = sum_s p(s) u(s, e), as an interval."""
    g = p.group
    e = g.identity
    space = StateSpace.tube(p, [e], trunc_R)
    target = np.zeros(space.size, dtype=bool)
    target[space.index[e]] = True
    h, esc = space.hitting(target)
    ret = fitted_decay(p).bound(int(space.depth.max()) + 1)
    u_lo = sum(p.probs[s] * h[space.index[s]] for s in p.support.elements)
    u_hi = sum(p.probs[s] * min(1.0, h[space.index[s]] + esc[space.index[s]] * ret)
               for s in p.support.elements)
    if u_hi >= 1.0:
        raise ConvergenceError("return probability upper bound reached 1; "
                               "cannot certify G(e) (amenable or radius too small)")
    return Interval(1.0 / (1.0 - u_lo), 1.0 / (1.0 - u_hi))


@dataclass
class KernelValue:
    """Martin kernel estimate with its consistency interval."""

    value: float
    interval: Interval
    series_interval: Interval | None = None
    hitting_interval: Interval | None = None


def martin_kernel(p: StepMeasure, y, x, trunc_R: int = DEFAULT_TUBE_RADIUS,
                  series_n_max: int = 12, eps_series: float | None = None) -> KernelValue:
    """K_y(x) from the Green-ratio and hitting-ratio formulas.

    Both formulas must agree as intervals; the reported value is the
    midpoint of their intersection.
    """
    g = p.group
    e = g.identity
    xy = g.mul(g.inv(x), y)
    gs = green_series_values(p, [xy, y], n_max=series_n_max)
    series = gs[xy].interval() / gs[y].interval()
    space = StateSpace.tube(p, sorted({*_geodesic_vertices(g, x, y),
                                       *_geodesic_vertices(g, e, y)},
                                      key=g.length), trunc_R)
    u_x = restricted_hitting(p, x, y, space=space, trunc_R=trunc_R)
    u_e = restricted_hitting(p, e, y, space=space, trunc_R=trunc_R)
    hit = u_x / u_e
    if not series.overlaps(hit, slack=1e-12):
        raise AssertionError(
            f"Martin kernel routes disagree: series [{series.lo}, {series.hi}] "
            f"vs hitting [{hit.lo}, {hit.hi}]"
        )
    both = series.intersect(hit)
    # killed-chain ratio: truncation losses largely cancel between the two
    # hitting probabilities, making it the sharp point estimate
    point = min(max(u_x.lo / u_e.lo, both.lo), both.hi)
    return KernelValue(point, both, series, hit)


@dataclass
class BoundaryKernel:
    value: float
    interval: Interval
    fitted_rate: float
    depths: list
    sequence: list


def _ray_vertices(g: Group, ray_letters, n: int) -> list:
    """Vertices gamma(0..n) of a geodesic ray given by subshift letters."""
    letters = list(ray_letters)
    if len(letters) < n:
        raise ValueError("ray description too short")
    out = [g.identity]
    prev = None
    for a in letters[:n]:
        if prev is not None and not g.letter_allowed(prev, a):
            raise ValueError(f"ray is not geodesic at letter {a!r}")
        out.append(g.mul(out[-1], g.letter_element(a)))
        prev = a
    return out


def martin_kernel_boundary(p: StepMeasure, ray_letters, x, tol: float = 1e-4,
                           n_min: int = 4, n_max: int = 14, step: int = 2,
                           trunc_R: int = DEFAULT_TUBE_RADIUS) -> BoundaryKernel:
    """Boundary Martin kernel K_xi(x) as the ray limit of u(x,.)/u(e,.).

    Stops when consecutive evaluations differ by less than tol and fits
    the geometric Cauchy rate; raises ConvergenceError (carrying the
    observed sequence) when the cap is reached first.
    """
    g = p.group
    verts = _ray_vertices(g, ray_letters, n_max)
    centers = list(dict.fromkeys(_geodesic_vertices(g, g.identity, x) + verts))
    space = StateSpace.tube(p, centers, trunc_R)
    depths = list(range(n_min, n_max + 1, step))
    vals = []
    widths = []
    for n in depths:
        y = verts[n]
        u_x = restricted_hitting(p, x, y, space=space, trunc_R=trunc_R)
        u_e = restricted_hitting(p, g.identity, y, space=space, trunc_R=trunc_R)
        vals.append(u_x.lo / u_e.lo)  # killed-chain ratio, see martin_kernel
        widths.append((u_x / u_e).width)
        if len(vals) >= 2 and abs(vals[-1] - vals[-2]) < tol:
            diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
            rate = 0.0
            pairs = [(a, b) for a, b in zip(diffs, diffs[1:]) if a > 0]
            if pairs:
                rate = max(min(b / a, 1.0) for a, b in pairs) ** (1.0 / step)
            slack = abs(vals[-1] - vals[-2]) + widths[-1]
            return BoundaryKernel(vals[-1], Interval(vals[-1] - slack, vals[-1] + slack),
                                  rate, depths[: len(vals)], vals)
    raise ConvergenceError(
        f"boundary kernel not Cauchy within tol={tol} up to n={n_max}", vals
    )
