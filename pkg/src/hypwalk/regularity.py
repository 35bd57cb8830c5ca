"""Empirical Lipschitz regularity of entropy, escape rate, and kernels in p.

The measure simplex over a fixed support F carries the projective distance

    theta(p, p') = ln[max_i(p'_i/p_i) * max_i(p_i/p'_i)]

and the scans below form difference quotients |Q(p)-Q(p')|/theta(p,p')
over sampled nearest-neighbor pairs, reporting the maximum.  A bounded,
refinement-stable maximum is the desk-scale shadow of Lipschitz
continuity; the second-difference kink detector flags candidate non-C^1
points (exact on the line, where the escape rate is |sum i p_i|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import entropy_boundary, escape_boundary, harmonic_measure
from .green import martin_kernel_boundary, spectral_radius_estimate
from .measures import StepMeasure, step_measure

DEFAULT_SIMPLEX_FLOOR = 0.02


def projective_distance(p: StepMeasure, q: StepMeasure) -> float:
    """theta on the open simplex over a common support."""
    if set(p.probs) != set(q.probs):
        raise ValueError("measures live on different supports")
    ratios = [q.probs[x] / p.probs[x] for x in p.probs]
    return math.log(max(ratios) * max(1.0 / r for r in ratios))


def sample_simplex_measure(group, support, rng, floor: float = DEFAULT_SIMPLEX_FLOOR
                           ) -> StepMeasure:
    """Uniform (Dirichlet) sample of the support simplex above the floor."""
    k = len(support)
    if floor * k >= 1.0:
        raise ValueError("floor too large for the support size")
    w = rng.dirichlet(np.ones(k))
    w = floor + (1.0 - k * floor) * w
    return step_measure(group, list(zip(support, w)), check_generates=False)


def perturb_measure(p: StepMeasure, rng, scale: float,
                    floor: float = DEFAULT_SIMPLEX_FLOOR) -> StepMeasure:
    """A nearby simplex point at projective distance ~scale."""
    supp = list(p.support.elements)
    for _ in range(64):
        d = rng.normal(size=len(supp))
        d -= d.mean()
        w = np.array([p.probs[x] for x in supp]) * np.exp(scale * d)
        w /= w.sum()
        if (w >= floor).all():
            return step_measure(p.group, list(zip(supp, w)), check_generates=False)
    raise ValueError("could not perturb inside the floored simplex")


@dataclass
class LipschitzReport:
    quantity: str
    pairs: list                 # (p_probs, q_probs, value_p, value_q, quotient)
    max_quotient: float
    argmax: tuple | None
    grid_spec: dict = field(default_factory=dict)

    def check_finite(self) -> None:
        if not math.isfinite(self.max_quotient):
            raise ArithmeticError("infinite difference quotient in the scan")


def boundary_entropy_estimator(depth: int = 4):
    def est(p: StepMeasure) -> float:
        nu = harmonic_measure(p, depth + p.support.radius)
        return entropy_boundary(p, nu, depth, rn_threshold=None)
    return est


def boundary_escape_estimator(depth: int = 4):
    def est(p: StepMeasure) -> float:
        if not p.group.nonamenable:
            return escape_boundary(p)
        nu = harmonic_measure(p, depth + p.support.radius)
        return escape_boundary(p, nu, depth)
    return est


def phi_estimator(x, ray_set, kappa_hat: float, tol: float = 1e-4,
                  trunc_R: int = 8):
    """Hoelder-seminorm proxy for Phi_p = -ln K_.(x) over a finite ray set.

    ray_set: list of (xi_letters, eta_letters, confluence n); the seminorm
    is max |dPhi(xi) - dPhi(eta)| / exp(-kappa_hat * n) plus the sup term.
    """
    def est(p: StepMeasure):
        vals = {}
        for xi, eta, _ in ray_set:
            for ray in (tuple(xi), tuple(eta)):
                if ray not in vals:
                    bk = martin_kernel_boundary(p, ray, x, tol=tol,
                                                trunc_R=trunc_R)
                    vals[ray] = -math.log(bk.value)
        return vals
    return est


def phi_norm_difference(vals_p: dict, vals_q: dict, ray_set,
                        kappa_hat: float) -> float:
    sup = max(abs(vals_p[r] - vals_q[r]) for r in vals_p)
    semi = 0.0
    for xi, eta, n in ray_set:
        d = abs((vals_p[tuple(xi)] - vals_q[tuple(xi)])
                - (vals_p[tuple(eta)] - vals_q[tuple(eta)]))
        semi = max(semi, d / math.exp(-kappa_hat * n))
    return sup + semi


def lipschitz_scan(p_center: StepMeasure, estimator, n_points: int,
                   step_scale: float, seed: int = 0,
                   floor: float = DEFAULT_SIMPLEX_FLOOR,
                   quantity: str = "quantity",
                   pair_norm=None) -> LipschitzReport:
    """Difference quotients of an estimator over sampled simplex pairs.

    Samples n_points measures around the whole floored simplex of the
    center's support, pairs each with a perturbation at the step scale,
    and reports max |Q(p)-Q(p')| / theta(p,p').
    """
    g = p_center.group
    supp = list(p_center.support.elements)
    rng = np.random.default_rng(seed)
    pairs = []
    max_q = 0.0
    argmax = None
    for i in range(n_points):
        pa = sample_simplex_measure(g, supp, rng, floor)
        pb = perturb_measure(pa, rng, step_scale, floor)
        dist = projective_distance(pa, pb)
        va = estimator(pa)
        vb = estimator(pb)
        if pair_norm is not None:
            quot = pair_norm(va, vb) / dist
            va_rec, vb_rec = None, None
        else:
            quot = abs(va - vb) / dist
            va_rec, vb_rec = va, vb
        pairs.append((dict(pa.probs), dict(pb.probs), va_rec, vb_rec, quot))
        if quot > max_q:
            max_q = quot
            argmax = (dict(pa.probs), dict(pb.probs))
    rep = LipschitzReport(quantity, pairs, max_q, argmax,
                          {"n_points": n_points, "step_scale": step_scale,
                           "floor": floor, "seed": seed})
    rep.check_finite()
    return rep


@dataclass
class KinkReport:
    ts: list
    values: list
    second_differences: list
    flagged: list               # indices into ts[1:-1]
    threshold_ratio: float = 10.0


def kink_detector(p_a: StepMeasure, p_b: StepMeasure, estimator, steps: int,
                  threshold_ratio: float = 10.0) -> KinkReport:
    """Second differences of an estimator along a simplex segment.

    Points where |second difference| exceeds threshold_ratio times the
    segment median are flagged as candidate non-smooth points.
    """
    g = p_a.group
    supp = list(p_a.support.elements)
    if set(supp) != set(p_b.support.elements):
        raise ValueError("segment endpoints have different supports")
    wa = np.array([p_a.probs[x] for x in supp])
    wb = np.array([p_b.probs[x] for x in supp])
    ts = np.linspace(0.0, 1.0, steps + 1)
    vals = []
    for t in ts:
        w = (1 - t) * wa + t * wb
        pt = step_measure(g, list(zip(supp, w)), check_generates=False)
        vals.append(estimator(pt))
    h = ts[1] - ts[0]
    second = [(vals[i - 1] - 2 * vals[i] + vals[i + 1]) / h ** 2
              for i in range(1, steps)]
    mags = sorted(abs(s) for s in second)
    med = mags[len(mags) // 2]
    flagged = [i for i, s in enumerate(second)
               if abs(s) > threshold_ratio * max(med, 1e-12)]
    return KinkReport(list(ts), vals, second, flagged, threshold_ratio)


def neighborhood_stability(p: StepMeasure, radius: float, n_probes: int,
                           constant_fns: dict, seed: int = 0,
                           floor: float = DEFAULT_SIMPLEX_FLOOR,
                           ratio_bound: float = 2.0) -> dict:
    """Tabulate walk constants over probes near p; assert max/min ratios.

    constant_fns maps a name to a callable p -> float (e.g. the spectral
    estimate, the product-inequality constant, contraction and Hoelder
    rates); each constant's spread over the probe set must stay below the
    ratio bound.
    """
    rng = np.random.default_rng(seed)
    probes = [p] + [perturb_measure(p, rng, radius, floor)
                    for _ in range(n_probes)]
    for q in probes[1:]:
        if projective_distance(p, q) > 4 * radius + 1e-9:
            raise ValueError("probe left the requested neighborhood")
    table = {name: [fn(q) for q in probes] for name, fn in constant_fns.items()}
    ratios = {}
    for name, vals in table.items():
        lo, hi = min(vals), max(vals)
        if lo <= 0:
            raise ArithmeticError(f"constant {name} not positive at a probe")
        ratios[name] = hi / lo
        if hi / lo > ratio_bound:
            raise ArithmeticError(
                f"constant {name} unstable: max/min = {hi / lo:.3f} "
                f"> {ratio_bound}"
            )
    return {"table": table, "ratios": ratios, "radius": radius,
            "n_probes": n_probes}
