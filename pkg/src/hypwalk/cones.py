"""Hilbert projective metric on finite nonnegative cones.

Working in the cone of nonnegative vectors over a finite index set V,

    tau(f, g) = inf{s > 0 : s f - g >= 0} = max_{g_i > 0} g_i / f_i
    theta(f, g) = ln[tau(f, g) tau(g, f)]

with +inf when supports are not nested.  A positive operator contracts
theta with Birkhoff ratio tanh(diam/4) where diam is the projective
diameter of its image; for a nonnegative matrix the image diameter is
attained on column pairs (columns are the extreme rays).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class ConeVector:
    """Nonnegative vector over an ordered finite index set, with a t-norm."""

    entries: np.ndarray
    t: float = 2.0
    index_set: tuple | None = None

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", arr)
        if arr.ndim != 1:
            raise ValueError("cone vectors are one-dimensional")
        if (arr < 0).any():
            raise ValueError("cone vectors must be nonnegative")
        if self.t < 1:
            raise ValueError("norm exponent t must be >= 1")
        if self.index_set is not None and len(self.index_set) != arr.size:
            raise ValueError("index set size mismatch")

    def norm(self) -> float:
        return float(np.sum(self.entries ** self.t) ** (1.0 / self.t))

    def normalized(self) -> "ConeVector":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return ConeVector(self.entries / n, self.t, self.index_set)

    def is_zero(self) -> bool:
        return not (self.entries > 0).any()


def _compatible(f: ConeVector, g: ConeVector) -> None:
    if f.entries.size != g.entries.size:
        raise ValueError("mismatched index sets")
    if (f.index_set is not None and g.index_set is not None
            and f.index_set != g.index_set):
        raise ValueError("mismatched index sets")


def tau(f: ConeVector, g: ConeVector) -> float:
    """Smallest s with s*f - g in the cone; +inf if f vanishes where g > 0."""
    _compatible(f, g)
    if f.is_zero():
        raise ValueError("tau requires a nonzero first argument")
    mask = g.entries > 0
    if not mask.any():
        return 0.0
    if (f.entries[mask] == 0).any():
        return math.inf
    return float(np.max(g.entries[mask] / f.entries[mask]))


def theta(f: ConeVector, g: ConeVector) -> float:
    """Projective distance between the rays of f and g (may be +inf)."""
    a = tau(f, g)
    b = tau(g, f)
    if math.isinf(a) or math.isinf(b):
        return math.inf
    if a == 0.0 or b == 0.0:
        raise ValueError("theta is undefined against the zero vector")
    return math.log(a * b)


def theta_arrays(f: np.ndarray, g: np.ndarray) -> float:
    """theta on raw arrays (shared positivity pattern assumed checked)."""
    return theta(ConeVector(f), ConeVector(g))


def birkhoff_beta(diam: float) -> float:
    """Birkhoff contraction ratio tanh(diam/4); equals 1 at diam = +inf."""
    if diam < 0:
        raise ValueError("projective diameter must be >= 0")
    if math.isinf(diam):
        return 1.0
    return math.tanh(diam / 4.0)


@dataclass
class PositiveOperator:
    """Nonnegative matrix acting on cone vectors, columns -> rows."""

    matrix: np.ndarray
    diameter_certificate: float | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("operator must be a matrix")
        if (self.matrix < 0).any():
            raise ValueError("operator must be nonnegative")

    def apply(self, f: ConeVector) -> ConeVector:
        if f.entries.size != self.matrix.shape[1]:
            raise ValueError("dimension mismatch")
        return ConeVector(self.matrix @ f.entries, f.t)


def operator_diameter(A: PositiveOperator, n_samples: int = 0,
                      seed: int = 0) -> float:
    """Projective diameter of the image cone of a nonnegative matrix.

    The exact value is the max of theta over pairs of (nonzero) columns,
    since columns are the extreme rays of the image.  Random sampled pairs
    of images, when requested, provide an independent lower bound which is
    folded in (it can only confirm the column bound).
    """
    M = A.matrix
    cols = [M[:, j] for j in range(M.shape[1]) if (M[:, j] > 0).any()]
    if not cols:
        raise ValueError("degenerate operator: no nonzero columns")
    if not np.any(np.stack(cols, axis=1) > 0, axis=1).all():
        raise ValueError("degenerate operator: a row vanishes on every active column")
    best = 0.0
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            d = theta_arrays(cols[i], cols[j])
            if d > best:
                best = d
                if math.isinf(best):
                    A.diameter_certificate = best
                    return best
    if n_samples > 0:
        rng = np.random.default_rng(seed)
        k = M.shape[1]
        for _ in range(n_samples):
            f = rng.random(k)
            g = rng.random(k)
            d = theta_arrays(M @ f, M @ g)
            if d > best:
                best = d
    A.diameter_certificate = best
    return best


def liverani_gap(f: ConeVector, g: ConeVector) -> tuple:
    """Both sides of the norm-gap bound ||f-g||_t <= (e^theta - 1)||f||_t.

    Requires ||f||_t = ||g||_t (up to 1e-12).
    """
    _compatible(f, g)
    nf, ng = f.norm(), g.norm()
    if abs(nf - ng) > NORM_MATCH_TOL * max(nf, ng, 1.0):
        raise ValueError(f"norms differ: {nf} vs {ng}")
    th = theta(f, g)
    lhs = float(np.sum(np.abs(f.entries - g.entries) ** f.t) ** (1.0 / f.t))
    rhs = math.inf if math.isinf(th) else (math.exp(th) - 1.0) * nf
    if lhs > rhs * (1 + 1e-12) + 1e-15:
        raise AssertionError(f"norm-gap inequality violated: {lhs} > {rhs}")
    return lhs, rhs
