"""Concrete finitely generated groups with exact word metric.

Three families are shipped, each with unique normal forms so that equality,
inversion and multiplication are exact:

* the integer line ``Z`` with generating set {+1, -1} (elements are ints),
* free groups ``F_k`` (elements are reduced words, letters ``+i``/``-i``
  for the i-th generator and its inverse),
* free products ``Z_m * Z_n`` of two finite cyclic groups (elements are
  alternating syllable words ``(factor, exponent)``); the word metric is
  taken with respect to all nontrivial powers of the two generators, so
  every syllable is a single step and geodesics are syllable-wise.

All metric quantities (distance, Gromov products, balls, the four-point
hyperbolicity constant) derive from the normal forms.  Elements are plain
hashable Python values; the group object carries the family context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BALL_CAP = 2_000_000


class FamilyMismatchError(ValueError):
    """An element does not belong to this group family."""


class BallSizeError(RuntimeError):
    """A requested enumeration exceeds the configured element cap."""


@dataclass(frozen=True)
class SupportSet:
    """A finite generating support F together with its step radius.

    The step radius is ``r = max(max |x| for x in F, ceil(delta))`` and is
    the scale entering obstacle geometry.
    """

    group: "Group"
    elements: tuple
    radius: int

    @property
    def size(self) -> int:
        return len(self.elements)


class Group:
    """Base class: one instance per concrete group family."""

    name = "group"
    #: four-point hyperbolicity constant of the family (exact for trees/line,
    #: frozen from an exhaustive quadruple scan for free products)
    delta: float = 0.0
    #: True when the family is nonamenable (convolution operator norm < 1)
    nonamenable: bool = False

    # -- normal forms -------------------------------------------------------

    @property
    def identity(self):
        raise NotImplementedError

    @property
    def generators(self) -> tuple:
        """Ordered symmetric generating set S (fixes shortlex ties)."""
        raise NotImplementedError

    def check_element(self, x) -> None:
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def mul_unchecked(self, a, b):
        """mul without operand validation, for enumeration hot loops over
        elements that are valid by construction."""
        return self.mul(a, b)

    def inv(self, x):
        raise NotImplementedError

    def length(self, x) -> int:
        """Word length |x| with respect to S."""
        raise NotImplementedError

    def letters(self, x) -> tuple:
        """Canonical geodesic spelling of x as subshift letters (see
        :meth:`letter_alphabet`)."""
        raise NotImplementedError

    def from_letters(self, letters: Iterable):
        """Inverse of :meth:`letters` on admissible words."""
        raise NotImplementedError

    def letter_alphabet(self) -> tuple:
        """Alphabet used by letters()/the boundary subshift."""
        raise NotImplementedError

    def letter_element(self, letter):
        """The generator element a single letter stands for."""
        raise NotImplementedError

    def letter_allowed(self, a, b) -> bool:
        """Whether letter b may follow letter a in a geodesic word."""
        raise NotImplementedError

    # -- derived metric quantities ------------------------------------------

    def dist(self, x, y) -> int:
        return self.length(self.mul(self.inv(x), y))

    def gromov_product(self, x, y, base=None) -> Fraction:
        """Gromov product: half of d(x,base)+d(y,base)-d(x,y), exact."""
        if base is None:
            base = self.identity
        for z in (x, y, base):
            self.check_element(z)
        return Fraction(self.dist(x, base) + self.dist(y, base) - self.dist(x, y), 2)

    def geodesic_word(self, x) -> list:
        """A geodesic spelling of x of length |x|, as generator elements.

        Normal forms of the shipped families are geodesic and unique once
        the generator order is fixed, so shortlex tie-breaking is implicit.
        """
        self.check_element(x)
        return [self.letter_element(a) for a in self.letters(x)]

    def ball(self, radius: int, cap: int = DEFAULT_BALL_CAP) -> list:
        """All elements with |x| <= radius, BFS order (identity first)."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        out = [self.identity]
        seen = {self.identity}
        frontier = [self.identity]
        for _ in range(radius):
            nxt = []
            for x in frontier:
                for s in self.generators:
                    y = self.mul_unchecked(x, s)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
                        if len(seen) > cap:
                            raise BallSizeError(
                                f"ball enumeration exceeds cap of {cap} elements"
                            )
            frontier = nxt
            out.extend(nxt)
        return out

    def sphere_size(self, radius: int) -> int:
        """Closed-form cardinality of {x : |x| = radius}."""
        raise NotImplementedError

    def estimate_delta(self, radius: int, cap: int = DEFAULT_BALL_CAP) -> Fraction:
        """Smallest delta making the four-point inequality hold on ball(radius).

        Scans all quadruples (x, y, z, w); the result is a half-integer and
        is nondecreasing in the radius.
        """
        pts = self.ball(radius, cap=cap)
        n = len(pts)
        dmat = np.zeros((n, n), dtype=np.int64)
        for i, x in enumerate(pts):
            xi = self.inv(x)
            for j in range(i + 1, n):
                d = self.length(self.mul(xi, pts[j]))
                dmat[i, j] = d
                dmat[j, i] = d
        # work with doubled Gromov products to stay integral
        worst = 0
        for w in range(n):
            gp = dmat[w, :][None, :] + dmat[:, w][:, None] - dmat  # 2*(x|y)_w
            maxmin = np.minimum(gp[:, :, None], gp[None, :, :]).max(axis=1)
            worst = max(worst, int((maxmin - gp).max()))
        return Fraction(worst, 2)

    def support_set(self, elements: Sequence, *, check_generates: bool = True,
                    gen_depth: int = 4, gen_radius: int = 2) -> SupportSet:
        """Bundle a finite support F with its step radius.

        When ``check_generates`` is set, verifies that the union of F^n for
        n <= gen_depth covers ball(gen_radius).
        """
        elems = []
        for x in elements:
            self.check_element(x)
            elems.append(x)
        if len(set(elems)) != len(elems):
            raise ValueError("support contains repeated elements")
        r = max(max(self.length(x) for x in elems), int(np.ceil(self.delta)))
        if check_generates:
            reach = {self.identity}
            frontier = {self.identity}
            for _ in range(gen_depth):
                frontier = {self.mul(x, f) for x in frontier for f in elems}
                reach |= frontier
            target = set(self.ball(gen_radius))
            if not target <= reach:
                raise ValueError(
                    f"support does not generate ball({gen_radius}) within "
                    f"{gen_depth} steps"
                )
        return SupportSet(self, tuple(elems), r)


class IntegerLine(Group):
    """Z with S = {+1, -1}; elements are plain ints."""

    name = "Z"
    delta = 0.0
    nonamenable = False

    @property
    def identity(self):
        return 0

    @property
    def generators(self):
        return (1, -1)

    def check_element(self, x):
        if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
            raise FamilyMismatchError(f"{x!r} is not an element of Z")

    def mul(self, a, b):
        self.check_element(a)
        self.check_element(b)
        return int(a) + int(b)

    def mul_unchecked(self, a, b):
        return a + b

    def inv(self, x):
        self.check_element(x)
        return -int(x)

    def length(self, x):
        self.check_element(x)
        return abs(int(x))

    def letters(self, x):
        self.check_element(x)
        s = 1 if x > 0 else -1
        return (s,) * abs(int(x))

    def from_letters(self, letters):
        return sum(letters)

    def letter_alphabet(self):
        return (1, -1)

    def letter_element(self, letter):
        return letter

    def letter_allowed(self, a, b):
        return a == b  # geodesics never change sign

    def sphere_size(self, radius):
        return 1 if radius == 0 else 2


class FreeGroup(Group):
    """Free group F_k; elements are reduced words over letters +-1..+-k."""

    name_prefix = "F"
    delta = 0.0
    nonamenable = True

    def __init__(self, rank: int, generator_order: Sequence[int] | None = None):
        if rank < 2:
            raise ValueError("free group rank must be >= 2")
        self.rank = rank
        self.name = f"F{rank}"
        if generator_order is None:
            generator_order = [s for i in range(1, rank + 1) for s in (i, -i)]
        order = tuple(int(s) for s in generator_order)
        if sorted(order) != sorted([s for i in range(1, rank + 1) for s in (i, -i)]):
            raise ValueError("generator_order must list each of +-1..+-k once")
        self._order = order

    @property
    def identity(self):
        return ()

    @property
    def generators(self):
        return tuple((s,) for s in self._order)

    def check_element(self, x):
        if not isinstance(x, tuple):
            raise FamilyMismatchError(f"{x!r} is not an element of {self.name}")
        prev = 0
        for a in x:
            if not isinstance(a, int) or a == 0 or abs(a) > self.rank:
                raise FamilyMismatchError(f"letter {a!r} not in alphabet of {self.name}")
            if a == -prev:
                raise FamilyMismatchError(f"{x!r} is not reduced")
            prev = a

    def mul(self, a, b):
        self.check_element(a)
        self.check_element(b)
        return self.mul_unchecked(a, b)

    def mul_unchecked(self, a, b):
        la = list(a)
        i = 0
        while la and i < len(b) and la[-1] == -b[i]:
            la.pop()
            i += 1
        return tuple(la) + tuple(b[i:])

    def inv(self, x):
        self.check_element(x)
        return tuple(-a for a in reversed(x))

    def length(self, x):
        self.check_element(x)
        return len(x)

    def letters(self, x):
        self.check_element(x)
        return tuple(x)

    def from_letters(self, letters):
        w = tuple(letters)
        self.check_element(w)
        return w

    def letter_alphabet(self):
        return self._order

    def letter_element(self, letter):
        return (letter,)

    def letter_allowed(self, a, b):
        return b != -a

    def sphere_size(self, radius):
        if radius == 0:
            return 1
        k = self.rank
        return 2 * k * (2 * k - 1) ** (radius - 1)


class FreeProduct(Group):
    """Free product Z_m * Z_n of two finite cyclic groups.

    Elements are alternating syllable words ``((factor, exp), ...)`` with
    factor 0 of order m, factor 1 of order n and 1 <= exp < order.  The
    generating set is every nontrivial power of the two generators, so the
    word length is the syllable count.
    """

    nonamenable = True

    def __init__(self, m: int, n: int):
        if m < 2 or n < 2:
            raise ValueError("cyclic factor orders must be >= 2")
        self.orders = (m, n)
        self.name = f"Z{m}*Z{n}"
        self.nonamenable = m * n >= 6
        self._delta = None

    @property
    def delta(self):
        # cached quadruple scan at R=4; the syllable metric is clique-tree
        # like and the scan gives 0 (regression-tested)
        if self._delta is None:
            self._delta = float(self.estimate_delta(4))
        return self._delta

    @property
    def identity(self):
        return ()

    @property
    def generators(self):
        gens = []
        for f, order in enumerate(self.orders):
            for e in range(1, order):
                gens.append(((f, e),))
        return tuple(gens)

    def check_element(self, x):
        if not isinstance(x, tuple):
            raise FamilyMismatchError(f"{x!r} is not an element of {self.name}")
        prev = -1
        for syl in x:
            if (not isinstance(syl, tuple) or len(syl) != 2
                    or syl[0] not in (0, 1)
                    or not 1 <= syl[1] < self.orders[syl[0]]):
                raise FamilyMismatchError(f"syllable {syl!r} invalid in {self.name}")
            if syl[0] == prev:
                raise FamilyMismatchError(f"{x!r} is not alternating")
            prev = syl[0]

    def mul(self, a, b):
        self.check_element(a)
        self.check_element(b)
        return self.mul_unchecked(a, b)

    def mul_unchecked(self, a, b):
        la = list(a)
        i = 0
        while la and i < len(b) and la[-1][0] == b[i][0]:
            f = la[-1][0]
            e = (la[-1][1] + b[i][1]) % self.orders[f]
            la.pop()
            i += 1
            if e:
                la.append((f, e))
                break
        return tuple(la) + tuple(b[i:])

    def inv(self, x):
        self.check_element(x)
        return tuple((f, self.orders[f] - e) for f, e in reversed(x))

    def length(self, x):
        self.check_element(x)
        return len(x)

    def letters(self, x):
        self.check_element(x)
        return tuple(x)

    def from_letters(self, letters):
        w = tuple(letters)
        self.check_element(w)
        return w

    def letter_alphabet(self):
        return tuple(syl for (syl,) in self.generators)

    def letter_element(self, letter):
        return (letter,)

    def letter_allowed(self, a, b):
        return a[0] != b[0]

    def sphere_size(self, radius):
        if radius == 0:
            return 1
        m, n = self.orders
        # alternating words counted by their last factor
        ea, eb = m - 1, n - 1
        for _ in range(radius - 1):
            ea, eb = eb * (m - 1), ea * (n - 1)
        return ea + eb


def make_group(kind: str, **params) -> Group:
    """Factory used by config loading: kind in {integer-line, free, free-product}."""
    if kind == "integer-line":
        return IntegerLine()
    if kind == "free":
        return FreeGroup(int(params["rank"]),
                         generator_order=params.get("generator_order"))
    if kind == "free-product":
        return FreeProduct(int(params["m"]), int(params["n"]))
    raise ValueError(f"unknown group kind {kind!r}")
