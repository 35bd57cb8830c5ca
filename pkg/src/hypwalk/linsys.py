"""Truncated absorbing linear systems for hitting and first-visit quantities.

Walk quantities like u(x, y), restricted hitting probabilities and
first-visit distributions solve sparse linear systems over a finite state
space.  The state space is a "tube": every element within a fixed graph
distance of a geodesic segment.  Transitions leaving the tube are killed,
which yields certified lower bounds; the killed mass is tracked so that
callers can add an escape-return term for upper bounds.

Killing by an explicit domain predicate (paths conditioned to stay inside
a set) is exact and is kept separate from truncation killing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .groups import BallSizeError, Group
from .measures import StepMeasure

DEFAULT_STATE_CAP = 3_000_000


def tube_states(group: Group, centers, radius: int, cap: int = DEFAULT_STATE_CAP):
    """All elements within graph distance `radius` of the center set.

    Multi-source BFS along generator edges; returns (states, depth) with
    BFS order and the distance-to-centers labels.
    """
    states = list(dict.fromkeys(centers))
    depth = {x: 0 for x in states}
    frontier = list(states)
    for d in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for s in group.generators:
                y = group.mul_unchecked(x, s)
                if y not in depth:
                    depth[y] = d
                    nxt.append(y)
                    if len(depth) > cap:
                        raise BallSizeError(
                            f"tube enumeration exceeds cap of {cap} states"
                        )
        frontier = nxt
        states.extend(nxt)
    return states, depth


def _tube_with_edges(group: Group, centers, radius: int, cap: int):
    """Tube BFS that also records the generator-edge table.

    Every neighbor of an in-tube state is either discovered by the BFS (so
    its index is known by the time the state is expanded) or lies outside
    the radius, marked -1.
    """
    gens = list(group.generators)
    states = list(dict.fromkeys(centers))
    index = {x: i for i, x in enumerate(states)}
    depth = {x: 0 for x in states}
    rows = []
    frontier = list(range(len(states)))
    for d in range(1, radius + 2):
        nxt = []
        last = d == radius + 1
        for i in frontier:
            x = states[i]
            row = np.full(len(gens), -1, dtype=np.int64)
            for j, s in enumerate(gens):
                y = group.mul_unchecked(x, s)
                k = index.get(y, -1)
                if k < 0 and not last and d <= radius:
                    k = len(states)
                    states.append(y)
                    index[y] = k
                    depth[y] = d
                    nxt.append(k)
                    if len(states) > cap:
                        raise BallSizeError(
                            f"tube enumeration exceeds cap of {cap} states"
                        )
                row[j] = k
            rows.append(row)
        frontier = nxt
        if last or not frontier:
            break
    # frontier states at the final depth still need their rows
    for i in range(len(rows), len(states)):
        x = states[i]
        row = np.full(len(gens), -1, dtype=np.int64)
        for j, s in enumerate(gens):
            row[j] = index.get(group.mul_unchecked(x, s), -1)
        rows.append(row)
    return states, depth, np.stack(rows, axis=0)


@dataclass
class StateSpace:
    """A finite state set with precomputed one-step transition structure."""

    group: Group
    p: StepMeasure
    states: list
    index: dict
    nbr: np.ndarray          # (n_states, len(F)); -1 marks outside the space
    step_probs: np.ndarray
    depth: np.ndarray        # BFS distance to the generating center set
    _lu_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, p: StepMeasure, states, depth=None):
        group = p.group
        index = {x: i for i, x in enumerate(states)}
        steps = list(p.support.elements)
        probs = np.array([p.probs[s] for s in steps])
        nbr = np.full((len(states), len(steps)), -1, dtype=np.int64)
        for i, x in enumerate(states):
            for j, s in enumerate(steps):
                nbr[i, j] = index.get(group.mul_unchecked(x, s), -1)
        dep = np.zeros(len(states), dtype=np.int64)
        if depth is not None:
            for i, x in enumerate(states):
                dep[i] = depth[x]
        return cls(group, p, states, index, nbr, probs, dep)

    @classmethod
    def tube(cls, p: StepMeasure, centers, radius: int, cap: int = DEFAULT_STATE_CAP):
        group = p.group
        steps = list(p.support.elements)
        gens = list(group.generators)
        if set(steps) <= set(gens):
            # nearest-neighbor support: the BFS edges are the walk edges,
            # so the neighbor table falls out of the enumeration pass
            order = [gens.index(s) for s in steps]
            states, depth, nbr_g = _tube_with_edges(group, centers, radius, cap)
            nbr = nbr_g[:, order]
            probs = np.array([p.probs[s] for s in steps])
            index = {x: i for i, x in enumerate(states)}
            dep = np.fromiter((depth[x] for x in states), dtype=np.int64,
                              count=len(states))
            return cls(group, p, states, index, nbr, probs, dep)
        states, depth = tube_states(group, centers, radius, cap)
        return cls.build(p, states, depth)

    @property
    def size(self) -> int:
        return len(self.states)

    def mask_of(self, predicate) -> np.ndarray:
        return np.fromiter((bool(predicate(x)) for x in self.states),
                           dtype=bool, count=self.size)

    # -- linear systems ------------------------------------------------------

    def _system(self, allowed: np.ndarray, target: np.ndarray):
        """Substochastic matrix Q over allowed states plus absorption data.

        Returns (key, solve_ids, Q, hit_b, trunc_b, absorb) where hit_b is
        the one-step probability of entering the target set, trunc_b the
        one-step probability of leaving the enumerated space (truncation
        kill), and absorb[(w_col)] maps allowed x target entries.
        """
        allowed = allowed & ~target
        ids = np.flatnonzero(allowed)
        pos = -np.ones(self.size, dtype=np.int64)
        pos[ids] = np.arange(ids.size)
        n = ids.size
        rows, cols, vals = [], [], []
        hit_b = np.zeros(n)
        trunc_b = np.zeros(n)
        nbr = self.nbr[ids]
        for j, q in enumerate(self.step_probs):
            dest = nbr[:, j]
            outside = dest < 0
            trunc_b[outside] += q
            inside = ~outside
            d = dest[inside]
            src = np.flatnonzero(inside)
            tgt = target[d]
            hit_b[src[tgt]] += q
            open_ = ~tgt & (pos[d] >= 0)
            rows.append(src[open_])
            cols.append(pos[d[open_]])
            vals.append(np.full(int(open_.sum()), q))
            # transitions into enumerated-but-forbidden states are exact
            # domain kills: they contribute to neither hit nor truncation
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return ids, pos, Q, hit_b, trunc_b

    def _lu(self, allowed: np.ndarray, target: np.ndarray, ids, Q):
        key = (allowed.tobytes(), target.tobytes())
        lu = self._lu_cache.get(key)
        if lu is None:
            A = sp.eye(Q.shape[0], format="csc") - Q.tocsc()
            lu = spla.splu(A)
            if len(self._lu_cache) >= 2:  # factorizations are memory-heavy
                self._lu_cache.pop(next(iter(self._lu_cache)))
            self._lu_cache[key] = lu
        return lu

    def hitting(self, target_mask: np.ndarray, allowed_mask: np.ndarray | None = None):
        """P(hit target before any kill), from every state, plus kill masses.

        Returns (h, esc) as arrays over all states: h is the killed-system
        hitting probability (lower bound for the untruncated quantity) and
        esc the probability of truncation kill.  Target states carry h = 1,
        esc = 0; enumerated states outside the allowed domain carry 0.
        """
        if allowed_mask is None:
            allowed_mask = np.ones(self.size, dtype=bool)
        ids, pos, Q, hit_b, trunc_b = self._system(allowed_mask, target_mask)
        lu = self._lu(allowed_mask, target_mask, ids, Q)
        h_in = lu.solve(hit_b)
        esc_in = lu.solve(trunc_b)
        h = np.zeros(self.size)
        esc = np.zeros(self.size)
        h[ids] = np.clip(h_in, 0.0, 1.0)
        esc[ids] = np.clip(esc_in, 0.0, 1.0)
        h[target_mask] = 1.0
        return h, esc

    def first_visit(self, target_mask: np.ndarray, source,
                    allowed_mask: np.ndarray | None = None):
        """First-visit distribution over target states from one source.

        Returns (dist, esc) where dist maps target state index -> mass.
        A source already in the target visits itself at time 0.
        """
        if allowed_mask is None:
            allowed_mask = np.ones(self.size, dtype=bool)
        si = self.index[source]
        if target_mask[si]:
            return {si: 1.0}, 0.0
        if not allowed_mask[si]:
            raise ValueError("source lies outside the allowed domain")
        ids, pos, Q, hit_b, trunc_b = self._system(allowed_mask, target_mask)
        lu = self._lu(allowed_mask, target_mask, ids, Q)
        e = np.zeros(ids.size)
        e[pos[si]] = 1.0
        y = lu.solve(e, trans="T")
        contrib = np.zeros(self.size)
        nbr = self.nbr[ids]
        for j, q in enumerate(self.step_probs):
            dest = nbr[:, j]
            inside = dest >= 0
            d = dest[inside]
            tgt = target_mask[d]
            src = np.flatnonzero(inside)[tgt]
            np.add.at(contrib, d[tgt], q * y[src])
        dist = {int(w): float(contrib[w]) for w in np.flatnonzero(contrib)}
        esc = float(np.dot(y, trunc_b))
        return dist, esc
