"""Mark-interval layout: which marks trigger which jump at a given age and count.

Ordered pairs ``(i, j)``, ``i != j``, are laid out lexicographically on the
mark axis.  Pair ``(i, j)`` owns a slot of width equal to its sup-norm
starting at the sum of the sup-norms of all earlier pairs; its live
interval ``[a, a + lambda_ij(y, n))`` sits at the left edge of the slot.
Because slot positions do not move with ``(y, n)``, two paths in the same
state overlap on ``min`` of their two rates for every target.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .rates import RateModel


@dataclass(frozen=True)
class Interval:
    """Half-open ``[lo, lo + length)``; the length is stored, not recomputed."""

    lo: float
    length: float

    @property
    def hi(self) -> float:
        return self.lo + self.length

    @property
    def empty(self) -> bool:
        return self.length <= 0.0

    def __contains__(self, v: float) -> bool:
        return self.lo <= v < self.hi


class MarkResolution:
    """Interval layout for ``model`` with slack fixed at the sup-norms."""

    tilde_mode = "sup_norm"

    def __init__(self, model: RateModel):
        self.model = model
        K = model.num_states
        if K < 2:
            raise ValueError("a layout needs at least two states")
        self.pair_order: tuple[tuple[int, int], ...] = tuple(
            (i, j) for i in range(1, K + 1) for j in range(1, K + 1) if i != j
        )
        sups = np.array([model.sup_norms[i - 1, j - 1] for i, j in self.pair_order])
        offs = np.concatenate([[0.0], np.cumsum(sups)[:-1]])
        self.offsets = {p: float(o) for p, o in zip(self.pair_order, offs)}
        self.strip_height = float(sups.sum())
        # C_i = c_i + sum of c_k over earlier states, i.e. the end of row i's slots
        ends = offs + sups
        self.row_start = tuple(float(offs[(i - 1) * (K - 1)]) if K > 1 else 0.0 for i in model.states)
        self.containment = tuple(float(ends[i * (K - 1) - 1]) if K > 1 else 0.0 for i in model.states)

        # per-row lookup tables for the scalar hot path
        self._rows = {}
        for i in model.states:
            pairs = [(j, self.offsets[(i, j)], model.shape(i, j)) for j in model.states if j != i]
            self._rows[i] = (
                [p[1] for p in pairs],
                [p[0] for p in pairs],
                [p[2] for p in pairs],
                self.row_start[i - 1],
                self.containment[i - 1],
            )
        # flat tables for the vectorized path
        self._flat_lo = offs
        self._flat_src = np.array([p[0] for p in self.pair_order])
        self._flat_tgt = np.array([p[1] for p in self.pair_order])

    def __repr__(self):
        return f"MarkResolution({self.model!r}, strip_height={self.strip_height})"

    # -- interval queries --------------------------------------------------

    def interval_of(self, i: int, j: int, y: float, n: int) -> Interval:
        if i == j:
            raise ValueError("no interval for i == j")
        a = self.offsets[(i, j)]
        return Interval(a, float(self.model.rate(i, j, y, n)))

    def resolve_mark(self, i: int, y: float, n: int, v: float) -> int | None:
        """Target state whose interval contains ``v``, or ``None`` for no jump."""
        offs, targets, shapes, lo, hi = self._rows[i]
        if v < lo or v >= hi:
            return None
        k = bisect.bisect_right(offs, v) - 1
        if k < 0:
            return None
        if v < offs[k] + float(shapes[k](y, n)):
            return targets[k]
        return None

    def resolve_marks(self, x, y, n, v) -> np.ndarray:
        """Vectorized :meth:`resolve_mark`; ``0`` encodes no jump."""
        x = np.asarray(x)
        v = np.asarray(v, dtype=float)
        out = np.zeros(x.shape, dtype=np.int64)
        if x.size == 0:
            return out
        slot = np.searchsorted(self._flat_lo, v, side="right") - 1
        np.clip(slot, 0, len(self.pair_order) - 1, out=slot)
        cand = self._flat_src[slot] == x
        if not cand.any():
            return out
        y = np.broadcast_to(np.asarray(y, dtype=float), x.shape)
        n = np.broadcast_to(np.asarray(n), x.shape)
        idx = np.flatnonzero(cand)
        slots = slot[idx]
        width = np.empty(idx.size)
        for s in np.unique(slots):
            m = slots == s
            i, j = self.pair_order[s]
            width[m] = self.model.shape(i, j)(y[idx[m]], n[idx[m]])
        hit = v[idx] < self._flat_lo[slots] + width
        out[idx[hit]] = self._flat_tgt[slots[hit]]
        return out

    def h_lambda(self, i: int, y: float, n: int, v: float) -> int:
        """Jump size ``sum_j (j - i) 1[v in Lambda_ij(y, n)]``, evaluated literally."""
        return sum((j - i) for j in self.model.states if j != i and v in self.interval_of(i, j, y, n))

    def g_lambda(self, i: int, y: float, n: int, v: float) -> int:
        """Jump indicator ``sum_j 1[v in Lambda_ij(y, n)]``, evaluated literally."""
        return sum(1 for j in self.model.states if j != i and v in self.interval_of(i, j, y, n))

    def overlap_lengths(self, i: int, y1: float, n1: int, y2: float, n2: int) -> dict[int, tuple[float, float, float]]:
        """Per target ``j``: lengths of (only first, only second, both) intervals."""
        out = {}
        for j in self.model.states:
            if j == i:
                continue
            a = float(self.model.rate(i, j, y1, n1))
            b = float(self.model.rate(i, j, y2, n2))
            out[j] = (max(a - b, 0.0), max(b - a, 0.0), min(a, b))
        return out


def check_layout(res: MarkResolution, samples: int = 10_000, *, seed: int = 0, y_max: float = 10.0, n_max: int = 10) -> dict:
    """Randomized audit of the layout invariants.

    Returns violation counts for disjointness, length, containment and the
    common-left-endpoint overlap identity, plus the number of checks run.
    """
    model = res.model
    rng = np.random.default_rng(seed)
    ys = rng.uniform(0.0, y_max, size=(samples, 2))
    ns = rng.integers(0, n_max + 1, size=(samples, 2))
    counts = {"disjoint": 0, "length": 0, "containment": 0, "overlap": 0, "checks": 0}
    pairs = res.pair_order
    for (y1, y2), (n1, n2) in zip(ys, ns):
        y1, y2, n1, n2 = float(y1), float(y2), int(n1), int(n2)
        ivs = [res.interval_of(i, j, y1, n1) for i, j in pairs]
        live = sorted((iv for iv in ivs if not iv.empty), key=lambda iv: iv.lo)
        counts["disjoint"] += sum(1 for a, b in zip(live, live[1:]) if b.lo < a.hi)
        for (i, j), iv in zip(pairs, ivs):
            counts["checks"] += 1
            if iv.length != float(model.rate(i, j, y1, n1)):
                counts["length"] += 1
            cap = res.containment[i - 1]
            if not iv.empty and (iv.lo < 0 or iv.hi > cap or cap > res.strip_height):
                counts["containment"] += 1
            other = res.interval_of(i, j, y2, n2)
            # with a shared left end the intersection is [lo, lo + min length)
            if other.lo != iv.lo or min(iv.hi, other.hi) != iv.lo + min(iv.length, other.length):
                counts["overlap"] += 1
    counts["violations"] = counts["disjoint"] + counts["length"] + counts["containment"] + counts["overlap"]
    return counts
