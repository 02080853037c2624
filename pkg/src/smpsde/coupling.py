"""Two solutions driven by one point stream, and the generator of the pair.

Both components read the same ``(u, v)`` points and accept them through the
same layout.  Because same-target intervals share their left end, two
components in a common state jump together on the overlap of their
intervals; components in different states never jump together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .layout import MarkResolution
from .prm import PointStream
from .rates import RateModel
from .solver import DEFAULT_MAX_JUMPS, ExplosionError, Initial, Trajectory, simulate_batch

State = tuple  # (state, age, count)


@dataclass(frozen=True)
class CoupledEvent:
    time: float
    which: str  # "1", "2" or "both"
    state1: int
    state2: int


@dataclass
class CoupledPath:
    first: Trajectory
    second: Trajectory
    events: list[CoupledEvent] = field(default_factory=list)
    meeting_time: float = math.nan
    merge_time: float = math.nan

    @property
    def simultaneous_jumps(self) -> int:
        return sum(1 for e in self.events if e.which == "both")

    @property
    def merged(self) -> bool:
        return not math.isnan(self.merge_time)


def _merged(x1, last1, n1, x2, last2, n2, count_matters):
    return x1 == x2 and last1 == last2 and (n1 == n2 or not count_matters)


def simulate_coupled(
    model: RateModel,
    resolution: MarkResolution,
    stream: PointStream,
    init1: Initial,
    init2: Initial,
    horizon: float,
    *,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> CoupledPath:
    """Offer every point to both components; each accepts through its own state.

    The merge time is the first time both components share state and age
    (and count, when rates depend on it); from then on their acceptance sets
    coincide, so they stay together.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    for z in (init1, init2):
        if not 1 <= z.state <= model.num_states:
            raise ValueError(f"initial state {z.state} outside 1..{model.num_states}")
    origin = stream.cursor
    path = CoupledPath(Trajectory(init1, horizon), Trajectory(init2, horizon))
    x1, last1, n1 = init1.state, -init1.age, init1.count
    x2, last2, n2 = init2.state, -init2.age, init2.count
    count_matters = model.n_dependent
    if x1 == x2:
        path.meeting_time = 0.0
    if _merged(x1, last1, n1, x2, last2, n2, count_matters):
        path.merge_time = 0.0
    resolve = resolution.resolve_mark
    while True:
        u, v = stream.next_point()
        t = u - origin
        if t > horizon:
            return path
        j1 = resolve(x1, t - last1, n1, v)
        j2 = resolve(x2, t - last2, n2, v)
        if j1 is None and j2 is None:
            continue
        if j1 is not None:
            path.first.times.append(t)
            path.first.states.append(j1)
            x1, last1, n1 = j1, t, n1 + 1
        if j2 is not None:
            path.second.times.append(t)
            path.second.states.append(j2)
            x2, last2, n2 = j2, t, n2 + 1
        which = "both" if j1 is not None and j2 is not None else ("1" if j1 is not None else "2")
        path.events.append(CoupledEvent(t, which, x1, x2))
        if math.isnan(path.meeting_time) and x1 == x2:
            path.meeting_time = t
        if math.isnan(path.merge_time) and _merged(x1, last1, n1, x2, last2, n2, count_matters):
            path.merge_time = t
        if len(path.events) > 2 * max_jumps:
            raise ExplosionError(f"more than {max_jumps} jumps per component for model {model.name!r}")


# -- generator ------------------------------------------------------------

FD_STEP = 1e-6


@dataclass(frozen=True)
class TestFunction:
    """Bounded ``phi(z1, z2)`` with ``z = (state, age, count)``.

    ``dy1``/``dy2`` are the age derivatives; when absent a central
    difference with step ``1e-6`` is used (one-sided at age 0).  With
    ``vectorized`` set, ``fn`` accepts arrays in every slot.
    """

    fn: Callable[[State, State], float]
    dy1: Callable[[State, State], float] | None = None
    dy2: Callable[[State, State], float] | None = None
    vectorized: bool = False
    name: str = "phi"

    __test__ = False  # not a pytest class

    def __call__(self, z1, z2):
        return self.fn(z1, z2)

    def d_age1(self, z1, z2) -> float:
        if self.dy1 is not None:
            return float(self.dy1(z1, z2))
        i, y, n = z1
        return _fd(lambda a: float(self.fn((i, a, n), z2)), y)

    def d_age2(self, z1, z2) -> float:
        if self.dy2 is not None:
            return float(self.dy2(z1, z2))
        i, y, n = z2
        return _fd(lambda a: float(self.fn(z1, (i, a, n))), y)

    def evaluate_many(self, x1, y1, n1, x2, y2, n2) -> np.ndarray:
        if self.vectorized:
            out = self.fn((x1, y1, n1), (x2, y2, n2))
            return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x1)).astype(float)
        return np.array(
            [float(self.fn((int(a), float(b), int(c)), (int(d), float(e), int(f))))
             for a, b, c, d, e, f in zip(x1, y1, n1, x2, y2, n2)]
        )


def _fd(g, y, h=FD_STEP):
    if y >= h:
        return (g(y + h) - g(y - h)) / (2 * h)
    return (g(y + h) - g(y)) / h


def jump_coefficients(model: RateModel, z1: State, z2: State) -> dict:
    """Rates of the three kinds of jump of the pair out of ``(z1, z2)``.

    Returns ``{"first": {j: rate}, "second": {j: rate}, "both": {j: rate}}``:
    first alone to ``j``, second alone to ``j``, and both together to ``j``.
    """
    (i1, y1, n1), (i2, y2, n2) = z1, z2
    same = i1 == i2
    first, second, both = {}, {}, {}
    for j in model.states:
        if j != i1:
            a = float(model.rate(i1, j, y1, n1))
            b = float(model.rate(i2, j, y2, n2)) if same else 0.0
            first[j] = max(a - b, 0.0)
        if j != i2:
            b = float(model.rate(i2, j, y2, n2))
            a = float(model.rate(i1, j, y1, n1)) if same else 0.0
            second[j] = max(b - a, 0.0)
        if same and j != i1:
            both[j] = min(float(model.rate(i1, j, y1, n1)), float(model.rate(i2, j, y2, n2)))
    return {"first": first, "second": second, "both": both}


def generator_apply(model: RateModel, phi: TestFunction, z1: State, z2: State) -> float:
    """Infinitesimal generator of the coupled pair applied to ``phi`` at ``(z1, z2)``."""
    (i1, y1, n1), (i2, y2, n2) = z1, z2
    base = float(phi(z1, z2))
    coef = jump_coefficients(model, z1, z2)
    total = phi.d_age1(z1, z2) + phi.d_age2(z1, z2)
    for j, r in coef["first"].items():
        if r:
            total += r * (float(phi((j, 0.0, n1 + 1), z2)) - base)
    for j, r in coef["second"].items():
        if r:
            total += r * (float(phi(z1, (j, 0.0, n2 + 1))) - base)
    for j, r in coef["both"].items():
        if r:
            total += r * (float(phi((j, 0.0, n1 + 1), (j, 0.0, n2 + 1))) - base)
    return total


def marginal_generator(model: RateModel, psi: Callable[[State], float], z: State, dpsi=None) -> float:
    """Generator of one solution alone: age drift plus ``lambda_ij`` jumps to ``(j, 0, n + 1)``."""
    i, y, n = z
    drift = dpsi(z) if dpsi is not None else _fd(lambda a: float(psi((i, a, n))), y)
    base = float(psi(z))
    return drift + sum(
        float(model.rate(i, j, y, n)) * (float(psi((j, 0.0, n + 1))) - base) for j in model.states if j != i
    )


@dataclass(frozen=True)
class DynkinResult:
    residual: float
    stderr: float
    mean_increment: float
    generator: float
    h: float
    reps: int


def dynkin_residual(
    model: RateModel,
    resolution: MarkResolution,
    phi: TestFunction,
    z1: State,
    z2: State,
    h: float,
    reps: int,
    stream: PointStream,
    *,
    threads: int = 1,
) -> DynkinResult:
    """Monte Carlo ``(E phi(Z_h) - phi(z0)) / h - A phi(z0)`` with its standard error."""
    return dynkin_residuals(model, resolution, [phi], z1, z2, h, reps, stream, threads=threads)[0]


def dynkin_residuals(
    model: RateModel,
    resolution: MarkResolution,
    phis: Sequence[TestFunction],
    z1: State,
    z2: State,
    h: float,
    reps: int,
    stream: PointStream,
    *,
    threads: int = 1,
) -> list[DynkinResult]:
    """:func:`dynkin_residual` for several test functions on one set of coupled paths."""
    if not h > 0 or reps < 1:
        raise ValueError("need h > 0 and reps >= 1")
    init = [Initial(int(z1[0]), float(z1[1]), int(z1[2])), Initial(int(z2[0]), float(z2[1]), int(z2[2]))]
    batch = simulate_batch(resolution, stream, init, reps, h, threads=threads)
    age = batch.final_age
    xs, ns = batch.final_state, batch.final_count
    out = []
    for phi in phis:
        start = float(phi(tuple(z1), tuple(z2)))
        vals = phi.evaluate_many(xs[:, 0], age[:, 0], ns[:, 0], xs[:, 1], age[:, 1], ns[:, 1])
        incr = (vals - start) / h
        mean = float(incr.mean())
        se = float(incr.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
        gen = generator_apply(model, phi, tuple(z1), tuple(z2))
        out.append(DynkinResult(mean - gen, se, mean, gen, h, reps))
    return out


# -- meeting / merging ----------------------------------------------------


def meeting_stats(paths: Sequence[CoupledPath]) -> dict:
    """Summary of meeting (same state) and merging (same state, age, count) times."""
    if not paths:
        raise ValueError("meeting_stats needs at least one path")
    meet = np.array([p.meeting_time for p in paths])
    merge = np.array([p.merge_time for p in paths])
    simult = np.array([p.simultaneous_jumps for p in paths])
    first_jump = []
    for p in paths:
        firsts = [tr.times[0] for tr in (p.first, p.second) if tr.times]
        first_jump.append(min(firsts) if firsts else math.nan)
    first_jump = np.array(first_jump)
    at_first = np.sum((merge == first_jump) | (merge == 0.0))

    def describe(a):
        ok = a[~np.isnan(a)]
        if not ok.size:
            return {"count": 0, "fraction": 0.0}
        return {
            "count": int(ok.size),
            "fraction": ok.size / a.size,
            "mean": float(ok.mean()),
            "min": float(ok.min()),
            "median": float(np.median(ok)),
            "max": float(ok.max()),
        }

    return {
        "paths": len(paths),
        "meeting": describe(meet),
        "merge": describe(merge),
        "merged_by_first_jump": int(at_first),
        "simultaneous_jumps": {"total": int(simult.sum()), "paths_with_any": int((simult > 0).sum())},
    }
