"""Path-wise construction of the strong solution ``(X, Y, N)``.

Points of the Poisson stream are scanned in time order.  A point ``(u, v)``
is a jump of the path exactly when ``v`` lands in the interval of the
current state at the current age ``u - T_last`` and count; the path then
moves to that interval's target, its age resets to zero and its count goes
up by one.  Every other point leaves the path untouched.

Two engines implement this scan:

* :func:`simulate_path` follows one path point by point and returns a full
  :class:`Trajectory`.
* :func:`run_lockstep` advances many independent paths (each optionally a
  coupled pair) one point per path per step with numpy, for the large
  replication counts used by the statistical suites.
"""

from __future__ import annotations

import bisect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .layout import MarkResolution
from .prm import PointStream
from .rates import RateModel

DEFAULT_MAX_JUMPS = 10_000_000


class ExplosionError(RuntimeError):
    """Jump-count circuit breaker tripped; the rate model is not bounded as declared."""


@dataclass(frozen=True)
class Initial:
    state: int
    age: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.age < 0:
            raise ValueError("initial age must be nonnegative")
        if self.count < 0:
            raise ValueError("initial count must be nonnegative")


@dataclass(frozen=True)
class Sojourn:
    state: int
    count: int
    start_age: float
    duration: float
    censored: bool


@dataclass
class Trajectory:
    """Jump times ``T_1 < T_2 < ...`` and the states entered at them.

    ``T_0 = -Y_0``: the path is taken to have entered its initial state
    ``initial.age`` time units before the clock starts.
    """

    initial: Initial
    horizon: float
    times: list[float] = field(default_factory=list)
    states: list[int] = field(default_factory=list)
    sampler: str = "prm"

    @property
    def num_jumps(self) -> int:
        return len(self.times)

    def jump_time(self, k: int) -> float:
        """``T_k``; ``T_0`` is ``-Y_0``."""
        return -self.initial.age if k == 0 else self.times[k - 1]

    def state_at(self, t: float) -> tuple[int, float, int]:
        """Right-continuous ``(X_t, Y_t, N_t)``; ``N_t`` includes the initial count."""
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t!r} outside [0, {self.horizon!r}]")
        k = bisect.bisect_right(self.times, t)
        x = self.states[k - 1] if k else self.initial.state
        return x, t - self.jump_time(k), self.initial.count + k

    def sojourns(self) -> list[Sojourn]:
        out = []
        prev = self.initial.state
        for k in range(self.num_jumps + 1):
            start = self.jump_time(k)
            censored = k == self.num_jumps
            end = self.horizon if censored else self.times[k]
            out.append(
                Sojourn(
                    state=prev,
                    count=self.initial.count + k,
                    start_age=self.initial.age if k == 0 else 0.0,
                    duration=end - start,
                    censored=censored,
                )
            )
            if not censored:
                prev = self.states[k]
        return out


def simulate_path(
    model: RateModel,
    resolution: MarkResolution,
    stream: PointStream,
    initial: Initial,
    horizon: float,
    *,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> Trajectory:
    """Scan ``stream`` up to ``horizon`` and build the path started at ``initial``.

    Stream times are measured from the stream's cursor at call time, so a
    fresh stream starts the clock at zero.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not 1 <= initial.state <= model.num_states:
        raise ValueError(f"initial state {initial.state} outside 1..{model.num_states}")
    origin = stream.cursor
    traj = Trajectory(initial, horizon)
    x = initial.state
    last = -initial.age
    n = initial.count
    resolve = resolution.resolve_mark
    while True:
        u, v = stream.next_point()
        t = u - origin
        if t > horizon:
            return traj
        j = resolve(x, t - last, n, v)
        if j is None:
            continue
        traj.times.append(t)
        traj.states.append(j)
        x, last, n = j, t, n + 1
        if len(traj.times) > max_jumps:
            raise ExplosionError(
                f"more than {max_jumps} jumps before t={t:.6g} for model {model.name!r}"
            )


def holding_time_samples(
    model: RateModel,
    resolution: MarkResolution,
    i: int,
    n: int,
    num_samples: int,
    stream: PointStream,
    *,
    with_targets: bool = False,
):
    """Independent sojourns in state ``i`` at count ``n``, each started at age 0.

    Consecutive sojourns reuse the stream from the previous acceptance; the
    Poisson measure on disjoint time sets is independent, so they are i.i.d.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be at least 1")
    durations = np.empty(num_samples)
    targets = np.empty(num_samples, dtype=np.int64)
    resolve = resolution.resolve_mark
    start = stream.cursor
    k = 0
    while k < num_samples:
        u, v = stream.next_point()
        j = resolve(i, u - start, n, v)
        if j is None:
            continue
        durations[k] = u - start
        targets[k] = j
        start = u
        k += 1
    return (durations, targets) if with_targets else durations


# -- lockstep engine -------------------------------------------------------


@dataclass
class BatchResult:
    """Outcome of :func:`run_lockstep` for ``reps`` replications of ``comps`` components.

    ``jump_times[r, c, k]`` is ``T_{k+1}`` of component ``c`` in replication
    ``r`` (NaN when fewer jumps happened) and ``jump_states`` the state it
    entered (0 when absent).  ``final_*`` describe the state at the stopping
    time (the horizon, or the jump that satisfied ``stop_after``).
    """

    jump_times: np.ndarray
    jump_states: np.ndarray
    final_state: np.ndarray
    final_last: np.ndarray
    final_count: np.ndarray
    jumps: np.ndarray
    simultaneous: np.ndarray
    stop_time: np.ndarray
    horizon: float

    @property
    def final_age(self) -> np.ndarray:
        return self.stop_time[:, None] - self.final_last

    @staticmethod
    def concat(parts: Sequence["BatchResult"]) -> "BatchResult":
        first = parts[0]
        return BatchResult(
            *(np.concatenate([getattr(p, name) for p in parts]) for name in (
                "jump_times", "jump_states", "final_state", "final_last", "final_count",
                "jumps", "simultaneous", "stop_time",
            )),
            horizon=first.horizon,
        )


Draw = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def block_draw(stream: PointStream) -> Draw:
    def draw(times):
        gaps, marks = stream.draw_block(times.size)
        new = times + gaps
        # zero gaps after rounding would make two points simultaneous
        np.maximum(new, np.nextafter(times, np.inf), out=new)
        return new, marks

    return draw


def run_lockstep(
    resolution: MarkResolution,
    draw: Draw,
    initials: Sequence[Initial],
    reps: int,
    horizon: float = math.inf,
    *,
    record: int = 0,
    stop_after: int | None = None,
    max_steps: int = DEFAULT_MAX_JUMPS,
) -> BatchResult:
    """Drive ``reps`` replications of ``len(initials)`` components in lockstep.

    Every component of a replication sees the same point; decisions are
    made on pre-jump states and then applied together, as for coupled
    solutions of the same equation.  A replication stops at the horizon or,
    with ``stop_after``, once every component has made that many jumps.
    """
    if not (math.isfinite(horizon) or stop_after):
        raise ValueError("need a finite horizon or a stop_after jump count")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    comps = len(initials)
    x = np.array([[z.state] * reps for z in initials], dtype=np.int64)
    last = np.array([[-z.age] * reps for z in initials], dtype=float)
    cnt = np.array([[z.count] * reps for z in initials], dtype=np.int64)
    nj = np.zeros((comps, reps), dtype=np.int64)
    jt = np.full((reps, comps, record), np.nan)
    js = np.zeros((reps, comps, record), dtype=np.int64)
    simultaneous = np.zeros(reps, dtype=np.int64)
    t = np.zeros(reps)
    stop = np.full(reps, horizon)
    active = np.arange(reps)
    steps = 0
    while active.size:
        steps += 1
        if steps > max_steps:
            raise ExplosionError(f"lockstep run exceeded {max_steps} steps")
        new_t, marks = draw(t[active])
        t[active] = new_t
        inside = new_t <= horizon
        active, new_t, marks = active[inside], new_t[inside], marks[inside]
        if not active.size:
            break
        decisions = [
            resolution.resolve_marks(x[c, active], new_t - last[c, active], cnt[c, active], marks)
            for c in range(comps)
        ]
        for c, dec in enumerate(decisions):
            hit = dec > 0
            if not hit.any():
                continue
            idx = active[hit]
            if record:
                k = nj[c, idx]
                ok = k < record
                jt[idx[ok], c, k[ok]] = new_t[hit][ok]
                js[idx[ok], c, k[ok]] = dec[hit][ok]
            x[c, idx] = dec[hit]
            last[c, idx] = new_t[hit]
            cnt[c, idx] += 1
            nj[c, idx] += 1
        if comps > 1:
            both = np.logical_and.reduce([d > 0 for d in decisions])
            simultaneous[active[both]] += 1
        if stop_after:
            done = np.all(nj[:, active] >= stop_after, axis=0)
            stop[active[done]] = t[active[done]]
            active = active[~done]
    return BatchResult(
        jump_times=jt,
        jump_states=js,
        final_state=x.T.copy(),
        final_last=last.T.copy(),
        final_count=cnt.T.copy(),
        jumps=nj.T.copy(),
        simultaneous=simultaneous,
        stop_time=stop,
        horizon=horizon,
    )


CHUNK = 50_000


def simulate_batch(
    resolution: MarkResolution,
    stream: PointStream,
    initials: Sequence[Initial],
    reps: int,
    horizon: float = math.inf,
    *,
    record: int = 0,
    stop_after: int | None = None,
    threads: int = 1,
    chunk: int = CHUNK,
) -> BatchResult:
    """Chunked :func:`run_lockstep`; chunk ``c`` reads ``stream.child(c)``.

    Chunk boundaries depend only on ``reps`` and ``chunk``, so results are
    identical for every thread count.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    sizes = [min(chunk, reps - s) for s in range(0, reps, chunk)]

    def job(c):
        return run_lockstep(
            resolution, block_draw(stream.child(c)), initials, sizes[c], horizon,
            record=record, stop_after=stop_after,
        )

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(c) for c in range(len(sizes))]
    return BatchResult.concat(parts)


def stream_draw(stream: PointStream) -> Draw:
    """Single-replication draw that replays ``stream`` point by point.

    Lets :func:`run_lockstep` consume exactly the points :func:`simulate_path`
    would see.
    """

    def draw(times):
        if times.size != 1:
            raise ValueError("stream_draw drives exactly one replication")
        u, v = stream.next_point()
        return np.array([u]), np.array([v])

    return draw
