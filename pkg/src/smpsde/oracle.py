"""Direct sampler of the semi-Markov law, independent of the point-stream construction.

Each sojourn is drawn by inverting the holding-time cdf (bisection on the
monotone cumulative hazard), then the next state is drawn from the embedded
jump probabilities at the sampled age.  No randomness is shared with any
:class:`~smpsde.prm.PointStream`.
"""

from __future__ import annotations

import math

import numpy as np

from .prm import ORACLE_DOMAIN, make_generator
from .rates import RateModel, embedded_probs, gamma
from .solver import Initial, Trajectory


class BracketError(RuntimeError):
    """No finite sojourn reaches the target hazard: the hazard does not diverge."""


class OracleSampler:
    def __init__(
        self,
        model: RateModel,
        seed: int,
        stream_id: int = 0,
        *,
        tol: float = 1e-10,
        y_max: float = 1e6,
        path: tuple[int, ...] = (),
    ):
        self.model = model
        self.tol = tol
        self.y_max = y_max
        self.rng = make_generator(seed, (ORACLE_DOMAIN, stream_id, *path))
        self.degenerate_events = 0

    # -- sojourns ----------------------------------------------------------

    def invert(self, i: int, n, hazard, age=0.0) -> np.ndarray:
        """Durations ``s`` with ``gamma_i(age + s, n) - gamma_i(age, n) = hazard``."""
        hazard = np.asarray(hazard, dtype=float)
        shape = hazard.shape
        hazard = hazard.ravel()
        age = np.broadcast_to(np.asarray(age, dtype=float), shape).ravel()
        n = np.broadcast_to(np.asarray(n), shape).ravel()
        target = np.asarray(gamma(self.model, i, age, n), dtype=float).ravel() + hazard

        def g(s):
            return np.asarray(gamma(self.model, i, age + s, n), dtype=float).reshape(s.shape)

        hi = np.ones_like(hazard)
        short = g(hi) < target
        while short.any():
            hi[short] *= 2.0
            if np.any(hi > self.y_max):
                k = int(np.flatnonzero(hi > self.y_max)[0])
                raise BracketError(
                    f"hazard of state {i} (n={int(n[k])}) stays below {target[k]:.6g} up to age {self.y_max:g}"
                )
            short = g(hi) < target
        lo = np.zeros_like(hi)
        steps = max(1, math.ceil(math.log2(float(hi.max()) / self.tol)))
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            below = g(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return (0.5 * (lo + hi)).reshape(shape)

    def sample_sojourn(self, i: int, n: int, age: float = 0.0) -> float:
        u = self.rng.random()
        return float(self.invert(i, n, -math.log1p(-u), age))

    def sample_sojourns(self, i: int, n, age=0.0, size: int | None = None) -> np.ndarray:
        if size is None:
            size = np.broadcast(np.asarray(n), np.asarray(age)).size
        u = self.rng.random(size)
        return self.invert(i, n, -np.log1p(-u), age)

    # -- next state --------------------------------------------------------

    def sample_next_state(self, i: int, y: float, n: int) -> tuple[int, bool]:
        """Categorical draw from the embedded row; flags the degenerate ``p_ii = 1`` case."""
        p = embedded_probs(self.model, i, y, n)
        if p[i - 1] == 1.0:
            self.degenerate_events += 1
            return i, True
        u = self.rng.random()
        j = int(np.searchsorted(np.cumsum(p), u, side="right")) + 1
        return min(j, self.model.num_states), False

    def sample_next_states(self, i: int, y, n) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        n = np.broadcast_to(np.asarray(n), y.shape)
        targets = [j for j in self.model.states if j != i]
        rates = np.stack([np.asarray(self.model.rate(i, j, y, n), dtype=float) + np.zeros(y.shape) for j in targets])
        cum = np.cumsum(rates, axis=0)
        total = cum[-1]
        u = self.rng.random(y.shape) * total
        k = (u[None, :] >= cum).sum(axis=0)
        k = np.minimum(k, len(targets) - 1)
        out = np.asarray(targets)[k]
        degenerate = total <= 0
        self.degenerate_events += int(degenerate.sum())
        return np.where(degenerate, i, out)

    # -- paths ------------------------------------------------------------

    def simulate_path(self, initial: Initial, horizon: float) -> Trajectory:
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        traj = Trajectory(initial, horizon, sampler="oracle")
        x, age, n, t = initial.state, initial.age, initial.count, 0.0
        while True:
            hazard = -math.log1p(-self.rng.random())
            # censored: the hazard left before the horizon falls short of the draw
            g0 = float(gamma(self.model, x, age, n))
            if float(gamma(self.model, x, age + (horizon - t), n)) - g0 < hazard:
                return traj
            s = float(self.invert(x, n, hazard, age))
            if t + s > horizon:
                return traj
            t += s
            j, degenerate = self.sample_next_state(x, age + s, n)
            if degenerate:
                # no jump happens at an age with zero exit rate; resume the same sojourn
                age += s
                continue
            traj.times.append(t)
            traj.states.append(j)
            x, age, n = j, 0.0, n + 1

    def first_jumps(self, initial: Initial, reps: int, jumps: int) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized first ``jumps`` jump times and states for ``reps`` paths."""
        times = np.empty((reps, jumps))
        states = np.empty((reps, jumps), dtype=np.int64)
        x = np.full(reps, initial.state, dtype=np.int64)
        age = np.full(reps, initial.age)
        n = np.full(reps, initial.count, dtype=np.int64)
        t = np.zeros(reps)
        for k in range(jumps):
            nxt = np.empty(reps, dtype=np.int64)
            for i in self.model.states:
                m = x == i
                if not m.any():
                    continue
                s = self.sample_sojourns(i, n[m], age[m])
                t[m] += s
                nxt[m] = self.sample_next_states(i, age[m] + s, n[m])
            times[:, k] = t
            states[:, k] = nxt
            x, age, n = nxt, np.zeros(reps), n + 1
        return times, states


def simulate_path_oracle(oracle: OracleSampler, initial: Initial, horizon: float) -> Trajectory:
    return oracle.simulate_path(initial, horizon)
