"""Seeded Poisson random measure on the strip ``[0, inf) x [0, strip_height)``.

Points arrive with Exponential(strip_height) gaps and Uniform marks, which
is the unit-intensity Poisson measure restricted to the strip.  Streams are
Philox (counter-based) generators keyed by ``(seed, stream_id, fork path)``
through :class:`numpy.random.SeedSequence`, so forked children are
independent and every stream replays identically.
"""

from __future__ import annotations

import csv
from typing import Iterator

import numpy as np

# first spawn-key word separates point streams from other consumers of the seed
PRM_DOMAIN = 0
ORACLE_DOMAIN = 1

_BLOCK = 512


def make_generator(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


class PointStream:
    """Lazy, strictly time-ordered stream of ``(time, mark)`` points."""

    def __init__(self, seed: int, strip_height: float, stream_id: int = 0, *, path: tuple[int, ...] = ()):
        if not strip_height > 0:
            raise ValueError("strip height must be positive")
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in path)
        self.strip_height = float(strip_height)
        self.cursor = 0.0
        self._gen = make_generator(self.seed, (PRM_DOMAIN, self.stream_id, *self.path))
        self._times: list[float] = []
        self._marks: list[float] = []
        self._pos = 0

    def __repr__(self):
        return f"PointStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path}, cursor={self.cursor:.6g})"

    def _refill(self):
        gaps = self._gen.standard_exponential(_BLOCK) / self.strip_height
        marks = self._gen.random(_BLOCK) * self.strip_height
        times = self.cursor + np.cumsum(gaps)
        self._times = times.tolist()
        self._marks = marks.tolist()
        self._pos = 0

    def next_point(self) -> tuple[float, float]:
        if self._pos >= len(self._times):
            self._refill()
        u = self._times[self._pos]
        v = self._marks[self._pos]
        self._pos += 1
        if u <= self.cursor:
            # a zero gap after rounding; keep times strictly increasing
            u = float(np.nextafter(self.cursor, np.inf))
            if self._pos < len(self._times) and self._times[self._pos] <= u:
                self._times[self._pos:] = [max(t, float(np.nextafter(u, np.inf))) for t in self._times[self._pos:]]
        self.cursor = u
        return u, v

    def __iter__(self) -> Iterator[tuple[float, float]]:
        while True:
            yield self.next_point()

    def points_until(self, horizon: float) -> list[tuple[float, float]]:
        """Consume and return every point with time ``<= horizon``.

        The first point past the horizon is consumed too (and dropped).
        """
        out = []
        while True:
            u, v = self.next_point()
            if u > horizon:
                return out
            out.append((u, v))

    def draw_block(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Raw ``(gaps, marks)`` arrays for lockstep simulation of many paths.

        Each entry belongs to a different path; the scalar cursor is not
        advanced.
        """
        gaps = self._gen.standard_exponential(size) / self.strip_height
        marks = self._gen.random(size) * self.strip_height
        return gaps, marks

    def child(self, index: int) -> "PointStream":
        return PointStream(self.seed, self.strip_height, self.stream_id, path=(*self.path, index))

    def fork(self, k: int) -> list["PointStream"]:
        if k < 1:
            raise ValueError("fork needs k >= 1")
        return [self.child(c) for c in range(k)]


def dump_points(points, path) -> None:
    """Debug dump of ``(u, v)`` pairs as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        for u, v in points:
            w.writerow([repr(float(u)), repr(float(v))])
