"""Goodness-of-fit statistics and verdict records for the verification suites.

Critical values are the asymptotic ones; every suite here runs at sample
sizes of ten thousand or more.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

MIN_SAMPLE = 50
MIN_EXPECTED = 5.0


class SampleSizeError(ValueError):
    pass


def ks_critical(alpha: float, n_eff: float) -> float:
    """Asymptotic Kolmogorov critical value ``sqrt(-ln(alpha/2) / 2) / sqrt(n_eff)``."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n_eff)


class EmpiricalDistribution:
    def __init__(self, sample):
        data = np.sort(np.asarray(sample, dtype=float).ravel())
        if data.size == 0:
            raise SampleSizeError("empty sample")
        self.data = data

    def __len__(self):
        return self.data.size

    def ecdf(self, x):
        return (np.searchsorted(self.data, x, side="right") / self.data.size)[()]

    def quantile(self, q):
        return np.quantile(self.data, q)

    @property
    def mean(self) -> float:
        return float(self.data.mean())

    @property
    def stderr(self) -> float:
        return float(self.data.std(ddof=1) / math.sqrt(self.data.size)) if self.data.size > 1 else math.inf


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n_eff: float
    crit_01: float
    crit_05: float

    def passes(self, alpha: float = 0.01) -> bool:
        return self.statistic < ks_critical(alpha, self.n_eff)


def ks_one_sample(sample, cdf: Callable) -> KSResult:
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n < MIN_SAMPLE:
        raise SampleSizeError(f"KS needs at least {MIN_SAMPLE} points, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return KSResult(d, n, ks_critical(0.01, n), ks_critical(0.05, n))


def ks_two_sample(a, b) -> KSResult:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if min(a.size, b.size) < MIN_SAMPLE:
        raise SampleSizeError(f"KS needs at least {MIN_SAMPLE} points per sample")
    grid = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, grid, side="right") / a.size - np.searchsorted(b, grid, side="right") / b.size)))
    n_eff = a.size * b.size / (a.size + b.size)
    return KSResult(d, n_eff, ks_critical(0.01, n_eff), ks_critical(0.05, n_eff))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    pvalue: float

    def passes(self, alpha: float = 0.01) -> bool:
        return self.pvalue > alpha


def _merge_cells(observed: np.ndarray, expected: np.ndarray):
    """Pool the smallest-expectation cells until every expected count is at least 5."""
    obs = list(observed)
    exp = list(expected)
    while len(exp) > 1 and min(exp) < MIN_EXPECTED:
        k = int(np.argmin(exp))
        # merge into the smaller neighbour in expectation
        if k == 0:
            m = 1
        elif k == len(exp) - 1:
            m = k - 1
        else:
            m = k - 1 if exp[k - 1] <= exp[k + 1] else k + 1
        e, o = exp.pop(k), obs.pop(k)
        m = m if m < k else m - 1
        exp[m] += e
        obs[m] += o
    return np.array(obs, dtype=float), np.array(exp, dtype=float)


def chi_square(observed: Sequence[float], expected_probs: Sequence[float]) -> ChiSquareResult:
    """Pearson goodness of fit of counts against cell probabilities."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(expected_probs, dtype=float)
    if obs.shape != p.shape:
        raise ValueError("observed and expected must have the same length")
    total = obs.sum()
    if total < MIN_SAMPLE:
        raise SampleSizeError(f"chi-square needs at least {MIN_SAMPLE} observations")
    obs, exp = _merge_cells(obs, p / p.sum() * total)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0)


def chi_square_homogeneity(counts_a: Sequence[float], counts_b: Sequence[float]) -> ChiSquareResult:
    """Two-sample test that two count vectors come from one categorical law.

    Categories empty in both samples are dropped; cells whose pooled
    expectation falls below 5 are merged.
    """
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    keep = (a + b) > 0
    a, b = a[keep], b[keep]
    na, nb = a.sum(), b.sum()
    if min(na, nb) < MIN_SAMPLE:
        raise SampleSizeError(f"homogeneity test needs at least {MIN_SAMPLE} observations per sample")
    pooled = (a + b) / (na + nb)
    order = np.argsort(pooled, kind="stable")
    a, b, pooled = a[order], b[order], pooled[order]
    # merge until both samples expect at least 5 per cell
    cells: list[list[float]] = []
    for ai, bi, pi in zip(a, b, pooled):
        if cells and min(cells[-1][2] * na, cells[-1][2] * nb) < MIN_EXPECTED:
            cells[-1][0] += ai
            cells[-1][1] += bi
            cells[-1][2] += pi
        else:
            cells.append([ai, bi, pi])
    if len(cells) > 1 and min(cells[-1][2] * na, cells[-1][2] * nb) < MIN_EXPECTED:
        last = cells.pop()
        cells[-1] = [x + y for x, y in zip(cells[-1], last)]
    ca, cb, cp = (np.array(c) for c in zip(*cells))
    ea, eb = cp * na, cp * nb
    stat = float(np.sum((ca - ea) ** 2 / ea) + np.sum((cb - eb) ** 2 / eb))
    dof = len(ca) - 1
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def bonferroni(alpha: float, m: int) -> float:
    return alpha / max(m, 1)


@dataclass
class Verdict:
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("statistic", "threshold"):
            v = d[k]
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = repr(v)
        return d

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.statistic:.6g} vs {self.threshold:.6g} {self.detail}".rstrip()
