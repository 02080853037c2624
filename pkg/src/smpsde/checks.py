"""Verification suites: each returns a list of :class:`~smpsde.harness.Verdict`.

The suites compare the point-stream construction with the analytic
transition parameters (holding cdf, kernel, embedded probabilities) and
with the direct oracle sampler, and audit the layout and coupling
invariants.  All randomness is derived from ``seed``; each suite uses its
own stream id so suites never share points.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import harness
from .coupling import TestFunction, dynkin_residuals, meeting_stats, simulate_coupled
from .harness import Verdict, binomial_se, bonferroni, chi_square, chi_square_homogeneity, ks_one_sample, ks_two_sample
from .layout import MarkResolution, check_layout
from .oracle import OracleSampler
from .prm import PointStream
from .rates import (
    RateModel,
    gamma,
    holding_cdf,
    holding_survival,
    kernel,
    rate_identity_residual,
    validate,
)
from .solver import Initial, holding_time_samples, simulate_batch

# stream ids, one per suite
SID_HOLDING, SID_KERNEL, SID_ORACLE, SID_SHORT, SID_EMBEDDED, SID_COUPLE, SID_DYNKIN, SID_SMP = range(1, 9)

ALPHA = 0.01
# slack for quadrature error when a binomial s.e. collapses to 0 (q = 0 or 1)
QUAD_FLOOR = 1e-9


def counts_to_test(model: RateModel) -> tuple[int, ...]:
    return (0, 1, 3) if model.n_dependent else (0,)


def tail_age(model: RateModel, i: int, n: int, level: float = 40.0) -> float:
    """An age by which the cumulative hazard of ``i`` exceeds ``level``."""
    y = 1.0
    while float(gamma(model, i, y, n)) < level:
        y *= 2.0
        if y > 1e6:
            raise ValueError(f"hazard of state {i} does not reach {level}")
    return y


# -- analytic suites ------------------------------------------------------


def validation_suite(model: RateModel, y_check: float = 10.0, gamma_min: float = 1.0) -> list[Verdict]:
    report = validate(model, y_check, gamma_min)
    detail = "; ".join(f"{v.assumption} state {v.i}{'->' + str(v.j) if v.j else ''}: {v.detail}" for v in report.violations[:5])
    return [Verdict("validate", float(len(report.violations)), 0.0, report.ok, detail or f"c={report.c:g}")]


def layout_suite(res: MarkResolution, samples: int = 10_000, seed: int = 0) -> list[Verdict]:
    counts = check_layout(res, samples, seed=seed)
    out = [
        Verdict(f"layout/{k}", float(counts[k]), 0.0, counts[k] == 0, f"{counts['checks']} interval checks")
        for k in ("disjoint", "length", "containment", "overlap")
    ]
    return out


def identity_suite(model: RateModel, points: int = 100, tol: float = 1e-9) -> list[Verdict]:
    worst = 0.0
    for i in model.states:
        for n in counts_to_test(model):
            ys = np.linspace(0.0, tail_age(model, i, n, 30.0), points)
            for j in model.states:
                for y in ys:
                    worst = max(worst, abs(rate_identity_residual(model, i, j, float(y), n)))
    return [Verdict("rate_identity", worst, tol, worst < tol, f"{points}-point age grid")]


def instantaneous_rate_suite(model: RateModel, points: int = 20, step: float = 1e-3, tol: float = 1e-5) -> list[Verdict]:
    """Central difference of the kernel over the survival equals the pair rate."""
    worst = 0.0
    for i in model.states:
        bps = model.breakpoints(i)
        for n in counts_to_test(model):
            ys = np.linspace(0.05, min(tail_age(model, i, n, 10.0), 8.0), points)
            for j in model.states:
                if j == i:
                    continue
                for y in ys:
                    y = float(y)
                    if any(abs(y - b) < 2 * step for b in bps):
                        y += 4 * step
                    dq = (kernel(model, i, j, y + step, n) - kernel(model, i, j, y - step, n)) / (2 * step)
                    err = abs(dq / float(holding_survival(model, i, y, n)) - float(model.rate(i, j, y, n)))
                    worst = max(worst, err)
    return [Verdict("instantaneous_rate", worst, tol, worst < tol, f"{points} ages per (i,j,n)")]


# -- statistical suites ---------------------------------------------------


def holding_law_suite(
    model: RateModel,
    res: MarkResolution,
    seed: int,
    samples: int = 100_000,
    states: Sequence[int] | None = None,
    alpha: float = ALPHA,
) -> list[Verdict]:
    """One-sample KS of point-stream sojourns against ``1 - exp(-gamma)``."""
    out = []
    for i in states or model.states:
        for n in counts_to_test(model):
            stream = PointStream(seed, res.strip_height, SID_HOLDING, path=(i, n))
            d = holding_time_samples(model, res, i, n, samples, stream)
            ks = ks_one_sample(d, lambda y, i=i, n=n: holding_cdf(model, i, y, n))
            crit = harness.ks_critical(alpha, ks.n_eff)
            out.append(Verdict(f"holding_law/state{i}/n{n}", ks.statistic, crit, ks.statistic < crit, f"n={samples}"))
    return out


def kernel_law_suite(
    model: RateModel,
    res: MarkResolution,
    seed: int,
    reps: int = 100_000,
    ages: Sequence[float] = (0.25, 0.5, 1.0),
    threads: int = 1,
    sigmas: float = 3.0,
) -> list[Verdict]:
    """Empirical ``P[X_T1 = j, T1 <= y | X_0 = i]`` against ``Q_ij(y, 0)``."""
    out = []
    for i in model.states:
        stream = PointStream(seed, res.strip_height, SID_KERNEL, path=(i,))
        batch = simulate_batch(res, stream, [Initial(i)], reps, record=1, stop_after=1, threads=threads)
        t1 = batch.jump_times[:, 0, 0]
        x1 = batch.jump_states[:, 0, 0]
        for j in model.states:
            if j == i:
                continue
            for y in ages:
                q = kernel(model, i, j, y, 0)
                emp = float(np.mean((x1 == j) & (t1 <= y)))
                tol = sigmas * binomial_se(q, reps) + QUAD_FLOOR
                dev = abs(emp - q)
                out.append(Verdict(f"kernel_law/Q{i}{j}({y:g})", dev, tol, dev <= tol, f"emp={emp:.5f} Q={q:.5f}"))
    return out


def embedded_chain_suite(
    model: RateModel, res: MarkResolution, seed: int, reps: int = 100_000, threads: int = 1, sigmas: float = 3.0
) -> list[Verdict]:
    """Jump-target frequencies against ``int_0^inf p_ij f ds = Q_ij(inf)``."""
    out = []
    for i in model.states:
        for n in counts_to_test(model):
            stream = PointStream(seed, res.strip_height, SID_EMBEDDED, path=(i, n))
            batch = simulate_batch(res, stream, [Initial(i, 0.0, n)], reps, record=1, stop_after=1, threads=threads)
            x1 = batch.jump_states[:, 0, 0]
            y_inf = tail_age(model, i, n)
            for j in model.states:
                if j == i:
                    continue
                q = kernel(model, i, j, y_inf, n)
                emp = float(np.mean(x1 == j))
                dev = abs(emp - q)
                tol = sigmas * binomial_se(q, reps) + QUAD_FLOOR
                out.append(Verdict(f"embedded/p{i}{j}/n{n}", dev, tol, dev <= tol, f"emp={emp:.5f} exact={q:.5f}"))
    return out


def short_holding_suite(
    model: RateModel, res: MarkResolution, seed: int, reps: int = 20_000, jumps: int = 10, eps: float = 0.1, threads: int = 1
) -> list[Verdict]:
    """Fraction of sojourns shorter than ``eps`` stays below ``1 - exp(-eps c)``."""
    out = []
    bound = -math.expm1(-eps * model.c)
    for i in model.states:
        stream = PointStream(seed, res.strip_height, SID_SHORT, path=(i,))
        batch = simulate_batch(res, stream, [Initial(i)], reps, record=jumps, stop_after=jumps, threads=threads)
        times = batch.jump_times[:, 0, :]
        soj = np.diff(np.concatenate([np.zeros((reps, 1)), times], axis=1), axis=1).ravel()
        frac = float(np.mean(soj < eps))
        se = binomial_se(frac, soj.size)
        out.append(Verdict(f"short_holding/start{i}", frac, bound + 3 * se, frac <= bound + 3 * se, f"eps={eps} c={model.c:g}"))
    return out


def _prm_first_jumps(res, seed, initial, reps, jumps, threads, stream_path=()):
    stream = PointStream(seed, res.strip_height, SID_ORACLE, path=stream_path)
    batch = simulate_batch(res, stream, [initial], reps, record=jumps, stop_after=jumps, threads=threads)
    return batch.jump_times[:, 0, :], batch.jump_states[:, 0, :]


def oracle_equivalence_suite(
    model: RateModel,
    res: MarkResolution,
    seed: int,
    reps: int = 100_000,
    initial: Initial | None = None,
    threads: int = 1,
    alpha: float = ALPHA,
) -> list[Verdict]:
    """Two-sample comparison of the point-stream solver and the oracle, Bonferroni corrected.

    Compares ``T1``, ``T2 - T1`` split by ``X_T1``, and the table of
    ``(X_T1, X_T2)`` transitions.
    """
    initial = initial or Initial(1)
    t_prm, x_prm = _prm_first_jumps(res, seed, initial, reps, 2, threads)
    oracle = OracleSampler(model, seed, SID_ORACLE)
    t_orc, x_orc = oracle.first_jumps(initial, reps, 2)

    tests: list[tuple[str, object]] = [("T1", ks_two_sample(t_prm[:, 0], t_orc[:, 0]))]
    for i in model.states:
        a = (t_prm[:, 1] - t_prm[:, 0])[x_prm[:, 0] == i]
        b = (t_orc[:, 1] - t_orc[:, 0])[x_orc[:, 0] == i]
        if min(a.size, b.size) >= 1000:
            tests.append((f"T2-T1|X_T1={i}", ks_two_sample(a, b)))
    K = model.num_states
    code_prm = (x_prm[:, 0] - 1) * K + (x_prm[:, 1] - 1)
    code_orc = (x_orc[:, 0] - 1) * K + (x_orc[:, 1] - 1)
    tests.append((
        "transitions",
        chi_square_homogeneity(np.bincount(code_prm, minlength=K * K), np.bincount(code_orc, minlength=K * K)),
    ))
    level = bonferroni(alpha, len(tests))
    out = []
    for name, res_ in tests:
        if isinstance(res_, harness.KSResult):
            crit = harness.ks_critical(level, res_.n_eff)
            out.append(Verdict(f"oracle/{model.name}/{name}", res_.statistic, crit, res_.statistic < crit, f"KS, alpha={level:.4g}"))
        else:
            out.append(
                Verdict(f"oracle/{model.name}/{name}", res_.pvalue, level, res_.passes(level), f"chi2={res_.statistic:.3f} dof={res_.dof}")
            )
    if oracle.degenerate_events:
        out.append(Verdict(f"oracle/{model.name}/degenerate", float(oracle.degenerate_events), 0.0, False, "zero exit rate at a sampled age"))
    return out


def semi_markov_suite(
    model: RateModel, res: MarkResolution, seed: int, reps: int = 100_000, bins: int = 4, threads: int = 1, alpha: float = 0.05
) -> list[Verdict]:
    """Law of ``(X_T2, T2 - T1)`` given ``X_T1`` does not depend on ``(X_0, T1)``.

    Strata are the initial state and whether ``T1`` is below its median;
    durations are binned at pooled quantiles.  Bonferroni over states.
    """
    rows = []
    for x0 in model.states:
        stream = PointStream(seed, res.strip_height, SID_SMP, path=(x0,))
        batch = simulate_batch(res, stream, [Initial(x0)], reps, record=2, stop_after=2, threads=threads)
        t = batch.jump_times[:, 0, :]
        s = batch.jump_states[:, 0, :]
        early = t[:, 0] <= np.median(t[:, 0])
        rows.append((x0, early, s[:, 0], s[:, 1], t[:, 1] - t[:, 0]))
    verdicts = []
    tests = []
    for i in model.states:
        groups = []
        for x0, early, s1, s2, d in rows:
            for flag in (True, False):
                m = (s1 == i) & (early == flag)
                if m.sum() >= 1000:
                    groups.append((s2[m], d[m]))
        if len(groups) < 2:
            continue
        pooled = np.concatenate([g[1] for g in groups])
        edges = np.quantile(pooled, np.linspace(0, 1, bins + 1)[1:-1])
        K = model.num_states
        tables = [np.bincount((g[0] - 1) * bins + np.searchsorted(edges, g[1]), minlength=K * bins) for g in groups]
        tests.append((i, tables))
    level = bonferroni(alpha, sum(len(t) - 1 for _, t in tests))
    for i, tables in tests:
        for k, tab in enumerate(tables[1:], start=1):
            r = chi_square_homogeneity(tables[0], tab)
            verdicts.append(Verdict(f"semi_markov/X_T1={i}/stratum{k}", r.pvalue, level, r.passes(level), f"chi2={r.statistic:.3f} dof={r.dof}"))
    return verdicts


# -- coupling suites ------------------------------------------------------


def coupling_structure_suite(
    model: RateModel, res: MarkResolution, seed: int, paths: int = 1000, horizon: float = 10.0
) -> list[Verdict]:
    """Identical initials give identical paths; merging is permanent; overlap rules hold."""
    out = []
    base = PointStream(seed, res.strip_height, SID_COUPLE)
    mismatches = 0
    for k, s in enumerate(base.fork(paths)):
        z = Initial(1 + k % model.num_states, 0.3 * (k % 3), 0)
        cp = simulate_coupled(model, res, s, z, z, horizon)
        mismatches += cp.first.times != cp.second.times or cp.first.states != cp.second.states
    out.append(Verdict("couple/identical_initials", float(mismatches), 0.0, mismatches == 0, f"{paths} paths"))

    broken = 0
    illegal = 0
    streams = PointStream(seed, res.strip_height, SID_COUPLE, path=(1,)).fork(paths)
    for k, s in enumerate(streams):
        z1 = Initial(1, 0.0, 0)
        z2 = Initial(model.num_states if k % 2 else 1, 0.7, 0)
        cp = simulate_coupled(model, res, s, z1, z2, horizon)
        x1, x2 = z1.state, z2.state
        for e in cp.events:
            if e.which == "both" and not (x1 == x2 and e.state1 == e.state2):
                illegal += 1
            if cp.merged and e.time > cp.merge_time and e.which != "both":
                broken += 1
            x1, x2 = e.state1, e.state2
    out.append(Verdict("couple/merge_permanence", float(broken), 0.0, broken == 0, f"{paths} paths"))
    out.append(Verdict("couple/simultaneous_only_on_overlap", float(illegal), 0.0, illegal == 0, f"{paths} paths"))
    return out


def merge_at_first_jump_suite(model: RateModel, res: MarkResolution, seed: int, paths: int = 1000, horizon: float = 10.0) -> list[Verdict]:
    """Constant rates, same state, different ages: merge at the first jump."""
    streams = PointStream(seed, res.strip_height, SID_COUPLE, path=(2,)).fork(paths)
    cps = [simulate_coupled(model, res, s, Initial(1, 0.0), Initial(1, 1.5), horizon) for s in streams]
    summary = meeting_stats(cps)
    frac = summary["merged_by_first_jump"] / paths
    return [Verdict("couple/merge_at_first_jump", frac, 1.0, frac == 1.0, f"{paths} paths")]


def disjoint_rows_suite(
    model: RateModel, res: MarkResolution, seed: int, init1: Initial, init2: Initial, paths: int = 1000, horizon: float = 10.0
) -> list[Verdict]:
    streams = PointStream(seed, res.strip_height, SID_COUPLE, path=(3,)).fork(paths)
    cps = [simulate_coupled(model, res, s, init1, init2, horizon) for s in streams]
    total = meeting_stats(cps)["simultaneous_jumps"]["total"]
    return [Verdict("couple/disjoint_rows_no_simultaneous", float(total), 0.0, total == 0, f"{paths} paths")]


def coupled_marginal_kernel_suite(
    model: RateModel,
    res: MarkResolution,
    seed: int,
    init1: Initial,
    init2: Initial,
    reps: int = 100_000,
    ages: Sequence[float] = (0.25, 0.5, 1.0),
    threads: int = 1,
    sigmas: float = 3.0,
) -> list[Verdict]:
    """First-jump kernel law of each coupled marginal (initial ages must be 0)."""
    if init1.age or init2.age:
        raise ValueError("kernel comparison needs fresh sojourns")
    stream = PointStream(seed, res.strip_height, SID_COUPLE, path=(4,))
    batch = simulate_batch(res, stream, [init1, init2], reps, record=1, stop_after=1, threads=threads)
    out = []
    for c, z in enumerate((init1, init2)):
        t1 = batch.jump_times[:, c, 0]
        x1 = batch.jump_states[:, c, 0]
        i = z.state
        for j in model.states:
            if j == i:
                continue
            for y in ages:
                q = kernel(model, i, j, y, z.count)
                emp = float(np.mean((x1 == j) & (t1 <= y)))
                dev = abs(emp - q)
                tol = sigmas * binomial_se(q, reps) + QUAD_FLOOR
                out.append(Verdict(f"couple/marginal{c + 1}/Q{i}{j}({y:g})", dev, tol, dev <= tol, f"emp={emp:.5f} Q={q:.5f}"))
    return out


def standard_test_functions() -> list[TestFunction]:
    return [
        TestFunction(lambda z1, z2: np.ones(np.shape(z1[0])), vectorized=True, name="constant"),
        TestFunction(lambda z1, z2: (np.asarray(z1[0]) == 2).astype(float), vectorized=True, name="first_in_2"),
        TestFunction(
            lambda z1, z2: ((np.asarray(z1[0]) == 2) & (np.asarray(z2[0]) == 2)).astype(float),
            vectorized=True,
            name="both_in_2",
        ),
    ]


def dynkin_suite(
    model: RateModel,
    res: MarkResolution,
    seed: int,
    configs: Sequence[tuple[str, tuple, tuple]],
    phis: Sequence[TestFunction] | None = None,
    h: float = 0.02,
    reps: int = 1_000_000,
    threads: int = 1,
    sigmas: float = 3.0,
) -> list[Verdict]:
    """Dynkin residuals at ``h`` and ``h/2`` for each configuration and test function.

    With ``r(h) ~ C h``, the halving estimate ``C = 2 (r(h) - r(h/2)) / h``
    bounds the bias: each ``|r|`` must be within ``3 s.e. + |C| h``.  The
    extrapolated intercept ``2 r(h/2) - r(h)`` must be within 3 of its
    standard errors of zero, which confirms the linear trend.
    """
    phis = list(phis or standard_test_functions())
    out = []
    for c, (label, z1, z2) in enumerate(configs):
        coarse = dynkin_residuals(model, res, phis, z1, z2, h, reps, PointStream(seed, res.strip_height, SID_DYNKIN, path=(c, 0)), threads=threads)
        fine = dynkin_residuals(model, res, phis, z1, z2, h / 2, reps, PointStream(seed, res.strip_height, SID_DYNKIN, path=(c, 1)), threads=threads)
        for phi, rc, rf in zip(phis, coarse, fine):
            slope = 2.0 * (rc.residual - rf.residual) / h
            for r in (rc, rf):
                bound = sigmas * r.stderr + abs(slope) * r.h
                out.append(
                    Verdict(
                        f"dynkin/{label}/{phi.name}/h={r.h:g}",
                        abs(r.residual),
                        bound,
                        abs(r.residual) <= bound,
                        f"A_phi={r.generator:.6g} mean={r.mean_increment:.6g} se={r.stderr:.3g} C={slope:.4g}",
                    )
                )
            intercept = 2.0 * rf.residual - rc.residual
            ise = math.hypot(2.0 * rf.stderr, rc.stderr)
            out.append(
                Verdict(
                    f"dynkin/{label}/{phi.name}/linear_trend",
                    abs(intercept),
                    sigmas * ise,
                    abs(intercept) <= sigmas * ise,
                    f"extrapolated residual at h=0 (se={ise:.3g})",
                )
            )
    return out
