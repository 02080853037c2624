"""Command-line entry point: ``smpsde {simulate,verify,couple,kernel}``.

Settings come from built-in defaults, then the ``--config`` JSON document,
then command-line flags (highest precedence).  Exit codes: 0 when every
requested check passes, 1 on a failed check, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import artifacts, checks
from .config import ConfigError, RunConfig
from .coupling import meeting_stats, simulate_coupled
from .harness import Verdict
from .layout import MarkResolution
from .oracle import OracleSampler
from .prm import PointStream, dump_points
from .rates import Constant, embedded_probs, holding_cdf, kernel, validate
from .solver import simulate_path

log = logging.getLogger("smpsde")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SUITES = (
    "validate", "layout", "identity", "instantaneous", "holding", "kernel",
    "embedded", "short", "oracle", "semi_markov", "coupling",
)


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _meta(cfg: RunConfig) -> dict:
    return {
        "seed": cfg.seed,
        "stream_id": cfg.stream_id,
        "model": cfg.model.name,
        "model_hash": cfg.model_hash,
        "config_hash": cfg.config_hash,
    }


def _check_model(cfg: RunConfig) -> bool:
    v = cfg["validation"]
    report = validate(cfg.model, float(v["y_check"]), float(v["gamma_min"]))
    if report.ok:
        return True
    for viol in report.violations:
        log.error("assumption %s violated at state %s: %s", viol.assumption, viol.i, viol.detail)
    if v.get("override"):
        log.warning("model validation failed; continuing because override is set")
        return True
    return False


# -- subcommands ----------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    if not _check_model(cfg):
        return EXIT_USAGE
    model = cfg.model
    res = MarkResolution(model)
    sampler = cfg["simulate"]["sampler"]
    if sampler not in ("prm", "oracle"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    root = PointStream(cfg.seed, res.strip_height, cfg.stream_id)
    meta = _meta(cfg)

    def run(r):
        if sampler == "prm":
            return simulate_path(model, res, root.child(r), cfg.initial, cfg.horizon)
        return OracleSampler(model, cfg.seed, cfg.stream_id, path=(r,)).simulate_path(cfg.initial, cfg.horizon)

    reps = int(cfg["replications"])
    trajs = _pmap(run, range(reps), cfg.threads)
    width = max(5, len(str(reps - 1)))
    for r, traj in enumerate(trajs):
        artifacts.write(out / f"path_{r:0{width}d}.csv", artifacts.trajectory_csv(traj, {**meta, "replication": r}))
        if cfg["simulate"].get("dump_points") and sampler == "prm":
            dump_points(root.child(r).points_until(cfg.horizon), out / f"points_{r:0{width}d}.csv")
    jumps = [t.num_jumps for t in trajs]
    summary = {
        "meta": {**meta, "sampler": sampler, "horizon": cfg.horizon, "replications": reps},
        "paths": [
            {"replication": r, "jumps": t.num_jumps, "final_state": t.state_at(cfg.horizon)[0]}
            for r, t in enumerate(trajs)
        ],
        "mean_jumps": float(np.mean(jumps)),
    }
    artifacts.write(out / "summary.json", artifacts.dumps(summary))
    print(f"wrote {reps} trajectories to {out}")
    return EXIT_OK


def _is_constant(model) -> bool:
    return all(isinstance(model.shape(i, j), Constant) or model.sup_norms[i - 1, j - 1] == 0
               for i in model.states for j in model.states if i != j)


def run_suites(cfg: RunConfig, suites) -> list[Verdict]:
    model = cfg.model
    samples = int(cfg["verify"]["samples"])
    seed, threads = cfg.seed, cfg.threads
    res = MarkResolution(model)
    verdicts: list[Verdict] = []
    valid = True
    if "validate" in suites:
        v = checks.validation_suite(model, cfg["validation"]["y_check"], cfg["validation"]["gamma_min"])
        valid = v[0].passed or bool(cfg["validation"].get("override"))
        verdicts += v
    if "layout" in suites:
        verdicts += checks.layout_suite(res, seed=seed)
    if not valid:
        skipped = [s for s in suites if s not in ("validate", "layout")]
        if skipped:
            verdicts.append(Verdict("skipped", float(len(skipped)), 0.0, False, "model failed validation: " + ",".join(skipped)))
        return verdicts
    if "identity" in suites:
        verdicts += checks.identity_suite(model)
    if "instantaneous" in suites:
        verdicts += checks.instantaneous_rate_suite(model)
    if "holding" in suites:
        verdicts += checks.holding_law_suite(model, res, seed, samples)
    if "kernel" in suites:
        verdicts += checks.kernel_law_suite(model, res, seed, samples, threads=threads)
    if "embedded" in suites:
        verdicts += checks.embedded_chain_suite(model, res, seed, samples, threads=threads)
    if "short" in suites:
        verdicts += checks.short_holding_suite(model, res, seed, max(samples // 5, 1000), threads=threads)
    if "oracle" in suites:
        verdicts += checks.oracle_equivalence_suite(model, res, seed, samples, cfg.initial, threads=threads)
    if "semi_markov" in suites:
        verdicts += checks.semi_markov_suite(model, res, seed, samples, threads=threads)
    if "coupling" in suites:
        verdicts += checks.coupling_structure_suite(model, res, seed, paths=200)
        if _is_constant(model) and not model.n_dependent:
            verdicts += checks.merge_at_first_jump_suite(model, res, seed, paths=200)
    return verdicts


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    suites = cfg["verify"]["suites"]
    if suites is None:
        suites = list(SUITES)
    if isinstance(suites, str):
        suites = [s for s in suites.split(",") if s]
    if not suites:
        raise ConfigError("empty suite selection")
    unknown = sorted(set(suites) - set(SUITES))
    if unknown:
        raise ConfigError(f"unknown suites {unknown}; choose from {list(SUITES)}")
    verdicts = run_suites(cfg, suites)
    for v in verdicts:
        print(v.line())
    ok = all(v.passed for v in verdicts)
    doc = {
        "meta": {**_meta(cfg), "suites": list(suites), "samples": int(cfg["verify"]["samples"])},
        "passed": ok,
        "verdicts": [v.to_dict() for v in verdicts],
    }
    artifacts.write(out / "verdicts.json", artifacts.dumps(doc))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_couple(cfg: RunConfig, out: Path) -> int:
    if not _check_model(cfg):
        return EXIT_USAGE
    model = cfg.model
    res = MarkResolution(model)
    z1, z2 = cfg.couple_initials
    c = cfg["couple"]
    paths = int(c["paths"])
    root = PointStream(cfg.seed, res.strip_height, cfg.stream_id)
    meta = _meta(cfg)
    cps = _pmap(lambda r: simulate_coupled(model, res, root.child(r), z1, z2, cfg.horizon), range(paths), cfg.threads)
    width = max(5, len(str(paths - 1)))
    for r, cp in enumerate(cps):
        artifacts.write(out / f"couple_{r:0{width}d}.csv", artifacts.coupled_csv(cp, {**meta, "replication": r}))
    summary = meeting_stats(cps)
    dyn = c.get("dynkin") or {}
    verdicts = []
    if dyn:
        config = [("initial", (z1.state, z1.age, z1.count), (z2.state, z2.age, z2.count))]
        verdicts = checks.dynkin_suite(
            model, res, cfg.seed, config, h=float(dyn.get("h", 0.02)), reps=int(dyn.get("reps", 100_000)),
            threads=cfg.threads,
        )
    for v in verdicts:
        print(v.line())
    doc = {
        "meta": {**meta, "horizon": cfg.horizon, "paths": paths},
        "meeting": summary,
        "dynkin": [v.to_dict() for v in verdicts],
        "passed": all(v.passed for v in verdicts),
    }
    artifacts.write(out / "summary.json", artifacts.dumps(doc))
    print(f"wrote {paths} coupled paths to {out}; merged {summary['merge']['count']}/{paths}")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_kernel(cfg: RunConfig, out: Path) -> int:
    model = cfg.model
    k = cfg["kernel"]
    n = int(k["count"])
    ys = np.linspace(0.0, float(k["y_max"]), int(k["points"]))
    rows = []
    worst = 0.0
    for i in model.states:
        for y in ys:
            y = float(y)
            F = float(holding_cdf(model, i, y, n))
            p = embedded_probs(model, i, y, n)
            total = 0.0
            for j in model.states:
                if j == i:
                    continue
                q = kernel(model, i, j, y, n)
                total += q
                rows.append((y, i, j, n, q, F, float(p[j - 1])))
            worst = max(worst, abs(total - F))
    meta = {**_meta(cfg), "count": n}
    artifacts.write(out / "kernel.csv", artifacts.table_csv(["y", "i", "j", "n", "Q", "F", "p"], rows, meta))
    verdict = Verdict("kernel/row_sum_equals_F", worst, 1e-8, worst < 1e-8, "max |sum_j Q_ij - F_i| over the grid")
    print(verdict.line())
    artifacts.write(out / "kernel.json", artifacts.dumps({"meta": meta, "verdicts": [verdict.to_dict()], "passed": verdict.passed}))
    return EXIT_OK if verdict.passed else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "couple": cmd_couple, "kernel": cmd_kernel}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="64-bit seed")
    common.add_argument("--stream-id", type=int, help="point-stream identifier")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--model", help="catalog model name (replaces the config model)")
    common.add_argument("--horizon", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="smpsde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="simulate trajectories")
    p.add_argument("--replications", type=int)
    p.add_argument("--sampler", choices=["prm", "oracle"])
    p.add_argument("--dump-points", action="store_true", default=None)
    p.add_argument("--force", action="store_true", default=None, help="simulate even if validation fails")
    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suites", help=f"comma-separated subset of {','.join(SUITES)}")
    p.add_argument("--samples", type=int)
    p = sub.add_parser("couple", parents=[common], help="simulate coupled pairs")
    p.add_argument("--paths", type=int)
    p.add_argument("--reps", type=int, help="Dynkin replications")
    p.add_argument("--force", action="store_true", default=None)
    p = sub.add_parser("kernel", parents=[common], help="tabulate Q, F and p")
    p.add_argument("--y-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--count", type=int)
    return parser


def _overrides(args) -> dict:
    o = {
        "seed": args.seed,
        "stream_id": args.stream_id,
        "out": args.out,
        "threads": args.threads,
        "horizon": args.horizon,
        "model": {"catalog": args.model} if args.model else None,
    }
    get = lambda name: getattr(args, name, None)  # noqa: E731
    o["replications"] = get("replications")
    if get("force"):
        o["validation"] = {"override": True}
    sim = {k: v for k, v in (("sampler", get("sampler")), ("dump_points", get("dump_points"))) if v is not None}
    if sim:
        o["simulate"] = sim
    ver = {k: v for k, v in (("suites", get("suites")), ("samples", get("samples"))) if v is not None}
    if ver:
        o["verify"] = ver
    cpl = {}
    if get("paths") is not None:
        cpl["paths"] = get("paths")
    if get("reps") is not None:
        cpl["dynkin"] = {"reps": get("reps")}
    if cpl:
        o["couple"] = cpl
    ker = {k: v for k, v in (("y_max", get("y_max")), ("points", get("points")), ("count", get("count"))) if v is not None}
    if ker:
        o["kernel"] = ker
    return o


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, Path(cfg["out"]))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
