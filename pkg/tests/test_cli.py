import csv
import json
import math

import pytest

from smpsde.artifacts import read_trajectory_csv
from smpsde.cli import main
from smpsde.config import ConfigError, RunConfig, model_from_dict


def read(path):
    return path.read_text()


def rows(path):
    return list(csv.DictReader(line for line in path.read_text().splitlines() if not line.startswith("#")))


def test_simulate_writes_paths_and_summary(tmp_path):
    out = tmp_path / "a"
    assert main(["simulate", "--model", "ctmc2", "--replications", "10", "--seed", "3", "--out", str(out)]) == 0
    paths = sorted(out.glob("path_*.csv"))
    assert len(paths) == 10
    meta, body = read_trajectory_csv(read(paths[0]))
    assert meta["seed"] == "3" and meta["model"] == "ctmc2" and "config_hash" in meta
    assert body[0] == (0, -0.0, 1)
    assert json.loads(read(out / "summary.json"))["meta"]["replications"] == 10


def test_simulate_rerun_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--model", "weibull3", "--replications", "4", "--out", str(tmp_path / name)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_oracle_sampler_runs(tmp_path):
    assert main(["simulate", "--sampler", "oracle", "--replications", "2", "--out", str(tmp_path)]) == 0
    assert "# sampler: oracle" in read(tmp_path / "path_00000.csv")


def test_zero_horizon_is_usage_error(tmp_path):
    assert main(["simulate", "--horizon", "0", "--out", str(tmp_path)]) == 2


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text(json.dumps({"initial": {"state": 7}}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_invalid_model_blocks_simulation_unless_forced(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"num_states": 2, "rates": [{"from": 2, "to": 1, "kind": "constant", "value": 1}],
                                         "sup_norms": [[0, 1], [1, 0]]}}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert main(["simulate", "--config", str(cfg), "--force", "--horizon", "2", "--out", str(tmp_path / "y")]) == 0
    _, body = read_trajectory_csv(read(tmp_path / "y" / "path_00000.csv"))
    assert len(body) == 1


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "horizon": 3.0, "model": {"catalog": "ctmc3"}}))
    rc = RunConfig.load(str(cfg), {"seed": 9})
    assert rc.seed == 9 and rc.horizon == 3.0 and rc.model.name == "ctmc3"
    assert RunConfig.from_dict({}, {"threads": 8}).config_hash == RunConfig.from_dict({}).config_hash


def test_explicit_model_document():
    m = model_from_dict({
        "num_states": 3,
        "rates": [
            {"from": 1, "to": 2, "kind": "constant", "value": 2.0},
            {"from": 2, "to": 3, "kind": "power_capped", "alpha": 1, "power": 2, "cap": 3},
            {"from": 3, "to": 1, "kind": "step", "breaks": [0, 1], "values": [[0.5, 2.0]]},
        ],
    })
    assert m.sup_norms[2, 0] == 2.0
    with pytest.raises(ConfigError):
        model_from_dict({"num_states": 2, "rates": [{"from": 1, "to": 2, "kind": "bogus"}]})


def test_verify_ctmc2_passes(tmp_path):
    assert main(["verify", "--model", "ctmc2", "--samples", "20000", "--out", str(tmp_path)]) == 0
    doc = json.loads(read(tmp_path / "verdicts.json"))
    assert doc["passed"] and len(doc["verdicts"]) > 20


def test_verify_corrupted_sup_norms_reports_layout_failure(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"catalog": "ctmc2", "sup_norms": [[0, 1], [3, 0]]}}))
    assert main(["verify", "--config", str(cfg), "--suites", "layout", "--out", str(tmp_path)]) == 1
    doc = json.loads(read(tmp_path / "verdicts.json"))
    failed = {v["name"] for v in doc["verdicts"] if not v["passed"]}
    assert "layout/disjoint" in failed


def test_verify_empty_or_unknown_suite(tmp_path):
    assert main(["verify", "--suites", "", "--out", str(tmp_path)]) == 2
    assert main(["verify", "--suites", "nope", "--out", str(tmp_path)]) == 2


def test_couple_identical_initials_merge_at_zero(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"couple": {"initial2": {"state": 1}, "paths": 20, "dynkin": {}}}))
    assert main(["couple", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads(read(tmp_path / "summary.json"))
    assert doc["meeting"]["merge"]["max"] == 0.0


def test_couple_same_state_merges_and_reports_dynkin(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"couple": {"initial2": {"state": 1, "age": 1.5}, "paths": 50,
                                          "dynkin": {"h": 0.02, "reps": 20000}}}))
    assert main(["couple", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads(read(tmp_path / "summary.json"))
    assert doc["meeting"]["merged_by_first_jump"] == 50
    assert doc["dynkin"] and all("se=" in v["detail"] for v in doc["dynkin"] if "/h=" in v["name"])
    assert len(list(tmp_path.glob("couple_*.csv"))) == 50


def test_kernel_table(tmp_path):
    assert main(["kernel", "--model", "ctmc2", "--y-max", "1", "--points", "3", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "kernel.csv")
    q = {(float(r["y"]), r["i"], r["j"]): float(r["Q"]) for r in table}
    assert q[(0.5, "1", "2")] == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert all(float(r["Q"]) == 0 and float(r["F"]) == 0 for r in table if float(r["y"]) == 0)
    assert json.loads(read(tmp_path / "kernel.json"))["passed"]


@pytest.mark.parametrize("cmd", [
    ["simulate", "--model", "ndecay", "--replications", "6"],
    ["simulate", "--model", "agelinear", "--replications", "3", "--sampler", "oracle"],
    ["couple", "--model", "split4", "--paths", "6", "--reps", "5000"],
    ["kernel", "--model", "weibull3", "--points", "6"],
    ["verify", "--model", "ctmc3", "--suites", "layout,identity,holding", "--samples", "2000"],
])
def test_outputs_independent_of_threads(tmp_path, cmd):
    for t in ("1", "8"):
        main(cmd + ["--threads", t, "--seed", "4", "--out", str(tmp_path / t)])
    files = sorted(p.name for p in (tmp_path / "1").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "8").iterdir())
    for name in files:
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "8" / name).read_bytes()
