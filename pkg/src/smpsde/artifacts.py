"""CSV and JSON writers.  Every file opens with ``# key: value`` metadata lines."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable

from . import __version__
from .coupling import CoupledPath
from .solver import Trajectory


def _num(x) -> str:
    return repr(float(x))


def header(meta: dict) -> str:
    lines = [f"# tool: smpsde {__version__}"]
    lines += [f"# {k}: {meta[k]}" for k in sorted(meta)]
    return "\n".join(lines) + "\n"


def trajectory_csv(traj: Trajectory, meta: dict) -> str:
    """Columns ``n, T_n, state``; row 0 is ``T_0 = -Y_0`` and the initial state."""
    buf = io.StringIO()
    buf.write(header({**meta, "sampler": traj.sampler, "horizon": _num(traj.horizon),
                      "initial_count": traj.initial.count}))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "T_n", "state"])
    w.writerow([0, _num(-traj.initial.age), traj.initial.state])
    for k, (t, x) in enumerate(zip(traj.times, traj.states), start=1):
        w.writerow([k, _num(t), x])
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[dict, list[tuple[int, float, int]]]:
    meta, rows = {}, []
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        else:
            body.append(line)
    reader = csv.reader(body)
    next(reader)
    for n, t, x in reader:
        rows.append((int(n), float(t), int(x)))
    return meta, rows


def coupled_csv(path: CoupledPath, meta: dict) -> str:
    """Columns ``time, which, state1, state2``; row 0 holds the initial states."""
    buf = io.StringIO()
    extra = {
        "horizon": _num(path.first.horizon),
        "merge_time": _num(path.merge_time),
        "meeting_time": _num(path.meeting_time),
        "initial1": f"{path.first.initial.state}/{_num(path.first.initial.age)}/{path.first.initial.count}",
        "initial2": f"{path.second.initial.state}/{_num(path.second.initial.age)}/{path.second.initial.count}",
    }
    buf.write(header({**meta, **extra}))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "which", "state1", "state2"])
    w.writerow([_num(0.0), "init", path.first.initial.state, path.second.initial.state])
    for e in path.events:
        w.writerow([_num(e.time), e.which, e.state1, e.state2])
    return buf.getvalue()


def table_csv(columns: list[str], rows: Iterable[Iterable], meta: dict) -> str:
    buf = io.StringIO()
    buf.write(header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
