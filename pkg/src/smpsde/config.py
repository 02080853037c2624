"""JSON run configuration and rate-model documents.

Model document, either a catalog entry::

    {"catalog": "weibull3", "params": {"alpha": 1.0, "power": 2.0}}

or an explicit table of pair rates::

    {"num_states": 3,
     "rates": [{"from": 1, "to": 2, "kind": "constant", "value": 2.0},
               {"from": 2, "to": 1, "kind": "linear_capped", "alpha": 1.0, "cap": 2.0},
               {"from": 3, "to": 1, "kind": "step", "breaks": [0, 1], "values": [[0.5, 2.0]],
                "count_classes": [0]}],
     "sup_norms": [[0, 2, 0], [2, 0, 0], [2, 0, 0]]}

``sup_norms`` is optional; when omitted the exact sup-norms of the shapes
are used.  Pair kinds: ``constant`` (value), ``linear_capped`` (alpha, cap),
``power_capped`` (alpha, power, cap), ``count_decay`` (alpha) and ``step``
(breaks, values, count_classes).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from . import catalog
from .rates import Constant, CountDecay, LinearCapped, PowerCapped, RateModel, StepTable
from .solver import Initial


class ConfigError(ValueError):
    pass


SHAPES = {
    "constant": lambda d: Constant(float(d["value"])),
    "linear_capped": lambda d: LinearCapped(float(d["alpha"]), float(d["cap"])),
    "power_capped": lambda d: PowerCapped(float(d["alpha"]), float(d["power"]), float(d["cap"])),
    "count_decay": lambda d: CountDecay(float(d["alpha"])),
    "step": lambda d: StepTable(
        tuple(float(b) for b in d["breaks"]),
        tuple(tuple(float(v) for v in row) for row in d["values"]),
        tuple(int(c) for c in d.get("count_classes", [0])),
    ),
}


def model_from_dict(doc: dict) -> RateModel:
    try:
        if "catalog" in doc:
            model = catalog.build(doc["catalog"], **doc.get("params", {}))
            if "sup_norms" in doc:
                model = RateModel(model.num_states, {p: model.shape(*p) for p in _pairs(model)}, doc["sup_norms"], name=model.name)
            return model
        K = int(doc["num_states"])
        rates = {}
        for entry in doc.get("rates", []):
            pair = (int(entry["from"]), int(entry["to"]))
            if pair in rates:
                raise ConfigError(f"duplicate rate entry for {pair}")
            kind = entry.get("kind")
            if kind not in SHAPES:
                raise ConfigError(f"unknown rate kind {kind!r}; choose from {sorted(SHAPES)}")
            rates[pair] = SHAPES[kind](entry)
        return RateModel(K, rates, doc.get("sup_norms"), name=doc.get("name", "custom"))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad model document: {exc}") from None


def _pairs(model: RateModel):
    return [(i, j) for i in model.states for j in model.states if i != j]


def initial_from_dict(doc: dict | None, num_states: int, default_state: int = 1) -> Initial:
    doc = doc or {}
    try:
        z = Initial(int(doc.get("state", default_state)), float(doc.get("age", 0.0)), int(doc.get("count", 0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad initial condition: {exc}") from None
    if not 1 <= z.state <= num_states:
        raise ConfigError(f"initial state {z.state} outside 1..{num_states}")
    return z


def canonical_hash(doc: Any) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]


DEFAULTS: dict[str, Any] = {
    "model": {"catalog": "ctmc2"},
    "seed": 0,
    "stream_id": 0,
    "horizon": 10.0,
    "replications": 10,
    "threads": 1,
    "out": "out",
    "initial": {"state": 1, "age": 0.0, "count": 0},
    "validation": {"y_check": 10.0, "gamma_min": 1.0, "override": False},
    "simulate": {"sampler": "prm", "dump_points": False},
    "couple": {
        "initial1": {"state": 1, "age": 0.0, "count": 0},
        "initial2": {"state": 2, "age": 0.0, "count": 0},
        "paths": 100,
        "dynkin": {"h": 0.02, "reps": 100_000},
    },
    "kernel": {"y_max": 5.0, "points": 51, "count": 0},
    "verify": {"suites": None, "samples": 100_000},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "model":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    raw: dict
    model: RateModel = field(init=False)

    def __post_init__(self):
        self.model = model_from_dict(self.raw["model"])
        if not float(self.raw["horizon"]) > 0:
            raise ConfigError("horizon must be positive")
        if int(self.raw["replications"]) < 1:
            raise ConfigError("replications must be at least 1")
        if int(self.raw["threads"]) < 1:
            raise ConfigError("threads must be at least 1")
        if int(self.raw["seed"]) < 0 or int(self.raw["stream_id"]) < 0:
            raise ConfigError("seed and stream_id must be nonnegative")
        self.initial  # validates
        self.couple_initials

    @classmethod
    def from_dict(cls, doc: dict | None = None, overrides: dict | None = None) -> "RunConfig":
        raw = _merge(DEFAULTS, doc or {})
        raw = _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            return cls(raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> "RunConfig":
        doc = {}
        if path:
            try:
                with open(path) as fh:
                    doc = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
            if not isinstance(doc, dict):
                raise ConfigError("config document must be a JSON object")
        return cls.from_dict(doc, overrides)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def stream_id(self) -> int:
        return int(self.raw["stream_id"])

    @property
    def horizon(self) -> float:
        return float(self.raw["horizon"])

    @property
    def threads(self) -> int:
        return int(self.raw["threads"])

    @property
    def initial(self) -> Initial:
        return initial_from_dict(self.raw["initial"], self.model.num_states)

    @property
    def couple_initials(self) -> tuple[Initial, Initial]:
        c = self.raw["couple"]
        K = self.model.num_states
        return initial_from_dict(c["initial1"], K), initial_from_dict(c["initial2"], K, default_state=min(2, K))

    @property
    def config_hash(self) -> str:
        # threads and output location do not affect results
        return canonical_hash({k: v for k, v in self.raw.items() if k not in ("threads", "out")})

    @property
    def model_hash(self) -> str:
        return canonical_hash(self.raw["model"])
