"""JSON experiment configuration.

Example::

    {
      "params": {"n": 20, "p_t_w": 5, "p_j_w": 1, "alpha": 0.3,
                 "sigma_w2_db": -5, "sigma_c2_db": -5, "sigma_b2_db": -5},
      "sim": {"trials": 100000, "seed": 7, "mode": "formula_consistent"},
      "sweep": {"variable": "n", "values": [1, 5, 10]},
      "lambda": [0.5, 1.0, 2.0],
      "output_path": "out.csv"
    }

Noise variances and powers carry their unit in the key: ``<name>_db``
(dB, or dBW for powers) or ``<name>_w`` (linear). Powers also accept the
bare name as watts. At most one spelling per quantity may appear.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParameterError
from .model import SystemParams, db_to_linear
from .montecarlo import SimConfig

UNIT_FIELDS = ("sigma_w2", "sigma_c2", "sigma_b2", "p_t", "p_j", "p_max")
_NOISE = ("sigma_w2", "sigma_c2", "sigma_b2")
_PARAM_FIELDS = {f.name for f in dataclasses.fields(SystemParams)}
_SIM_FIELDS = {f.name for f in dataclasses.fields(SimConfig)}
_TOP_KEYS = {"params", "sim", "sweep", "lambda", "output_path", "epsilon_c", "detection_model", "grid_size", "tol"}


class ConfigError(InvalidParameterError):
    """Configuration problem; ``where`` names the offending line or field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Sweep:
    variable: str
    values: list


@dataclass
class ExperimentConfig:
    params: SystemParams = field(default_factory=SystemParams)
    sim: SimConfig = field(default_factory=SimConfig)
    sweep: Sweep | None = None
    lambdas: list[float] | None = None
    epsilon_c: list[float] | None = None
    detection_model: str = "exact"
    grid_size: int = 32
    tol: float = 1e-4
    output_path: str | None = None

    def points(self):
        """(sweep value, params, sim) for every sweep point, or one point without a sweep."""
        if self.sweep is None:
            yield None, self.params, self.sim
            return
        for i, v in enumerate(self.sweep.values):
            if self.sweep.variable in _SIM_FIELDS:
                yield v, self.params, _build(SimConfig, f"sweep.values[{i}]", {**_asdict(self.sim), self.sweep.variable: v})
            else:
                yield v, _build(SystemParams, f"sweep.values[{i}]", {**_asdict(self.params), self.sweep.variable: v}), self.sim


def _asdict(obj):
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}


def _build(cls, where, kwargs):
    try:
        return cls(**kwargs)
    except InvalidParameterError as exc:
        raise ConfigError(where, str(exc)) from None
    except TypeError as exc:
        raise ConfigError(where, str(exc)) from None


def _number(where, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    return value


def parse_params(raw: dict, where: str = "params") -> dict:
    """Resolve unit-tagged keys to SystemParams keyword arguments (watts)."""
    if not isinstance(raw, dict):
        raise ConfigError(where, "expected an object")
    out = {}
    seen = {}
    for key, value in raw.items():
        loc = f"{where}.{key}"
        base, unit = key, None
        for suffix in ("_db", "_w"):
            if key.endswith(suffix) and key[: -len(suffix)] in UNIT_FIELDS:
                base, unit = key[: -len(suffix)], suffix[1:]
        if base in _NOISE and unit is None:
            raise ConfigError(loc, f"noise variance needs a unit suffix: {base}_db or {base}_w")
        if base not in _PARAM_FIELDS:
            raise ConfigError(loc, "unknown parameter")
        if base in seen:
            raise ConfigError(loc, f"conflicts with {where}.{seen[base]}; give exactly one of each unit pair")
        seen[base] = key
        value = _number(loc, value)
        out[base] = db_to_linear(value) if unit == "db" else value
    return out


def parse_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(source, "top level must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: {sorted(unknown)[0]}", "unknown top-level key")
    params = _build(SystemParams, "params", parse_params(data.get("params", {})))
    sim_raw = data.get("sim", {})
    if not isinstance(sim_raw, dict):
        raise ConfigError("sim", "expected an object")
    for key in sim_raw:
        if key not in _SIM_FIELDS:
            raise ConfigError(f"sim.{key}", "unknown field")
    sim = _build(SimConfig, "sim", sim_raw)

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        if not isinstance(s, dict) or set(s) != {"variable", "values"}:
            raise ConfigError("sweep", "expected {\"variable\": ..., \"values\": [...]}")
        var, vals = s["variable"], s["values"]
        if var not in _PARAM_FIELDS | _SIM_FIELDS:
            raise ConfigError("sweep.variable", f"{var!r} is not a SystemParams or SimConfig field")
        if not isinstance(vals, list) or not vals:
            raise ConfigError("sweep.values", "grid must be a non-empty list")
        for i, v in enumerate(vals):
            _number(f"sweep.values[{i}]", v)
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ConfigError("sweep.values", "grid must be strictly monotone")
        sweep = Sweep(var, list(vals))

    def number_list(key):
        if key not in data:
            return None
        vals = data[key] if isinstance(data[key], list) else [data[key]]
        if not vals:
            raise ConfigError(key, "must be non-empty")
        return [float(_number(f"{key}[{i}]", v)) for i, v in enumerate(vals)]

    cfg = ExperimentConfig(params, sim, sweep, number_list("lambda"), number_list("epsilon_c"))
    for eps in cfg.epsilon_c or []:
        if not 0 < eps < 1:
            raise ConfigError("epsilon_c", f"must lie in (0, 1), got {eps}")
    if "detection_model" in data:
        if data["detection_model"] not in ("exact", "paper"):
            raise ConfigError("detection_model", "must be 'exact' or 'paper'")
        cfg.detection_model = data["detection_model"]
    if "grid_size" in data:
        gs = data["grid_size"]
        if isinstance(gs, bool) or not isinstance(gs, int) or gs < 8:
            raise ConfigError("grid_size", f"must be an integer >= 8, got {gs!r}")
        cfg.grid_size = gs
    if "tol" in data:
        cfg.tol = float(_number("tol", data["tol"]))
        if not cfg.tol > 0:
            raise ConfigError("tol", "must be > 0")
    if "output_path" in data:
        if not isinstance(data["output_path"], str):
            raise ConfigError("output_path", "expected a string")
        cfg.output_path = data["output_path"]
    if sweep is not None:
        list(cfg.points())  # validate every sweep point up front
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(data, str(path))
