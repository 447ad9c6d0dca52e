"""Run configuration: YAML ingestion, validation and model construction.

Every physical quantity is written as ``{value: <number>, unit: cm-1}`` or
``{value: <number>, unit: rad_per_fs}``; bare numbers are rejected for
quantities so the unit is always explicit. Times (``t1``, ``max_step``,
``record_stride``) are plain numbers in fs.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .dynamics import IntegratorConfig
from .model import UNITS, RatchetModel, VibronAnsatz

UNIT_NAMES = ("cm-1", "rad_per_fs")
DEFAULT_GAMMAS = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
SWEEP_AXES = ("h_v1", "h_v2", "coupling_J", "omega1", "omega2", "threshold")

_MODEL_KEYS = {
    "coupling_J", "h_q0", "h_v1", "h_v2", "omega1", "omega2", "t1", "dim",
    "vectors", "feedback",
}
_VECTOR_KEYS = {"unit", "h1", "h2", "q0", "v1", "v2"}
_INTEGRATOR_DEFAULTS = {"rel_tol": 1e-11, "abs_tol": 1e-11, "max_step": None, "record_stride": 0.5}
_EXPERIMENT_DEFAULTS = {
    "threshold": 0.5,
    "horizon_periods": 3,
    "perturbation": 0.5,
    "initial_state": 1,
    "gammas": DEFAULT_GAMMAS,
    "lz_residual": 0.004,
    "sweep": None,
    "t2": None,
}
_OUTPUT_DEFAULTS = {
    "trajectory_csv": "trajectory.csv",
    "reverse_csv": "reverse_trajectory.csv",
    "summary_json": "summary.json",
    "table_csv": "table.csv",
}
_TOP_KEYS = {"model", "integrator", "experiment", "output", "fixture_version"}


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _number(x: Any, where: str) -> float:
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError:
            pass
    raise ConfigError(f"{where}: expected a number, got {x!r}")


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r}")


def quantity(q: Any, where: str) -> float:
    """Convert a ``{value, unit}`` mapping to rad/fs."""
    if not isinstance(q, dict):
        raise ConfigError(f"{where}: expected {{value, unit}}, got {q!r}")
    _check_keys(q, {"value", "unit"}, where)
    if "value" not in q or "unit" not in q:
        raise ConfigError(f"{where}: both 'value' and 'unit' are required")
    value = _number(q["value"], f"{where}.value")
    unit = q["unit"]
    if unit == "cm-1":
        return UNITS.to_angular(value)
    if unit == "rad_per_fs":
        return value
    raise ConfigError(f"{where}.unit: must be one of {UNIT_NAMES}, got {unit!r}")


def parse_text(text: str, source: str = "<config>") -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error at {where}: {problem}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    # a summary file re-runs from its embedded configuration
    if {"config", "results"} <= set(data):
        data = data["config"]
    return data


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``resolved`` is the defaults-filled echo."""

    resolved: dict

    @property
    def model_section(self) -> dict:
        return self.resolved["model"]

    @property
    def experiment(self) -> dict:
        return self.resolved["experiment"]

    @property
    def output(self) -> dict:
        return self.resolved["output"]

    @property
    def fixture_version(self) -> Optional[str]:
        return self.resolved.get("fixture_version")

    def integrator(self) -> IntegratorConfig:
        s = self.resolved["integrator"]
        return IntegratorConfig(
            rel_tol=s["rel_tol"], abs_tol=s["abs_tol"], max_step=s["max_step"],
            record_stride=s["record_stride"],
        )

    def model(self) -> RatchetModel:
        return build_model(self.model_section)

    def to_json(self) -> str:
        return json.dumps(self.resolved, sort_keys=True)


def _validate_model(m: dict) -> dict:
    _check_keys(m, _MODEL_KEYS, "model")
    out = copy.deepcopy(m)
    if "coupling_J" not in m:
        raise ConfigError("model.coupling_J: required field missing")
    if "omega1" not in m:
        raise ConfigError("model.omega1: required field missing")
    for key in ("coupling_J", "omega1", "h_q0", "h_v1", "h_v2", "omega2"):
        if key in m:
            quantity(m[key], f"model.{key}")
            out[key] = {"value": float(m[key]["value"]), "unit": m[key]["unit"]}
    if quantity(m["coupling_J"], "model.coupling_J") < 0:
        raise ConfigError("model.coupling_J: must be non-negative")
    if quantity(m["omega1"], "model.omega1") <= 0:
        raise ConfigError("model.omega1: must be positive")
    out["t1"] = _number(m.get("t1", 0.0), "model.t1")
    feedback = m.get("feedback", True)
    if not isinstance(feedback, bool):
        raise ConfigError("model.feedback: expected true or false")
    out["feedback"] = feedback

    if "vectors" in m:
        clash = sorted({"h_q0", "h_v1", "h_v2", "dim"} & set(m))
        if clash:
            raise ConfigError(f"model.{clash[0]}: not allowed together with model.vectors")
        vec = m["vectors"]
        _check_keys(vec, _VECTOR_KEYS, "model.vectors")
        for key in ("unit", "h1", "h2", "q0", "v1"):
            if key not in vec:
                raise ConfigError(f"model.vectors.{key}: required field missing")
        if vec["unit"] not in UNIT_NAMES:
            raise ConfigError(f"model.vectors.unit: must be one of {UNIT_NAMES}")
        dims = set()
        for key in ("h1", "h2", "q0", "v1", "v2"):
            if key in vec:
                if not isinstance(vec[key], list) or not vec[key]:
                    raise ConfigError(f"model.vectors.{key}: expected a non-empty list")
                out["vectors"][key] = [_number(x, f"model.vectors.{key}") for x in vec[key]]
                dims.add(len(vec[key]))
        if len(dims) != 1:
            raise ConfigError("model.vectors: all vectors must share one dimension")
        if "v2" in vec and "omega2" not in m:
            raise ConfigError("model.omega2: required when model.vectors.v2 is given")
    else:
        for key in ("h_q0", "h_v1"):
            if key not in m:
                raise ConfigError(f"model.{key}: required field missing")
        if "h_v2" in m and "omega2" not in m:
            raise ConfigError("model.omega2: required when model.h_v2 is given")
        dim = m.get("dim", 2)
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ConfigError("model.dim: expected a positive integer")
        out["dim"] = dim
    return out


def build_model(m: dict) -> RatchetModel:
    """Construct a model from a validated ``model`` section."""
    J = quantity(m["coupling_J"], "model.coupling_J")
    w1 = quantity(m["omega1"], "model.omega1")
    w2 = quantity(m["omega2"], "model.omega2") if "omega2" in m else None
    t1 = m.get("t1", 0.0)
    feedback = m.get("feedback", True)
    if "vectors" in m:
        vec = m["vectors"]
        scale = UNITS.to_angular(1.0) if vec["unit"] == "cm-1" else 1.0
        q0 = scale * np.asarray(vec["q0"], dtype=float)
        v1 = VibronAnsatz(q0, scale * np.asarray(vec["v1"], dtype=float), w1, t1)
        v2 = None
        if "v2" in vec:
            v2 = VibronAnsatz(np.zeros(len(q0)), scale * np.asarray(vec["v2"], dtype=float), w2, None)
        return RatchetModel(tuple(vec["h1"]), tuple(vec["h2"]), J, v1, v2, feedback)
    h_v2 = quantity(m["h_v2"], "model.h_v2") if "h_v2" in m else None
    return RatchetModel.from_projections(
        quantity(m["h_q0"], "model.h_q0"),
        quantity(m["h_v1"], "model.h_v1"),
        w1, J, h_v2, w2, t1=t1, dim=m.get("dim", 2), feedback_enabled=feedback,
    )


def _validate_sweep(s: Any) -> Optional[dict]:
    if s is None:
        return None
    _check_keys(s, {"axes"}, "experiment.sweep")
    axes = s.get("axes")
    if not isinstance(axes, dict) or not axes:
        raise ConfigError("experiment.sweep.axes: expected a non-empty mapping")
    out = {}
    for name, axis in axes.items():
        where = f"experiment.sweep.axes.{name}"
        if name not in SWEEP_AXES:
            raise ConfigError(f"{where}: unknown axis (allowed: {', '.join(SWEEP_AXES)})")
        _check_keys(axis, {"values", "unit"}, where)
        vals = axis.get("values")
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{where}.values: expected a non-empty list")
        vals = [_number(v, f"{where}.values") for v in vals]
        entry = {"values": vals}
        if name == "threshold":
            if "unit" in axis:
                raise ConfigError(f"{where}.unit: threshold is dimensionless")
        else:
            if axis.get("unit") not in UNIT_NAMES:
                raise ConfigError(f"{where}.unit: must be one of {UNIT_NAMES}")
            entry["unit"] = axis["unit"]
        out[name] = entry
    return {"axes": out}


def validate(data: dict) -> RunConfig:
    _check_keys(data, _TOP_KEYS, "config")
    if "model" not in data:
        raise ConfigError("model: required section missing")
    resolved: dict = {"model": _validate_model(data["model"])}

    integ = data.get("integrator") or {}
    _check_keys(integ, set(_INTEGRATOR_DEFAULTS), "integrator")
    ri = dict(_INTEGRATOR_DEFAULTS)
    for key, val in integ.items():
        ri[key] = None if (key == "max_step" and val is None) else _number(val, f"integrator.{key}")
    try:
        IntegratorConfig(ri["rel_tol"], ri["abs_tol"], ri["max_step"], ri["record_stride"])
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from None
    resolved["integrator"] = ri

    exp = data.get("experiment") or {}
    _check_keys(exp, set(_EXPERIMENT_DEFAULTS), "experiment")
    re_ = copy.deepcopy(_EXPERIMENT_DEFAULTS)
    for key, val in exp.items():
        where = f"experiment.{key}"
        if key == "gammas":
            if not isinstance(val, list) or not val:
                raise ConfigError(f"{where}: expected a non-empty list")
            re_[key] = [_number(g, where) for g in val]
            if any(not 0 < g <= 3 for g in re_[key]):
                raise ConfigError(f"{where}: values must lie in (0, 3]")
        elif key == "sweep":
            re_[key] = _validate_sweep(val)
        elif key == "t2":
            re_[key] = None if val is None else _number(val, where)
        elif key in ("horizon_periods", "initial_state"):
            n = _number(val, where)
            if n != int(n):
                raise ConfigError(f"{where}: expected an integer")
            re_[key] = int(n)
        else:
            re_[key] = _number(val, where)
    if not 0 < re_["threshold"] <= 1:
        raise ConfigError("experiment.threshold: must lie in (0, 1]")
    if re_["horizon_periods"] < 1:
        raise ConfigError("experiment.horizon_periods: must be >= 1")
    if re_["initial_state"] not in (1, 2):
        raise ConfigError("experiment.initial_state: must be 1 or 2")
    if not 0 <= re_["perturbation"] < 1:
        raise ConfigError("experiment.perturbation: must lie in [0, 1)")
    resolved["experiment"] = re_

    outp = data.get("output") or {}
    _check_keys(outp, set(_OUTPUT_DEFAULTS), "output")
    ro = dict(_OUTPUT_DEFAULTS)
    for key, val in outp.items():
        if not isinstance(val, str) or not val:
            raise ConfigError(f"output.{key}: expected a file name")
        ro[key] = val
    resolved["output"] = ro
    if "fixture_version" in data:
        resolved["fixture_version"] = str(data["fixture_version"])
    return RunConfig(resolved)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from exc
    return validate(parse_text(text, str(path)))
