"""Scenario configuration: JSON schema, loading, overrides and assembly."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .expr import ExprSyntaxError
from .force import ForceField, make_force
from .model import InitialData, PeriodicProfile, StringParams, ValidationError, make_params
from .oscillator import DEFAULT_STEPS_PER_PERIOD, OdeProblem
from .reduction import Drive, IncomingScenario, build_drive, incoming_wave_data

_POS = {"type": "number", "exclusiveMinimum": 0}
_TOL = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_POS_INT = {"type": "integer", "minimum": 1}
_PROFILE = {
    "type": "object",
    "properties": {
        "mean": {"type": "number"},
        "cos": {"type": "array", "items": {"type": "number"}},
        "sin": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lambstring scenario",
    "type": "object",
    "required": ["params", "force", "period"],
    "properties": {
        "name": {"type": "string"},
        "params": {
            "type": "object",
            "required": ["mu", "kappa", "m"],
            "properties": {"mu": _POS, "kappa": _POS, "m": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "force": {"type": "string"},
        "force_interval": {
            "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2,
        },
        "period": _POS,
        "initial_data": {
            "type": "object",
            "required": ["u0_plus", "u0_minus", "u1_plus", "u1_minus"],
            "properties": {
                "u0_plus": _PROFILE, "u0_minus": _PROFILE,
                "u1_plus": _PROFILE, "u1_minus": _PROFILE,
                "y1": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "incoming_wave": {
            "type": "object",
            "required": ["p", "p0"],
            "properties": {"p": _PROFILE, "p0": {"type": "number"}},
            "additionalProperties": False,
        },
        "numerics": {
            "type": "object",
            "properties": {
                "h": _POS,
                "n_iter": _POS_INT,
                "grid": _POS_INT,
                "burn_in": _POS_INT,
                "keep": _POS_INT,
                "tol": _TOL,
                "tol_attr": _TOL,
                "R": _POS,
                "cells": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "horizon_periods": _POS_INT,
                "frame_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "bracket_grid": {"type": "integer", "minimum": 3},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "oneOf": [
        {"required": ["initial_data"], "not": {"required": ["incoming_wave"]}},
        {"required": ["incoming_wave"], "not": {"required": ["initial_data"]}},
    ],
    "additionalProperties": False,
}

DEFAULT_NUMERICS = {
    "h": None,
    "n_iter": 1000,
    "grid": 17,
    "burn_in": 200,
    "keep": 100,
    "tol": 1e-10,
    "tol_attr": 1e-6,
    "R": 5.0,
    "cells": 2048,
    "horizon_periods": 10,
    "frame_times": None,
    "bracket_grid": 512,
}


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def demo_names() -> list[str]:
    root = resources.files("lambstring") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_config(source: str | Path) -> dict:
    """Load a JSON config from a path, or a shipped demo via ``demo:NAME``."""
    src = str(source)
    try:
        if src.startswith("demo:"):
            name = src[5:]
            text = (resources.files("lambstring") / "configs" / f"{name}.json").read_text()
        else:
            text = Path(src).read_text()
    except (FileNotFoundError, OSError) as exc:
        raise ConfigError(f"cannot read config {src!r}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{src}: invalid JSON ({exc})") from exc


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc


def with_overrides(doc: dict, **overrides) -> dict:
    """Copy of ``doc`` with numerics (or ``out`` -> output.dir) replaced; None is ignored."""
    out = copy.deepcopy(doc)
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "out":
            out.setdefault("output", {})["dir"] = str(val)
        else:
            out.setdefault("numerics", {})[key] = val
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    params: StringParams
    force: ForceField
    period: float
    data: InitialData
    drive: Drive
    incoming: IncomingScenario | None
    numerics: dict
    out_dir: str

    @property
    def problem(self) -> OdeProblem:
        return OdeProblem(self.params, self.force, self.drive)

    @property
    def h(self) -> float:
        return self.numerics["h"] or self.problem.omega0 / DEFAULT_STEPS_PER_PERIOD

    @property
    def initial_state(self) -> tuple[float, float]:
        return self.data.y0, (self.data.y1 if self.params.m > 0 else 0.0)


def build_scenario(doc: dict) -> Scenario:
    """Validate ``doc`` and assemble the model objects; raises ConfigError."""
    validate(doc)
    num = dict(DEFAULT_NUMERICS)
    num.update(doc.get("numerics", {}))
    w = float(doc["period"])
    lo, hi = doc.get("force_interval", [-10.0, 10.0])
    try:
        params = make_params(**doc["params"])
        force = make_force(doc["force"], lo, hi)
    except ExprSyntaxError as exc:
        raise ConfigError(f"force: {exc}") from exc
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    def prof(d):
        return PeriodicProfile.from_dict(w, d)

    try:
        if "initial_data" in doc:
            block = doc["initial_data"]
            data = InitialData(prof(block["u0_plus"]), prof(block["u0_minus"]),
                               prof(block["u1_plus"]), prof(block["u1_minus"]),
                               float(block.get("y1", 0.0)))
            drive = build_drive(data, params)
            incoming = None
        else:
            block = doc["incoming_wave"]
            incoming = incoming_wave_data(prof(block["p"]), float(block["p0"]), params, force)
            data, drive = incoming.data, incoming.drive
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    if not all(math.isfinite(v) for v in (params.a, w)):
        raise ConfigError("non-finite parameters")
    out_dir = doc.get("output", {}).get("dir", "out")
    return Scenario(doc.get("name", "scenario"), params, force, w, data, drive, incoming, num,
                    out_dir)


def load_scenario(source: str | Path, **overrides) -> Scenario:
    return build_scenario(with_overrides(read_config(source), **overrides))
