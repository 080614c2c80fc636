"""JSON run configuration: schema, defaults and round-tripping."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .bounds import Modulus
from .evolve import SimConfig
from .grid import ConfigurationError
from .quadrature import QuadratureConfig

__all__ = ["RunConfig", "parse_config", "config_from_dict", "expand_dotted", "SUITES", "SCHEMA"]

SUITES = ("operators", "bounds", "theorems")

_number = {"type": "number"}
_opt_number = {"type": ["number", "null"]}

_INIT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["constant", "sine", "sines", "gaussian", "table", "random"]},
        "a": _number,
        "k": _number,
        "phase": _number,
        "c": _number,
        "terms": {"type": "array", "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 3}},
        "sigma": _number,
        "center": _number,
        "values": {"type": "array", "items": _number},
        "seed": {"type": "integer"},
        "kmax": {"type": "integer", "minimum": 1},
        "decay": _number,
    },
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "init", "t_end"],
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N", "L"],
            "properties": {"N": {"type": "integer"}, "L": {"type": "number", "exclusiveMinimum": 0}},
        },
        "init": _INIT,
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "cfl_safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "output_stride": {"type": "integer", "minimum": 1},
        "ledger_ps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}},
        "slope_threshold": {"type": "number", "exclusiveMinimum": 0},
        "envelope_tol": {"type": "number", "minimum": 0},
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha_spacing": _opt_number,
                "truncation_radius": _opt_number,
                "tail_correction": {"type": "boolean"},
            },
        },
        "modulus": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["power", "capped_power", "table"]},
                "K": _number,
                "beta": _number,
                "cap": _opt_number,
                "distances": {"type": "array", "items": _number},
                "values": {"type": "array", "items": _number},
            },
        },
        "output_dir": {"type": "string"},
        "seed": {"type": "integer"},
        "suite": {"enum": list(SUITES)},
        "twin": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eps0": {"type": "number", "minimum": 0}, "bump": _INIT},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "random_profiles": {"type": "integer", "minimum": 0},
                "kmax": {"type": "integer", "minimum": 1},
                "amplitude": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "debug": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "inject_nan_step": {"type": ["integer", "null"], "minimum": 1},
                "bound_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


def expand_dotted(raw: Mapping[str, Any]) -> dict[str, Any]:
    """Turn ``{"grid.N": 8}`` into ``{"grid": {"N": 8}}``; nested input passes through."""
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, Mapping):
            value = expand_dotted(value)
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"key {key!r} conflicts with a scalar at {part!r}")
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf].update(value)
        else:
            node[leaf] = value
    return out


def _validate(doc: Mapping[str, Any]) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {path}: {err.message}")


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig
    output_dir: str
    seed: int
    suite: str
    modulus: Modulus
    twin_eps0: float
    twin_bump: Mapping[str, Any] | None
    random_profiles: int
    profile_kmax: int
    profile_amplitude: float
    bound_scale: float
    effective: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(dict(self.effective))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def config_from_dict(raw: Mapping[str, Any]) -> RunConfig:
    doc = expand_dotted(raw)
    _validate(doc)
    doc = copy.deepcopy(doc)
    grid = doc["grid"]
    L, N = float(grid["L"]), int(grid["N"])
    quad = doc.setdefault("quadrature", {})
    if quad.get("alpha_spacing") is None:
        quad["alpha_spacing"] = 2.0 * L / N
    if quad.get("truncation_radius") is None:
        quad["truncation_radius"] = 8.0 * L
    quad.setdefault("tail_correction", True)
    doc.setdefault("cfl_safety", 0.1)
    doc.setdefault("output_stride", 10)
    doc.setdefault("ledger_ps", [2.0, 1.5])
    doc.setdefault("slope_threshold", 10.0)
    doc.setdefault("envelope_tol", 1e-6)
    mod = doc.setdefault("modulus", {})
    mod.setdefault("family", "capped_power")
    mod.setdefault("K", 1.0)
    mod.setdefault("beta", 0.5)
    mod.setdefault("cap", None)
    doc.setdefault("output_dir", "muskat_out")
    doc.setdefault("seed", 0)
    doc.setdefault("suite", "operators")
    twin = doc.setdefault("twin", {})
    twin.setdefault("eps0", 0.0)
    ver = doc.setdefault("verify", {})
    ver.setdefault("random_profiles", 5)
    ver.setdefault("kmax", max(1, min(16, N // 8)))
    ver.setdefault("amplitude", 0.3)
    dbg = doc.setdefault("debug", {})
    dbg.setdefault("inject_nan_step", None)
    dbg.setdefault("bound_scale", 1.0)
    _validate(doc)

    q = QuadratureConfig(
        alpha_spacing=float(quad["alpha_spacing"]),
        truncation_radius=float(quad["truncation_radius"]),
        tail_correction=bool(quad["tail_correction"]),
    )
    try:
        sim = SimConfig(
            N=N,
            L=L,
            init=doc["init"],
            t_end=float(doc["t_end"]),
            cfl_safety=float(doc["cfl_safety"]),
            output_stride=int(doc["output_stride"]),
            ledger_ps=tuple(doc["ledger_ps"]),
            quadrature=q,
            slope_threshold=float(doc["slope_threshold"]),
            envelope_tol=float(doc["envelope_tol"]),
            inject_nan_step=dbg["inject_nan_step"],
        )
        sim.grid
        q.resolve(sim.grid)
        modulus = Modulus(
            family=mod["family"],
            K=float(mod["K"]),
            beta=float(mod["beta"]),
            cap=None if mod["cap"] is None else float(mod["cap"]),
            distances=tuple(mod.get("distances", ())),
            values=tuple(mod.get("values", ())),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"config error: {exc}") from exc
    return RunConfig(
        sim=sim,
        output_dir=doc["output_dir"],
        seed=int(doc["seed"]),
        suite=doc["suite"],
        modulus=modulus,
        twin_eps0=float(twin["eps0"]),
        twin_bump=twin.get("bump"),
        random_profiles=int(ver["random_profiles"]),
        profile_kmax=int(ver["kmax"]),
        profile_amplitude=float(ver["amplitude"]),
        bound_scale=float(dbg["bound_scale"]),
        effective=doc,
    )


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return config_from_dict(raw)
