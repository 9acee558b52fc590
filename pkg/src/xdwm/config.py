"""Run configuration: TOML files with SI values and unit suffixes.

Lengths and times may be written as strings with a suffix (``"24nm"``,
``"1.5ns"``); plain numbers are SI. Example::

    experiment = "velocity"
    seed = 0

    [geometry]
    kind = "plain_wire"
    n_domains = 8

    [material]
    alpha = 0.02

    [velocity]
    j = [5.5e11, 1.1e12]
    duration = "1ns"
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import tomli

from .geometry import GeometryError, GeometrySpec
from .llg import SolverConfig
from .material import MaterialParams

EXPERIMENTS = ("relax", "velocity", "shift-window", "stability-map", "fig3-demo", "leakage",
               "array-replay")

UNITS = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "m": 1.0, "ps": 1e-12, "ns": 1e-9, "us": 1e-6,
         "s": 1.0, "kohm": 1e3, "Mohm": 1e6, "ohm": 1.0, "uA": 1e-6, "mA": 1e-3, "A": 1.0}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]+)\s*$")

# experiment-specific sections and their defaults
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "relax": {"max_steps": 20000, "pattern": None},
    "velocity": {"j": [1.1e12], "duration": 1e-9, "samples": 41, "discard": 0.2},
    "shift-window": {"j": [], "pulse_factor": 1.5, "pulse_j": 1.1e12, "settle": 1e-9,
                     "pre": 0.5e-9, "relax_steps": 2000, "boundary_index": None, "compare_plain": False},
    "stability-map": {"width_range": [40e-9, 110e-9], "length_range": [50e-9, 300e-9],
                      "step": 10e-9, "threshold": 0.9, "max_steps": 3000},
    "fig3-demo": {"j": 1.4e12, "pulse_factor": 1.5, "pulse_j": 1.1e12, "settle": 1e-9,
                  "initial": ["1011", "0100"], "sample_every": 20e-12},
    "leakage": {"scenarios": ["9cell", "32cell_1y", "32cell_7y"], "R_off": [],
                "current": 44e-6, "drive": "current"},
    "array-replay": {"grid": "", "script": "", "ports": []},
}

# fields that may not be empty / missing after defaults
REQUIRED = {"shift-window": ("j",), "array-replay": ("grid", "script")}
NEEDS_GEOMETRY = ("relax", "velocity", "shift-window")


class ConfigInvalid(ValueError):
    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def parse_quantity(v: Any) -> Any:
    """Convert ``"24nm"``-style strings to SI floats; other values pass through."""
    if isinstance(v, str):
        mt = _QTY.match(v)
        if mt and mt.group(2) in UNITS:
            return float(mt.group(1)) * UNITS[mt.group(2)]
        return v
    if isinstance(v, list):
        return [parse_quantity(x) for x in v]
    if isinstance(v, dict):
        return {k: parse_quantity(x) for k, x in v.items()}
    return v


def _build(cls, table: dict, where: str, errors: List[str]):
    names = {f.name for f in fields(cls)}
    for k in table:
        if k not in names:
            errors.append(f"{where}.{k}: unknown field")
    try:
        return cls(**{k: v for k, v in table.items() if k in names})
    except (TypeError, ValueError, GeometryError) as exc:
        errors.append(f"{where}: {exc}")
        return None


@dataclass
class RunConfig:
    experiment: str
    geometry: Optional[GeometrySpec] = None
    material: MaterialParams = field(default_factory=MaterialParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def resolved(self) -> dict:
        """Plain dict of every setting, as embedded in output files."""
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "geometry": None if self.geometry is None else self.geometry.as_dict(),
            "material": self.material.as_dict(),
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            "params": self.params,
        }

    def header_lines(self) -> List[str]:
        return ["config: " + json.dumps(self.resolved(), sort_keys=True)]


def from_dict(raw: dict) -> RunConfig:
    raw = parse_quantity(copy.deepcopy(raw))
    errors: List[str] = []
    exp = raw.get("experiment")
    if exp is None:
        errors.append("experiment: required field missing")
    elif exp not in EXPERIMENTS:
        errors.append(f"experiment: {exp!r} is not one of {', '.join(EXPERIMENTS)}")
    known = {"experiment", "seed", "workers", "geometry", "material", "solver"} | set(EXPERIMENTS)
    for k in raw:
        if k not in known:
            errors.append(f"{k}: unknown key")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append("seed: must be a non-negative integer")
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        errors.append("workers: must be a positive integer")
    geom = None
    if "geometry" in raw:
        geom = _build(GeometrySpec, raw["geometry"], "geometry", errors)
    elif exp in NEEDS_GEOMETRY:
        errors.append("geometry: required for this experiment")
    material = _build(MaterialParams, raw.get("material", {}), "material", errors)
    solver = _build(SolverConfig, raw.get("solver", {}), "solver", errors)
    params: Dict[str, Any] = {}
    if exp in EXPERIMENTS:
        params = dict(DEFAULTS[exp])
        section = raw.get(exp, {})
        if not isinstance(section, dict):
            errors.append(f"{exp}: must be a table")
            section = {}
        for k, v in section.items():
            if k not in params:
                errors.append(f"{exp}.{k}: unknown field")
            params[k] = v
        for k in REQUIRED.get(exp, ()):
            if params.get(k) in (None, "", []):
                errors.append(f"{exp}.{k}: required field missing")
        errors += _check_params(exp, params)
    if errors:
        raise ConfigInvalid(errors)
    return RunConfig(exp, geom, material, solver, params, seed, workers)


def _check_params(exp: str, p: dict) -> List[str]:
    errs = []
    if exp in ("velocity", "shift-window"):
        js = p["j"]
        if not isinstance(js, list) or not all(isinstance(x, (int, float)) for x in js):
            errs.append(f"{exp}.j: must be a list of current densities")
        elif exp == "shift-window" and list(js) != sorted(js):
            errs.append("shift-window.j: must be ascending")
    if exp in ("shift-window", "fig3-demo"):
        pj = p["pulse_j"]
        if pj == "scaled":
            p["pulse_j"] = None
        elif isinstance(pj, bool) or not isinstance(pj, (int, float)) or pj <= 0:
            errs.append(f'{exp}.pulse_j: positive current density or "scaled"')
    if exp == "stability-map":
        for k in ("width_range", "length_range"):
            r = p[k]
            if not (isinstance(r, list) and len(r) == 2 and 0 < r[0] <= r[1]):
                errs.append(f"stability-map.{k}: must be [low, high] with 0 < low <= high")
        if not p["step"] > 0:
            errs.append("stability-map.step: must be positive")
    if exp == "fig3-demo":
        rows = p["initial"]
        if not rows or any(set(r) - {"0", "1"} for r in rows) or len({len(r) for r in rows}) != 1:
            errs.append("fig3-demo.initial: rows of equal length made of 0 and 1")
    if exp == "leakage":
        from .circuit import NETWORKS
        for s in p["scenarios"]:
            if s not in NETWORKS:
                errs.append(f"leakage.scenarios: unknown scenario {s!r}")
    return errs


def loads(text: str) -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigInvalid([f"syntax: {exc}"]) from exc
    return from_dict(raw)


def load(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigInvalid([f"syntax: {exc}"]) from exc
    return from_dict(raw)
