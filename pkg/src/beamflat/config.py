"""Scenario configuration: defaults, validation and JSON round-trip.

Every key, its default and its unit are listed in :data:`DEFAULTS` and
:data:`UNITS`; nothing else supplies hidden defaults.  Lengths are
normalised by the beam length, times and forces by the beam's natural
scales, so all quantities are dimensionless.
"""

import copy
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .green import DesiredShape, evenly_spaced, gaussian_sum_shape, sampled_shape, zero_shape

DEFAULTS = {
    "actuator_count": 12,
    "actuator_positions": None,
    "collocation_points": None,
    "feedback_gain": 2.0,
    "feedback_position": 1.0,
    "epsilon": 1.111,
    "transition_time": 5.0,
    "n_max": 8,
    "blob_m": [10.0, 50.0, 200.0],
    "modes": 40,
    "dt": 1e-4,
    "t_final": 10.0,
    "forcing": "feedforward",
    "desired_shape": {
        "kind": "gaussian_sum",
        "terms": [
            {"amplitude": -1e-3, "center": 0.4, "rate": 100.0},
            {"amplitude": -2e-3, "center": 0.6, "rate": 100.0},
            {"amplitude": -3e-3, "center": 0.7, "rate": 400.0},
        ],
    },
    "initial_displacement": {
        "kind": "gaussian_sum",
        "terms": [{"amplitude": -3e-3, "center": 0.8, "rate": 400.0}],
    },
    "initial_velocity": {"kind": "zero"},
    "sweep_counts": [8, 12, 16],
    "grid_points": 201,
    "record_every": 100,
    "snapshot_every": 10000,
    "output_dir": "out",
}

UNITS = {
    "actuator_count": "count; actuators at j/(N+1), j=1..N",
    "actuator_positions": "beam lengths, strictly increasing in (0, 1]; overrides actuator_count",
    "collocation_points": "beam lengths; defaults to the actuator positions",
    "feedback_gain": "dimensionless velocity-feedback gain k >= 0",
    "feedback_position": "beam lengths in (0, 1]",
    "epsilon": "transition shape parameter; Gevrey order 1 + 1/epsilon",
    "transition_time": "time units",
    "n_max": "number of correction terms in the flat series",
    "blob_m": "blob sharpness values (1/beam length)",
    "modes": "count of eigenmodes",
    "dt": "time units",
    "t_final": "time units",
    "forcing": "feedforward | constant | none",
    "desired_shape": "shape spec: gaussian_sum | samples | zero (deflection in beam lengths)",
    "initial_displacement": "shape spec (deflection in beam lengths)",
    "initial_velocity": "shape spec (beam lengths per time unit)",
    "sweep_counts": "actuator counts for sweep-actuators",
    "grid_points": "uniform output grid on [0, 1] (odd)",
    "record_every": "steps between energy/error/control records",
    "snapshot_every": "steps between displacement snapshots",
    "output_dir": "directory for CSV and JSON outputs",
}

_SHAPE_KINDS = ("gaussian_sum", "samples", "zero")


def _shape_problems(name, spec):
    if not isinstance(spec, dict) or spec.get("kind") not in _SHAPE_KINDS:
        return [f"{name}: expected a shape spec with kind in {_SHAPE_KINDS}"]
    out = []
    if spec["kind"] == "gaussian_sum":
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            return [f"{name}: gaussian_sum needs a non-empty 'terms' list"]
        for i, term in enumerate(terms):
            try:
                a, c, r = (float(term[k]) for k in ("amplitude", "center", "rate"))
            except (KeyError, TypeError, ValueError):
                out.append(f"{name}: term {i} needs numeric amplitude, center and rate")
                continue
            if not all(np.isfinite([a, c, r])):
                out.append(f"{name}: term {i} has non-finite values")
            elif r < 0:
                out.append(f"{name}: term {i} rate must be non-negative")
    elif spec["kind"] == "samples":
        try:
            x = np.asarray(spec["x"], dtype=float)
            w = np.asarray(spec["w"], dtype=float)
        except (KeyError, TypeError, ValueError):
            return [f"{name}: samples need numeric 'x' and 'w' lists"]
        if x.ndim != 1 or x.shape != w.shape or x.size < 2:
            out.append(f"{name}: 'x' and 'w' must be equal-length lists of at least 2 values")
        elif not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            out.append(f"{name}: samples must be finite")
        elif x.min() > 0.0 or x.max() < 1.0:
            out.append(f"{name}: samples must cover [0, 1]")
    return out


def build_shape(spec) -> DesiredShape:
    kind = spec["kind"]
    if kind == "gaussian_sum":
        return gaussian_sum_shape([(t["amplitude"], t["center"], t["rate"]) for t in spec["terms"]])
    if kind == "samples":
        return sampled_shape(spec["x"], spec["w"])
    return zero_shape()


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _positions_problems(name, value, *, closed_right):
    if value is None:
        return []
    if not isinstance(value, list) or not value or not all(_is_number(v) for v in value):
        return [f"{name} must be a non-empty list of numbers"]
    arr = np.asarray(value, dtype=float)
    out = []
    hi_ok = arr <= 1.0 if closed_right else arr < 1.0
    if np.any(arr <= 0.0) or not np.all(hi_ok):
        out.append(f"{name} must lie in (0, 1{']' if closed_right else ')'}")
    if np.unique(arr).size != arr.size:
        out.append(f"{name} contain duplicates")
    elif closed_right and np.any(np.diff(arr) <= 0):
        out.append(f"{name} must be strictly increasing")
    return out


def validate(data):
    """List every violated constraint of a raw config mapping (empty if valid)."""
    problems = [f"unknown key {k!r}" for k in data if k not in DEFAULTS]
    d = {**DEFAULTS, **{k: v for k, v in data.items() if k in DEFAULTS}}

    if not (_is_int(d["actuator_count"]) and d["actuator_count"] >= 1):
        problems.append("actuator_count must be an integer >= 1")
    problems += _positions_problems("actuator_positions", d["actuator_positions"], closed_right=True)
    problems += _positions_problems("collocation_points", d["collocation_points"], closed_right=True)
    n_act = len(d["actuator_positions"]) if isinstance(d["actuator_positions"], list) else d["actuator_count"]
    if isinstance(d["collocation_points"], list) and _is_int(n_act) and len(d["collocation_points"]) != n_act:
        problems.append("collocation_points must have one entry per actuator")

    if not (_is_number(d["feedback_gain"]) and d["feedback_gain"] >= 0):
        problems.append("feedback_gain must be a number >= 0")
    fp = d["feedback_position"]
    if not (_is_number(fp) and 0.0 < fp <= 1.0):
        problems.append("feedback_position must lie in (0, 1]")
    else:
        positions = None
        if isinstance(d["actuator_positions"], list) and all(_is_number(v) for v in d["actuator_positions"]):
            positions = np.asarray(d["actuator_positions"], dtype=float)
        elif _is_int(d["actuator_count"]) and d["actuator_count"] >= 1:
            positions = evenly_spaced(d["actuator_count"])
        if positions is not None and np.any(np.abs(positions - fp) < 1e-12):
            problems.append("feedback_position coincides with a feedforward actuator")

    for key in ("epsilon", "transition_time", "dt", "t_final"):
        if not (_is_number(d[key]) and d[key] > 0):
            problems.append(f"{key} must be a positive number")
    if _is_number(d["dt"]) and _is_number(d["t_final"]) and d["dt"] > 0 and d["dt"] > d["t_final"]:
        problems.append("dt must not exceed t_final")
    for key in ("n_max", "modes", "record_every", "snapshot_every"):
        if not (_is_int(d[key]) and d[key] >= 1):
            problems.append(f"{key} must be an integer >= 1")
    if not (_is_int(d["grid_points"]) and d["grid_points"] >= 3 and d["grid_points"] % 2 == 1):
        problems.append("grid_points must be an odd integer >= 3")
    blob = d["blob_m"]
    if not (isinstance(blob, list) and blob and all(_is_number(m) and m > 0 for m in blob)):
        problems.append("blob_m must be a non-empty list of positive numbers")
    sweep = d["sweep_counts"]
    if not (isinstance(sweep, list) and sweep and all(_is_int(n) and n >= 1 for n in sweep)):
        problems.append("sweep_counts must be a non-empty list of integers >= 1")
    if d["forcing"] not in ("feedforward", "constant", "none"):
        problems.append("forcing must be one of feedforward, constant, none")
    for key in ("desired_shape", "initial_displacement", "initial_velocity"):
        problems += _shape_problems(key, d[key])
    if not isinstance(d["output_dir"], str) or not d["output_dir"]:
        problems.append("output_dir must be a non-empty string")
    return problems


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``values`` holds every key with defaults filled in."""

    values: dict

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError(["configuration must be a JSON object"])
        problems = validate(data)
        if problems:
            raise ConfigError(problems)
        merged = copy.deepcopy(DEFAULTS)
        merged.update(copy.deepcopy(data))
        return cls(merged)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
        return cls.from_dict(data)

    def to_dict(self):
        return copy.deepcopy(self.values)

    def dumps(self):
        return json.dumps(self.values, indent=2, sort_keys=True)

    def replace(self, **changes):
        return ScenarioConfig.from_dict({**self.values, **changes})

    def __getitem__(self, key):
        return self.values[key]

    @property
    def actuator_positions(self):
        if self.values["actuator_positions"] is not None:
            return np.asarray(self.values["actuator_positions"], dtype=float)
        return evenly_spaced(self.values["actuator_count"])

    @property
    def collocation_points(self):
        pts = self.values["collocation_points"]
        return None if pts is None else np.asarray(pts, dtype=float)

    def shape(self, key):
        return build_shape(self.values[key])

    @property
    def x_grid(self):
        return np.linspace(0.0, 1.0, self.values["grid_points"])
