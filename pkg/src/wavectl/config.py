"""Experiment configuration: a ``[scenario]`` header followed by ``key = value`` lines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

PRESETS = ("x", "2x", "-1", "4sin(pi x/2)", "sin(pi x)", "0")
OUTPUTS = ("csv", "svg")

_COMMON = {
    "n_cells": (int, 100),
    "seed": (int, 0),
    "outputs": (list, ["csv"]),
    "stride_t": (int, 0),
    "stride_x": (int, 0),
    "samples": (str, None),
}

# key -> (type, default); a default of REQUIRED marks a mandatory key
REQUIRED = object()

SCENARIOS: dict[str, dict[str, tuple]] = {
    "dirichlet-ec": {"T": (float, REQUIRED), "y0": (str, "x"), "y1": (str, "0")},
    "neumann-ec": {"T": (float, REQUIRED), "y0": (str, "4sin(pi x/2)"), "y1": (str, "0")},
    "penalty": {
        "T": (float, 2.0),
        "gamma": (float, None),
        "perturbations": (int, 64),
        "y0": (str, "x"),
        "y1": (str, "0"),
    },
    "two-sided": {
        "T": (float, 2.0),
        "y0": (str, "-1"),
        "y1": (str, "0"),
        "u0_start": (float, -1.0),
        "u1_start": (float, -1.0),
    },
    "bangbang": {"k": (int, 1), "M": (float, 0.5), "y0": (str, "sin(pi x)"), "y1": (str, "0")},
    "stab": {"f": (float, 1.0), "T": (float, 6.0), "y0": (str, "4sin(pi x/2)"), "y1": (str, "0")},
    "of": {
        "T": (float, REQUIRED),
        "f": (float, 1.0),
        "t_end": (float, None),
        "y0": (str, "4sin(pi x/2)"),
        "y1": (str, "0"),
        "true_y0": (str, "2x"),
        "true_y1": (str, "0"),
    },
    "mismatch": {
        "T": (float, REQUIRED),
        "f": (float, 1.0),
        "control": (str, "ec"),
        "t_end": (float, None),
        "y0": (str, "4sin(pi x/2)"),
        "y1": (str, "0"),
        "true_y0": (str, "2x"),
        "true_y1": (str, "0"),
    },
    "semilinear": {"w": (float, REQUIRED), "T": (float, 20.0), "cfl": (float, 0.5), "y0": (str, "4sin(pi x/2)"), "y1": (str, "0")},
    "iss": {
        "w": (float, REQUIRED),
        "k_max": (int, 5),
        "amplitude": (float, 0.01),
        "cfl": (float, 0.5),
        "y0": (str, "4sin(pi x/2)"),
        "y1": (str, "0"),
    },
    "quasilinear": {
        "a": (float, 1.0),
        "L": (float, 0.5),
        "ubar": (float, 0.1),
        "k_fb": (float, None),
        "T": (float, 10.0),
        "amplitude": (float, 0.01),
        "cfl": (float, 0.5),
        "weight_k": (float, None),
        "weight_mu1": (float, None),
        "weight_mu2": (float, None),
    },
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ExperimentConfig:
    scenario: str
    parameters: dict[str, Any] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=lambda: ["csv"])

    def __getitem__(self, key):
        return self.parameters[key]

    def get(self, key, default=None):
        return self.parameters.get(key, default)


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "/" in text:
        return float(Fraction(text.replace(" ", "")))
    raise ValueError(text)


def _convert(kind, raw: str):
    if kind is int:
        v = _number(raw)
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError(raw)
            v = int(v)
        return v
    if kind is float:
        v = float(_number(raw))
        if not math.isfinite(v):
            raise ValueError(raw)
        return v
    if kind is list:
        return [p.strip() for p in raw.split(",") if p.strip()]
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; every problem found is reported, each with its line number."""
    errors: list[str] = []
    scenario = None
    raw: dict[str, tuple[str, int]] = {}
    header_line = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            if scenario is not None:
                errors.append(f"line {lineno}: only one [scenario] header is allowed")
                continue
            scenario = line[1:-1].strip()
            header_line = lineno
            if scenario not in SCENARIOS:
                errors.append(f"line {lineno}: unknown scenario {scenario!r}")
            continue
        if scenario is None:
            errors.append(f"line {lineno}: expected a [scenario] header before settings")
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        if key in raw:
            errors.append(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)
    if scenario is None:
        raise ConfigError(errors or ["line 1: missing [scenario] header"])
    if scenario not in SCENARIOS:
        raise ConfigError(errors)

    schema = {**_COMMON, **SCENARIOS[scenario]}
    params: dict[str, Any] = {}
    for key, (value, lineno) in raw.items():
        if key not in schema:
            errors.append(f"line {lineno}: unknown key {key!r} for scenario {scenario!r}")
            continue
        kind = schema[key][0]
        try:
            params[key] = _convert(kind, value)
        except (ValueError, ZeroDivisionError):
            what = "an integer" if kind is int else "a number"
            errors.append(f"line {lineno}: {key} must be {what}, got {value!r}")
    for key, (kind, default) in schema.items():
        if key in params:
            continue
        if default is REQUIRED:
            errors.append(f"line {header_line}: missing required key {key!r}")
        else:
            params[key] = default

    lines = {k: ln for k, (_, ln) in raw.items()}
    errors.extend(_validate(scenario, params, lambda k: lines.get(k, header_line)))
    if errors:
        raise ConfigError(errors)
    outputs = params.pop("outputs")
    return ExperimentConfig(scenario, params, outputs)


def _validate(scenario: str, p: dict, line) -> list[str]:
    errs = []

    def bad(key, msg):
        errs.append(f"line {line(key)}: {msg}")

    for out in p.get("outputs") or []:
        if out not in OUTPUTS:
            bad("outputs", f"unknown output {out!r} (choose from {', '.join(OUTPUTS)})")
    if isinstance(p.get("n_cells"), int) and p["n_cells"] < 4:
        bad("n_cells", "n_cells must be at least 4")
    for key in ("y0", "y1", "true_y0", "true_y1"):
        v = p.get(key)
        if isinstance(v, str) and v not in PRESETS:
            bad(key, f"{key} must be one of {', '.join(PRESETS)}")
    T = p.get("T")
    if isinstance(T, float):
        if T <= 0:
            bad("T", "T must be positive")
        elif scenario in ("dirichlet-ec", "neumann-ec", "penalty", "of", "mismatch") and (
            not float(T).is_integer() or int(T) % 2
        ):
            bad("T", "T must be even")
    w = p.get("w")
    if isinstance(w, float):
        if w >= 1 / 20:
            bad("w", "w must be < 1/20")
        elif w < 0:
            bad("w", "w must be non-negative")
    f = p.get("f")
    if isinstance(f, float) and scenario in ("of", "mismatch") and f < 0:
        bad("f", "f must be non-negative")
    if isinstance(f, float) and f == -1:
        bad("f", "f = -1 makes the feedback closure singular")
    if scenario == "mismatch" and p.get("control") not in ("ec", "of", "none"):
        bad("control", "control must be ec, of or none")
    if scenario == "bangbang" and isinstance(p.get("k"), int) and not 1 <= p["k"] <= 3:
        bad("k", "k must be between 1 and 3")
    cfl = p.get("cfl")
    if isinstance(cfl, float) and not 0 < cfl <= (0.5 if scenario == "quasilinear" else 1.0):
        bad("cfl", "cfl out of range")
    if scenario == "quasilinear":
        a, ub = p.get("a"), p.get("ubar")
        if isinstance(a, float) and isinstance(ub, float) and a * a - ub * ub <= 0:
            bad("ubar", "need a^2 - ubar^2 > 0")
        amp = p.get("amplitude")
        if isinstance(a, float) and isinstance(amp, float) and amp > 0.05 * a:
            bad("amplitude", "amplitude exceeds the smallness bound 0.05 a")
    for key in ("stride_t", "stride_x", "perturbations", "k_max"):
        v = p.get(key)
        if isinstance(v, int) and v < 0:
            bad(key, f"{key} must be non-negative")
    return errs
