"""Named scenarios composed from the solver modules, each writing its artifacts to a directory."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Callable

import numpy as np

from . import optctrl, output, quasilinear, semilinear, stabilize
from .config import ConfigError, ExperimentConfig
from .dalembert import BoundaryLaw, DirichletControl, NeumannControl, NeumannFeedback, simulate_linear
from .wavecore import ControlSignal, EnergyTrace, GridFunction, Trajectory

PRESET_FUNCTIONS: dict[str, Callable] = {
    "x": lambda x: x,
    "2x": lambda x: 2 * x,
    "-1": lambda x: -np.ones_like(x),
    "4sin(pi x/2)": lambda x: 4 * np.sin(np.pi * x / 2),
    "sin(pi x)": lambda x: np.sin(np.pi * x),
    "0": lambda x: np.zeros_like(x),
}


class ExperimentError(RuntimeError):
    """A module raised during a scenario; the message names the scenario."""


def load_samples(path: str | Path, n_cells: int) -> dict[str, GridFunction]:
    """Read a CSV with an ``x`` column and data columns, interpolated onto ``n_cells``."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError([f"samples: cannot read {path}: {exc.strerror}"]) from exc
    if not rows or "x" not in rows[0]:
        raise ConfigError([f"samples: {path} needs a header with an 'x' column"])
    try:
        cols = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"samples: non-numeric entry in {path}"]) from exc
    x = cols.pop("x")
    if np.any(np.diff(x) <= 0) or abs(x[0]) > 1e-12 or abs(x[-1] - 1) > 1e-12:
        raise ConfigError([f"samples: x in {path} must increase from 0 to 1"])
    grid = np.linspace(0.0, 1.0, n_cells + 1)
    return {k: GridFunction(np.interp(grid, x, v)) for k, v in cols.items()}


def _data(cfg: ExperimentConfig, key: str) -> GridFunction:
    n = cfg["n_cells"]
    if cfg.get("samples"):
        loaded = load_samples(cfg["samples"], n)
        if key in loaded:
            return loaded[key]
    return GridFunction.from_function(PRESET_FUNCTIONS[cfg[key]], n)


def _field_outputs(cfg: ExperimentConfig, out: Path, traj: Trajectory, trace: EnergyTrace | None) -> list[Path]:
    paths = []
    if "csv" in cfg.outputs:
        paths.append(output.write_field(out / "field.csv", traj, cfg["stride_t"], cfg["stride_x"]))
        if trace is not None:
            paths.append(output.write_energy(out / "energy.csv", trace))
    if "svg" in cfg.outputs:
        paths.append(output.write_heatmap(out / "field.svg", traj))
    return paths


def _control_output(cfg: ExperimentConfig, out: Path, u: ControlSignal) -> list[Path]:
    return [output.write_control(out / "control.csv", u)] if "csv" in cfg.outputs else []


def _table(cfg: ExperimentConfig, path: Path, header: list[str], rows) -> list[Path]:
    return [output.write_csv(path, header, rows)] if "csv" in cfg.outputs else []


def _dirichlet_ec(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    u = optctrl.dirichlet_exact_control(y0, y1, cfg["T"])
    traj = simulate_linear(y0, y1, BoundaryLaw(DirichletControl(u)), cfg["T"])
    return _control_output(cfg, out, u) + _field_outputs(cfg, out, traj, stabilize.energy_trace(traj))


def _neumann_ec(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    u = optctrl.neumann_exact_control(y0, y1, cfg["T"])
    traj = simulate_linear(y0, y1, BoundaryLaw(NeumannControl(u)), cfg["T"])
    return _control_output(cfg, out, u) + _field_outputs(cfg, out, traj, stabilize.energy_trace(traj))


def _penalty(cfg, out):
    y0, y1, T = _data(cfg, "y0"), _data(cfg, "y1"), cfg["T"]
    u_star = optctrl.dirichlet_exact_control(y0, y1, T)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else optctrl.penalty_threshold(u_star, T)
    rep = optctrl.verify_penalty_threshold(y0, y1, T, gamma, n_samples=cfg["perturbations"], seed=cfg["seed"])
    rows = [
        ("gamma", gamma),
        ("threshold", rep.details["threshold"]),
        ("objective", rep.details["objective"]),
        ("margin", rep.margin),
        ("passed", float(rep.passed)),
    ]
    return _table(cfg, out / "penalty.csv", ["quantity", "value"], rows) + _control_output(cfg, out, u_star)


def _two_sided(cfg, out):
    y0, y1, T = _data(cfg, "y0"), _data(cfg, "y1"), cfg["T"]
    n = int(round(T * cfg["n_cells"]))
    u0 = ControlSignal.interpolate(lambda t: cfg["u0_start"] * (1 - t / T), T, n)
    u1 = ControlSignal.interpolate(lambda t: cfg["u1_start"] * (1 - t / T), T, n)
    traj = optctrl.simulate_two_sided(u0, u1, y0, y1, T)
    return _control_output(cfg, out, u1) + _field_outputs(cfg, out, traj, stabilize.energy_trace(traj))


def _bangbang(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    k, M = cfg["k"], cfg["M"]
    runs = optctrl.enumerate_bangbang(y0, y1, k, M)
    grid = optctrl.reachable_offsets(k, M)
    rows = []
    for r in runs:
        err = float(np.max(np.min(np.abs(r["offset"][:, None] - grid[None, :]), axis=1)))
        rows.append((" ".join(f"{int(p):+d}" for p in r["pattern"]), err, r["terminal_norm"]))
    return _table(cfg, out / "bangbang.csv", ["pattern", "offset_grid_error", "terminal_norm"], rows)


def _stab(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    traj = simulate_linear(y0, y1, BoundaryLaw(NeumannFeedback(cfg["f"])), cfg["T"])
    return _field_outputs(cfg, out, traj, stabilize.energy_trace(traj))


def _mismatch_like(cfg, out, control):
    design = (_data(cfg, "y0"), _data(cfg, "y1"))
    true = (_data(cfg, "true_y0"), _data(cfg, "true_y1"))
    T = cfg["T"]
    t_end = T if cfg["t_end"] is None else cfg["t_end"]
    traj, trace = stabilize.mismatch_experiment(design, true, cfg["f"], T, control=control, t_end=t_end)
    paths = _field_outputs(cfg, out, traj, trace)
    u = stabilize.build_control(control, design[0], design[1], T, cfg["f"])
    return paths + (_control_output(cfg, out, u) if u is not None else [])


def _of(cfg, out):
    return _mismatch_like(cfg, out, "of")


def _mismatch(cfg, out):
    return _mismatch_like(cfg, out, cfg["control"])


def _semilinear(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    traj = semilinear.simulate_semilinear(
        semilinear.Nonlinearity.constant(cfg["w"]), semilinear.Disturbance.zero(), y0, y1, cfg["T"], cfl=cfg["cfl"]
    )
    starts, sups = semilinear.window_sups(traj)
    paths = _table(cfg, out / "supnorm.csv", ["t", "sup"], zip(starts, sups))
    return paths + _field_outputs(cfg, out, traj, stabilize.energy_trace(traj))


def _iss(cfg, out):
    y0, y1 = _data(cfg, "y0"), _data(cfg, "y1")
    n, amp, w, k_max = cfg["n_cells"], cfg["amplitude"], cfg["w"], cfg["k_max"]
    T = 2.0 * k_max + 2.0
    dist = semilinear.Disturbance(lambda t, x: amp * np.sin(np.pi * x) * np.cos(np.pi * t), abs(amp))
    nl = semilinear.Nonlinearity.constant(w)
    traj = semilinear.simulate_semilinear(nl, dist, y0, y1, T, cfl=cfg["cfl"])
    delta = semilinear.disturbance_response(dist, T, n, cfl=cfg["cfl"])
    rep = semilinear.iss_check(traj, delta, w, k_max)
    rows = [(r["k"], r["lhs"], r["rhs"], r["rhs"] - r["lhs"]) for r in rep.details["rows"]]
    paths = _table(cfg, out / "iss.csv", ["k", "lhs", "rhs", "margin"], rows)
    return paths + _field_outputs(cfg, out, traj, None)


def _quasilinear(cfg, out):
    a, L, ub = cfg["a"], cfg["L"], cfg["ubar"]
    qc = quasilinear.QuasiConfig.constant_state(a, L, ub, cfg["n_cells"], k_fb=cfg["k_fb"])
    u0, u1 = quasilinear.random_small_data(L, cfg["n_cells"], cfg["amplitude"], np.random.default_rng(cfg["seed"]))
    traj = quasilinear.simulate_quasilinear(qc, u0, u1, cfg["T"], cfl=cfg["cfl"], record_every=10)
    d = quasilinear.LyapunovWeights.default(L)
    weights = quasilinear.LyapunovWeights(
        cfg["weight_k"] or d.k, cfg["weight_mu1"] or d.mu1, cfg["weight_mu2"] or d.mu2
    )
    E = quasilinear.lyapunov_series(traj, qc, weights)
    paths = _table(cfg, out / "lyapunov.csv", ["t", "E"], zip(traj.times, E))
    return paths + _field_outputs(cfg, out, traj, None)


RUNNERS = {
    "dirichlet-ec": _dirichlet_ec,
    "neumann-ec": _neumann_ec,
    "penalty": _penalty,
    "two-sided": _two_sided,
    "bangbang": _bangbang,
    "stab": _stab,
    "of": _of,
    "mismatch": _mismatch,
    "semilinear": _semilinear,
    "iss": _iss,
    "quasilinear": _quasilinear,
}


def run_experiment(cfg: ExperimentConfig, out: str | Path = ".") -> list[Path]:
    """Run ``cfg`` and write its artifacts under ``out``; returns the written paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return RUNNERS[cfg.scenario](cfg, out)
    except ConfigError:
        raise
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        raise ExperimentError(f"{cfg.scenario}: {exc}") from exc
