"""Closed-loop experiments: energy traces, decay fits and extinction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dalembert import BoundaryLaw, NeumannFeedback, cell_energy, simulate_linear
from .optctrl import neumann_exact_control, optimized_feedback_control
from .wavecore import EnergyTrace, GridFunction, Trajectory, energy

EXTINCTION_TOL = 1e-10


def energy_trace(traj: Trajectory) -> EnergyTrace:
    """Energy at every recorded level.

    Exact per-cell integration is used when the trajectory carries cell
    derivatives, nodal trapezoid quadrature otherwise.
    """
    if traj.cell_y_x is not None:
        e = cell_energy(traj)
    else:
        e = np.array(
            [energy(GridFunction(yx, traj.length), GridFunction(yt, traj.length)) for yx, yt in zip(traj.y_x, traj.y_t)]
        )
    return EnergyTrace(traj.times, e)


@dataclass(frozen=True)
class DecayFit:
    C1: float
    mu: float
    extinct: bool = False
    extinction_time: Optional[float] = None


def fit_decay_rate(trace: EnergyTrace, sample_period: float = 2.0) -> DecayFit:
    """Least-squares fit of ``ln E`` against ``t`` at ``t = 0, P, 2P, ...``.

    Returns ``E(t) ~ C1 E(0) exp(-mu t)``; if a sampled energy vanishes the
    fit is replaced by an extinction flag.
    """
    samples = np.arange(0.0, trace.times[-1] + 1e-9, sample_period)
    idx = np.array([int(np.argmin(np.abs(trace.times - s))) for s in samples])
    e = trace.energies[idx]
    t = trace.times[idx]
    e0 = trace.energies[0]
    if e0 <= 0:
        return DecayFit(np.nan, np.nan, True, float(trace.times[0]))
    dead = np.nonzero(e <= 0)[0]
    if dead.size:
        return DecayFit(np.nan, np.nan, True, float(t[dead[0]]))
    if t.size < 2:
        raise ValueError("need at least two sample periods to fit a rate")
    slope, intercept = np.polyfit(t, np.log(e), 1)
    return DecayFit(float(np.exp(intercept) / e0), float(-slope))


def period_ratios(trace: EnergyTrace, period: float = 2.0) -> np.ndarray:
    """``E(t + P) / E(t)`` at ``t = 0, P, 2P, ...``."""
    samples = np.arange(0.0, trace.times[-1] + 1e-9, period)
    e = np.array([trace.at(s) for s in samples])
    return e[1:] / e[:-1]


def extinction_time(traj: Trajectory, tol: float = EXTINCTION_TOL) -> Optional[float]:
    """First recorded time with ``E(t) <= tol E(0)``, or ``None``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    tr = energy_trace(traj)
    hit = np.nonzero(tr.energies <= tol * tr.energies[0])[0]
    return float(tr.times[hit[0]]) if hit.size else None


def build_control(kind: str, y0: GridFunction, y1: GridFunction, T: float, f: float):
    if kind == "ec":
        return neumann_exact_control(y0, y1, T)
    if kind == "of":
        return optimized_feedback_control(y0, y1, T, f)
    if kind == "none":
        return None
    raise ValueError(f"unknown control kind {kind!r}")


def mismatch_experiment(
    design: tuple[GridFunction, GridFunction],
    true: tuple[GridFunction, GridFunction],
    f: float,
    T: float,
    control: str = "of",
    t_end: Optional[float] = None,
    record_every: int = 1,
) -> tuple[Trajectory, EnergyTrace]:
    """Control designed for ``design`` data, applied to the ``true`` initial state.

    The closed loop is ``y_x(t,1) = -f y_t(t,1) + u(t)``, ``u`` being the
    ``"ec"`` (pure Neumann) or ``"of"`` (optimized feedback) control for the
    design data; it is switched off after ``T``.
    """
    u = build_control(control, design[0], design[1], T, f)
    law = BoundaryLaw(NeumannFeedback(f, u))
    traj = simulate_linear(true[0], true[1], law, T if t_end is None else t_end, record_every=record_every)
    return traj, energy_trace(traj)
