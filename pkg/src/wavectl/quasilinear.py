"""Quasilinear wave equation ``U_tt + 2 U U_tx - (a^2 - U^2) U_xx = F(U, U_x, U_t)``
on ``[0, L]`` around a stationary state ``ubar``, with boundary feedback

    x = 0:  U_x = ubar_x(0) + k U_t
    x = L:  U   = ubar(L)

and the weighted H^2 Lyapunov functional used to certify decay.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .optctrl import Report
from .wavecore import GridFunction, Trajectory, check_same_grid


class HyperbolicityLoss(RuntimeError):
    pass


class SmallnessViolation(ValueError):
    pass


class LyapunovPositivityError(ValueError):
    pass


@dataclass(frozen=True)
class QuasiConfig:
    a: float
    L: float
    ubar: GridFunction
    k_fb: float
    F: Optional[Callable] = None
    delta0: Optional[float] = None

    def __post_init__(self):
        if not (self.a > 0 and self.L > 0 and self.k_fb > 0):
            raise ValueError("a, L and k_fb must be positive")
        if abs(self.ubar.length - self.L) > 1e-12:
            raise ValueError("ubar must live on [0, L]")
        if np.any(self.a**2 - self.ubar.values**2 <= 0):
            raise HyperbolicityLoss("a^2 - ubar^2 must be positive")

    @classmethod
    def constant_state(cls, a: float, L: float, ubar: float, n_cells: int, k_fb: Optional[float] = None, **kw) -> "QuasiConfig":
        if k_fb is None:
            k_fb = default_feedback_gain(a, ubar)
        return cls(a, L, GridFunction(np.full(n_cells + 1, float(ubar)), L), k_fb, **kw)

    @property
    def smallness(self) -> float:
        return 0.05 * self.a if self.delta0 is None else self.delta0

    def source(self, U, Ux, Ut):
        if self.F is None:
            return np.zeros_like(U)
        return np.asarray(self.F(U, Ux, Ut), dtype=float)


def default_feedback_gain(a: float, ubar: float = 0.0) -> float:
    if not a > abs(ubar):
        raise HyperbolicityLoss("a^2 - ubar^2 must be positive")
    # half of the fully absorbing gain 1/(a - ubar); keeps a clean exponential tail
    return 0.5 / (a - ubar)


@dataclass(frozen=True)
class LyapunovWeights:
    """``h1(x) = k exp(-mu1 x)``, ``h2(x) = exp(-mu2 x)``."""

    k: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if not (self.k > 0 and self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("k, mu1, mu2 must be positive")

    @classmethod
    def default(cls, L: float) -> "LyapunovWeights":
        return cls(k=2.0, mu1=0.1 / L, mu2=1.0 / L)


def _dx(f: np.ndarray, h: float) -> np.ndarray:
    return np.gradient(f, h, edge_order=2)


def _rhs(U, V, cfg: QuasiConfig, h: float, ubar_x0: float):
    N = U.size - 1
    Uxx = np.empty_like(U)
    Uxx[1:-1] = (U[2:] - 2 * U[1:-1] + U[:-2]) / h**2
    ghost = U[1] - 2 * h * (ubar_x0 + cfg.k_fb * V[0])
    Uxx[0] = (U[1] - 2 * U[0] + ghost) / h**2
    Uxx[N] = 0.0
    Ux = np.empty_like(U)
    Ux[1:-1] = (U[2:] - U[:-2]) / (2 * h)
    Ux[0] = ubar_x0 + cfg.k_fb * V[0]
    Ux[N] = (3 * U[N] - 4 * U[N - 1] + U[N - 2]) / (2 * h)
    Vx = _dx(V, h)
    c2 = cfg.a**2 - U**2
    dV = c2 * Uxx - 2 * U * Vx + cfg.source(U, Ux, V)
    dU = V.copy()
    dU[N] = 0.0
    dV[N] = 0.0
    return dU, dV


def stationary_residual(cfg: QuasiConfig) -> float:
    """Max residual of the stationary equation at interior nodes."""
    U = cfg.ubar.values
    h = cfg.ubar.h
    Ux = _dx(U, h)
    Uxx = _dx(Ux, h)
    r = -(cfg.a**2 - U**2) * Uxx - cfg.source(U, Ux, np.zeros_like(U))
    return float(np.max(np.abs(r[1:-1]))) if U.size > 2 else 0.0


def simulate_quasilinear(
    cfg: QuasiConfig,
    u0: GridFunction,
    u1: GridFunction,
    T: float,
    cfl: float = 0.5,
    record_every: int = 1,
    blowup: float = 1.0,
) -> Trajectory:
    """RK4 in time, centred second-order differences in space.

    Returns the trajectory of the perturbation ``u = U - ubar``; ``y_t`` holds
    ``u_t`` and ``y_x`` holds ``u_x``.
    """
    check_same_grid(u0, u1, cfg.ubar)
    if not 0 < cfl <= 0.5:
        raise ValueError("cfl must lie in (0, 0.5]")
    size = np.max(np.abs(u0.values)) + np.max(np.abs(u1.values))
    if size > cfg.smallness:
        raise SmallnessViolation(f"initial perturbation {size:.3g} exceeds the smallness bound {cfg.smallness:.3g}")
    if cfg.ubar.n_cells > 2 and stationary_residual(cfg) > 1e-6:
        warnings.warn("ubar does not solve the stationary equation; results describe a drifting state", stacklevel=2)
    h = u0.h
    ubar = cfg.ubar.values
    # differences taken relative to ubar(0) so a constant state gives exactly zero
    ubar_x0 = float((4 * (ubar[1] - ubar[0]) - (ubar[2] - ubar[0])) / (2 * h))
    U = ubar + u0.values
    V = u1.values.copy()
    U[-1] = ubar[-1]
    V[-1] = 0.0

    times, Ys, Vs = [0.0], [U - ubar], [V.copy()]
    t = 0.0
    step = 0
    while t < T - 1e-12:
        c2 = cfg.a**2 - U**2
        if np.any(c2 <= 0):
            raise HyperbolicityLoss(f"a^2 - U^2 <= 0 at t = {t:.4g}")
        speed = np.max(np.abs(U) + cfg.a)
        dt = min(cfl * h / speed, T - t)
        k1 = _rhs(U, V, cfg, h, ubar_x0)
        k2 = _rhs(U + 0.5 * dt * k1[0], V + 0.5 * dt * k1[1], cfg, h, ubar_x0)
        k3 = _rhs(U + 0.5 * dt * k2[0], V + 0.5 * dt * k2[1], cfg, h, ubar_x0)
        k4 = _rhs(U + dt * k3[0], V + dt * k3[1], cfg, h, ubar_x0)
        U = U + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        V = V + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t += dt
        step += 1
        u = U - ubar
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > blowup:
            raise HyperbolicityLoss(f"perturbation left the small-data regime at t = {t:.4g}")
        if step % record_every == 0 or t >= T - 1e-12:
            times.append(t)
            Ys.append(u)
            Vs.append(V.copy())
    Y = np.array(Ys)
    Vt = np.array(Vs)
    Yx = np.gradient(Y, h, axis=1, edge_order=2)
    traj = Trajectory(np.array(times), Y, Vt, Yx, length=cfg.L)
    traj.trace["ubar"] = ubar.copy()
    return traj


@dataclass(frozen=True)
class Snapshot:
    u: np.ndarray
    u_t: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray
    u_tx: np.ndarray
    h: float

    @classmethod
    def from_trajectory(cls, traj: Trajectory, k: int) -> "Snapshot":
        h = traj.h
        return cls(traj.y[k], traj.y_t[k], traj.y_x[k], _dx(traj.y_x[k], h), _dx(traj.y_t[k], h), h)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.u.size) * self.h


def lyapunov_functional(snap: Snapshot, cfg: QuasiConfig, weights: LyapunovWeights) -> float:
    x = snap.x
    U = cfg.ubar.values + snap.u
    c2 = cfg.a**2 - U**2
    h1 = weights.k * np.exp(-weights.mu1 * x)
    h2 = np.exp(-weights.mu2 * x)
    first = c2 * snap.u_x**2 + snap.u_t**2 + c2 * snap.u_xx**2 + snap.u_tx**2
    cross = U * snap.u_x**2 + snap.u_t * snap.u_x + U * snap.u_xx**2 + snap.u_tx * snap.u_xx
    return float(trapezoid(h1 * first - 2 * h2 * cross, dx=snap.h))


def h1_norms_sq(snap: Snapshot) -> float:
    """``||u_x||^2_{H^1} + ||u_t||^2_{H^1}``."""
    return float(trapezoid(snap.u_x**2 + snap.u_xx**2 + snap.u_t**2 + snap.u_tx**2, dx=snap.h))


def lyapunov_equivalence_ratio(snap: Snapshot, cfg: QuasiConfig, weights: LyapunovWeights) -> float:
    E = lyapunov_functional(snap, cfg, weights)
    if E <= 0:
        raise LyapunovPositivityError("weights fail positivity on this snapshot")
    return h1_norms_sq(snap) / E


def lyapunov_series(traj: Trajectory, cfg: QuasiConfig, weights: LyapunovWeights) -> np.ndarray:
    return np.array([lyapunov_functional(Snapshot.from_trajectory(traj, k), cfg, weights) for k in range(traj.n_time_levels)])


def empirical_C0(traj: Trajectory, cfg: QuasiConfig, weights: LyapunovWeights, floor: float = 1e-20) -> float:
    """Running maximum of the equivalence ratio over a run (snapshots with negligible energy skipped)."""
    best = 0.0
    E0 = None
    for k in range(traj.n_time_levels):
        snap = Snapshot.from_trajectory(traj, k)
        E = lyapunov_functional(snap, cfg, weights)
        E0 = E if E0 is None else E0
        if E0 > 0 and E <= floor * E0:
            continue
        best = max(best, lyapunov_equivalence_ratio(snap, cfg, weights))
    return best


def lyapunov_decay_check(
    traj: Trajectory,
    cfg: QuasiConfig,
    weights: LyapunovWeights,
    tol: float = 1e-3,
    floor: float = 1e-12,
) -> Report:
    """Pass iff ``E`` never rises by more than ``tol * E(0)`` between levels.

    Also reports the exponential rate fitted to ``ln E`` over levels where
    ``E > floor * E(0)``.
    """
    E = lyapunov_series(traj, cfg, weights)
    E0 = E[0]
    if E0 <= 0:
        if np.all(np.abs(E) <= 1e-30):
            return Report(True, 0.0, {"rate": np.nan, "max_increase": 0.0, "energies": E})
        raise LyapunovPositivityError("weights fail positivity on the initial state")
    rises = np.diff(E) / E0
    worst = float(rises.max()) if rises.size else 0.0
    keep = E > floor * E0
    rate = np.nan
    if keep.sum() >= 2:
        slope, _ = np.polyfit(traj.times[keep], np.log(E[keep]), 1)
        rate = float(-slope)
    return Report(bool(worst <= tol), tol - worst, {"rate": rate, "max_increase": worst, "energies": E})


def random_small_data(
    L: float, n_cells: int, amplitude: float, rng: np.random.Generator, n_modes: int = 3
) -> tuple[GridFunction, GridFunction]:
    """Random compatible perturbation with ``max|u0| + max|u1| = amplitude``.

    ``u0`` mixes ``cos((m + 1/2) pi x / L)`` and ``u1`` mixes ``sin(m pi x / L)``,
    so both vanish at ``x = L`` and ``u0_x(0) = u1(0) = 0``.
    """
    x = np.linspace(0.0, L, n_cells + 1)
    m = np.arange(n_modes)
    a = rng.standard_normal(n_modes) / (1 + m)
    b = rng.standard_normal(n_modes) / (1 + m)
    u0 = np.cos(np.outer(x, m + 0.5) * np.pi / L) @ a
    u1 = np.sin(np.outer(x, m + 1) * np.pi / L) @ b
    u0[-1] = u1[-1] = 0.0
    share = rng.uniform(0.3, 0.7)
    amplitude *= 1 - 1e-12  # stay inside the bound after rounding
    u0 *= share * amplitude / np.max(np.abs(u0))
    u1 *= (1 - share) * amplitude / np.max(np.abs(u1))
    return GridFunction(u0, L), GridFunction(u1, L)
