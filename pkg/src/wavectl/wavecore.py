"""Shared domain types, quadrature and signal helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid


def _finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function at the nodes ``x_i = i * length / n_cells``.

    Between nodes the function is the piecewise-linear interpolant.
    """

    values: np.ndarray
    length: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("values must be a 1-d array with at least two samples")
        _finite("values", v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if not self.length > 0:
            raise ValueError("length must be positive")

    @classmethod
    def from_function(cls, fn: Callable, n_cells: int, length: float = 1.0) -> "GridFunction":
        x = np.linspace(0.0, length, n_cells + 1)
        return cls(np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy(), length)

    @classmethod
    def zeros(cls, n_cells: int, length: float = 1.0) -> "GridFunction":
        return cls(np.zeros(n_cells + 1), length)

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_cells + 1)

    @property
    def slopes(self) -> np.ndarray:
        """Per-cell derivative of the interpolant."""
        return np.diff(self.values) / self.h

    def cumulative_integral(self) -> np.ndarray:
        """Nodal values of ``x -> int_0^x f``."""
        return cumulative_trapezoid(self.values, dx=self.h, initial=0.0)

    def __call__(self, x):
        return np.interp(x, self.x, self.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        check_same_grid(self, other)
        return GridFunction(self.values + other.values, self.length)

    def __mul__(self, a: float) -> "GridFunction":
        return GridFunction(a * self.values, self.length)

    __rmul__ = __mul__


def check_same_grid(*fs: GridFunction) -> None:
    first = fs[0]
    for f in fs[1:]:
        if f.n_cells != first.n_cells or f.length != first.length:
            raise ValueError(
                f"mismatched grids: n_cells {first.n_cells} vs {f.n_cells}, "
                f"length {first.length} vs {f.length}"
            )


@dataclass(frozen=True)
class ControlSignal:
    """Boundary control on the uniform time grid ``t_j = j * horizon_T / n_steps``.

    On cell ``[t_j, t_{j+1})`` the signal is ``values[j] + slopes[j] * (t - mid_j)``.
    With the default zero slopes this is the piecewise-constant control; the
    slopes let closed-form controls carry their exact within-cell variation.
    Outside ``[0, horizon_T]`` the control is switched off (zero).
    """

    horizon_T: float
    values: np.ndarray
    slopes: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        _finite("values", v)
        s = np.zeros_like(v) if self.slopes is None else np.array(self.slopes, dtype=float)
        if s.shape != v.shape:
            raise ValueError("slopes must match values in length")
        _finite("slopes", s)
        v.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", s)

    @classmethod
    def interpolate(cls, fn: Callable, horizon_T: float, n_steps: int) -> "ControlSignal":
        """Piecewise-linear interpolant of ``fn`` through the time nodes."""
        t = np.linspace(0.0, horizon_T, n_steps + 1)
        u = np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape)
        dt = horizon_T / n_steps
        return cls(horizon_T, 0.5 * (u[1:] + u[:-1]), np.diff(u) / dt)

    @classmethod
    def zeros(cls, horizon_T: float, n_steps: int) -> "ControlSignal":
        return cls(horizon_T, np.zeros(n_steps))

    @property
    def n_steps(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return self.horizon_T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon_T, self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt

    @property
    def left_limits(self) -> np.ndarray:
        return self.values - 0.5 * self.dt * self.slopes

    @property
    def right_limits(self) -> np.ndarray:
        return self.values + 0.5 * self.dt * self.slopes

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.floor(t / self.dt).astype(int)
        inside = (t >= 0) & (j < self.n_steps)
        jc = np.clip(j, 0, self.n_steps - 1)
        out = self.values[jc] + self.slopes[jc] * (t - (jc + 0.5) * self.dt)
        return np.where(inside, out, 0.0)

    def _antiderivative(self, t: float) -> float:
        t = min(max(t, 0.0), self.horizon_T)
        j = min(int(t // self.dt), self.n_steps - 1)
        full = float(np.sum(self.values[:j])) * self.dt
        a = j * self.dt
        mid = a + 0.5 * self.dt
        part = self.values[j] * (t - a) + 0.5 * self.slopes[j] * ((t - mid) ** 2 - (a - mid) ** 2)
        return full + float(part)

    def integral(self, a: float, b: float) -> float:
        """Exact integral over ``[a, b]`` (zero outside the horizon)."""
        return self._antiderivative(b) - self._antiderivative(a)

    def mean(self, a: float, b: float) -> float:
        return self.integral(a, b) / (b - a)

    def l2_norm_sq(self) -> float:
        """Exact ``||u||^2_{L2(0,T)}`` of the piecewise-linear representation."""
        return float(np.sum(self.values**2 + self.slopes**2 * self.dt**2 / 12.0) * self.dt)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.l2_norm_sq()))

    def resample(self, n_steps: int, horizon_T: Optional[float] = None) -> "ControlSignal":
        """Re-express on another grid by interpolating through the new nodes."""
        horizon_T = self.horizon_T if horizon_T is None else horizon_T
        t = np.linspace(0.0, horizon_T, n_steps + 1)
        eps = 1e-12 * max(1.0, horizon_T)
        left = self(t[:-1] + eps)
        right = self(t[1:] - eps)
        return ControlSignal(horizon_T, 0.5 * (left + right), (right - left) / (horizon_T / n_steps))

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        if other.n_steps != self.n_steps or other.horizon_T != self.horizon_T:
            raise ValueError("controls live on different time grids")
        return ControlSignal(self.horizon_T, self.values + other.values, self.slopes + other.slopes)

    def __mul__(self, a: float) -> "ControlSignal":
        return ControlSignal(self.horizon_T, a * self.values, a * self.slopes)

    __rmul__ = __mul__


@dataclass
class Trajectory:
    """State snapshots ``(y, y_t, y_x)`` at the recorded time levels.

    ``cell_y_x``/``cell_y_t`` hold per-cell derivatives when the producing
    solver has them exactly (the characteristic solver); ``y_jump`` holds the
    right-minus-left jump of ``y`` at each node. ``trace`` maps names to
    boundary traces at ``x = length``; for the characteristic solver these
    are per time cell (cell averages), otherwise per time level.
    """

    times: np.ndarray
    y: np.ndarray
    y_t: np.ndarray
    y_x: np.ndarray
    length: float = 1.0
    cell_y_x: Optional[np.ndarray] = None
    cell_y_t: Optional[np.ndarray] = None
    y_jump: Optional[np.ndarray] = None
    trace: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.y.shape != self.y_t.shape or self.y.shape != self.y_x.shape:
            raise ValueError("snapshot arrays must share a shape")
        if self.y.shape[0] != self.times.size:
            raise ValueError("one snapshot per time level required")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_cells(self) -> int:
        return self.y.shape[1] - 1

    @property
    def n_time_levels(self) -> int:
        return self.times.size

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_cells + 1)

    def level(self, t: float) -> int:
        """Index of the recorded level closest to ``t``."""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)) + 0.5 * _spacing(self.times):
            raise ValueError(f"time {t} is not a recorded level")
        return k

    def state(self, t: float) -> tuple[GridFunction, GridFunction, GridFunction]:
        k = self.level(t)
        return (
            GridFunction(self.y[k], self.length),
            GridFunction(self.y_t[k], self.length),
            GridFunction(self.y_x[k], self.length),
        )

    def trace_signal(self, name: str = "y") -> ControlSignal:
        """Boundary trace at ``x = length`` as a signal (characteristic solver only)."""
        if "t" not in self.trace:
            raise ValueError("trajectory has no per-cell boundary trace")
        t = self.trace["t"]
        horizon = t[-1]
        slopes = self.trace["y_t"] if name == "y" else None
        return ControlSignal(horizon, self.trace[name], slopes)


def _spacing(times: np.ndarray) -> float:
    return float(np.min(np.diff(times))) if times.size > 1 else 0.0


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.energies, dtype=float)
        if t.shape != e.shape:
            raise ValueError("times and energies must have equal length")
        if np.any(e < 0):
            raise ValueError("energies must be non-negative")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "energies", e)

    def at(self, t: float) -> float:
        k = int(np.argmin(np.abs(self.times - t)))
        return float(self.energies[k])


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(trapezoid(f.values**2, dx=f.h)))


def hminus1_antiderivative(v: GridFunction) -> GridFunction:
    """Antiderivative ``Y`` of ``v`` normalised so that ``Y(0) = -int_0^1 int_0^x v``.

    Equivalently ``Y`` is the antiderivative of ``v`` with zero mean; its L2
    norm measures ``v`` in H^{-1}.
    """
    V = v.cumulative_integral()
    y_at_0 = -trapezoid(V, dx=v.h)
    return GridFunction(y_at_0 + V, v.length)


def energy(y_x: GridFunction, y_t: GridFunction) -> float:
    """``1/2 int (y_x^2 + y_t^2) dx`` by the trapezoid rule."""
    check_same_grid(y_x, y_t)
    return float(0.5 * trapezoid(y_x.values**2 + y_t.values**2, dx=y_x.h))


def detect_jump(u: ControlSignal, t_star: float, window: float) -> float:
    """Difference of the means of ``u`` just after and just before ``t_star``."""
    if window <= u.dt:
        raise ValueError("window must exceed the control time step")
    if t_star - window < -1e-12 or t_star + window > u.horizon_T + 1e-12:
        raise ValueError("window out of range")
    # shift by a local level first so a constant signal gives exactly zero
    j = min(int(t_star // u.dt), u.n_steps - 1)
    v = ControlSignal(u.horizon_T, u.values - u.values[j], u.slopes)
    return abs(v.mean(t_star, t_star + window) - v.mean(t_star - window, t_star))
