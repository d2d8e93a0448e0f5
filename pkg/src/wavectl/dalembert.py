"""Exact characteristic solver for ``y_tt = y_xx`` on ``[0, 1]``.

The solution is written as ``y(t, x) = alpha(x + t) + beta(x - t)``. Both
profiles are stored cell by cell on the lattice ``{m h}`` as linear pieces
given by their left and right limits, so jumps (which Dirichlet controls
generate) are represented exactly. With ``dt = h`` every time step shifts
the profiles by exactly one cell and the boundary conditions become
algebraic reflection rules, so the scheme has no discretisation error for
piecewise-linear data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .wavecore import ControlSignal, GridFunction, Trajectory, check_same_grid


class SingularClosureError(ValueError):
    pass


@dataclass(frozen=True)
class CharacteristicField:
    """Traveling-wave profiles on lattice cells.

    Cell ``m`` of alpha covers ``[m h, (m+1) h]``; arrays are indexed from
    ``alpha_start`` (resp. ``beta_start``).
    """

    h: float
    alpha_left: np.ndarray
    alpha_right: np.ndarray
    beta_left: np.ndarray
    beta_right: np.ndarray
    alpha_start: int = 0
    beta_start: int = 0

    @property
    def alpha_slopes(self) -> np.ndarray:
        return (self.alpha_right - self.alpha_left) / self.h

    @property
    def beta_slopes(self) -> np.ndarray:
        return (self.beta_right - self.beta_left) / self.h

    @property
    def alpha_values(self) -> np.ndarray:
        return _nodal(self.alpha_left, self.alpha_right)

    @property
    def beta_values(self) -> np.ndarray:
        return _nodal(self.beta_left, self.beta_right)

    def alpha(self, s):
        return _eval(self.alpha_left, self.alpha_right, self.alpha_start, self.h, s, "alpha")

    def beta(self, s):
        return _eval(self.beta_left, self.beta_right, self.beta_start, self.h, s, "beta")


def _nodal(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    out = np.empty(left.size + 1)
    out[0] = left[0]
    out[-1] = right[-1]
    out[1:-1] = 0.5 * (right[:-1] + left[1:])
    return out


def _eval(left, right, start, h, s, name):
    s = np.asarray(s, dtype=float)
    lo, hi = start * h, (start + left.size) * h
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.any(s < lo - tol) or np.any(s > hi + tol):
        raise ValueError(f"{name} evaluated outside its extension [{lo}, {hi}]")
    pos = (s - lo) / h
    m = np.clip(np.floor(pos).astype(int), 0, left.size - 1)
    frac = pos - m
    return left[m] + frac * (right[m] - left[m])


def decompose(y0: GridFunction, y1: GridFunction, C: float = 0.0) -> CharacteristicField:
    """Split initial data into ``alpha = (y0 + Y1)/2 + C``, ``beta = (y0 - Y1)/2 - C``.

    ``Y1`` is the running integral of ``y1``.
    """
    check_same_grid(y0, y1)
    Y1 = y1.cumulative_integral()
    a = 0.5 * (y0.values + Y1) + C
    b = 0.5 * (y0.values - Y1) - C
    return CharacteristicField(y0.h, a[:-1].copy(), a[1:].copy(), b[:-1].copy(), b[1:].copy())


def eval_free(fld: CharacteristicField, t: float, x: float) -> float:
    """``alpha(x + t) + beta(x - t)`` without any boundary interaction."""
    return float(fld.alpha(x + t) + fld.beta(x - t))


# boundary laws ------------------------------------------------------------


@dataclass(frozen=True)
class DirichletZero:
    pass


@dataclass(frozen=True)
class DirichletControl:
    u: ControlSignal


@dataclass(frozen=True)
class NeumannControl:
    u: ControlSignal


@dataclass(frozen=True)
class NeumannFeedback:
    """``y_x(t, 1) = -f y_t(t, 1) + u(t)``; ``u`` defaults to zero."""

    f: float
    u: Optional[ControlSignal] = None

    def __post_init__(self):
        if self.f == -1:
            raise SingularClosureError("singular feedback closure (f = -1)")


RightLaw = Union[DirichletControl, NeumannControl, NeumannFeedback]
LeftLaw = Union[DirichletZero, DirichletControl]


@dataclass(frozen=True)
class BoundaryLaw:
    right: RightLaw
    left: LeftLaw = field(default_factory=DirichletZero)

    @property
    def right_is_dirichlet(self) -> bool:
        return isinstance(self.right, DirichletControl)

    @property
    def feedback(self) -> float:
        if isinstance(self.right, NeumannFeedback):
            return float(self.right.f)
        return 0.0


def _control_arrays(u: Optional[ControlSignal], h: float, n: int):
    """Left limit, right limit and mean of ``u`` on the first ``n`` lattice time cells."""
    out = np.zeros((3, n))
    if u is None:
        return out
    steps = int(round(u.horizon_T / h))
    if steps == 0:
        return out
    if abs(u.dt - h) > 1e-12 * h or abs(steps * h - u.horizon_T) > 1e-9:
        u = u.resample(steps, steps * h)
    m = min(steps, n)
    out[0, :m] = u.left_limits[:m]
    out[1, :m] = u.right_limits[:m]
    out[2, :m] = u.values[:m]
    return out


def lattice_steps(T: float, n_cells: int) -> int:
    K = int(round(T * n_cells))
    if K <= 0 or abs(K - T * n_cells) > 1e-9 * max(1.0, T * n_cells):
        raise ValueError(f"T = {T} is not a multiple of the lattice step 1/{n_cells}")
    return K


def propagate(fld: CharacteristicField, law: BoundaryLaw, n_cells: int, K: int) -> CharacteristicField:
    """Extend the decomposed profiles by reflection far enough for ``K`` steps.

    Returns a field with alpha on ``[0, 1 + K h]`` (rounded up to whole
    blocks of ``n_cells``) and beta on the mirrored range below zero.
    """
    N, h = n_cells, fld.h
    B = -(-K // N)
    size = N * (B + 1)
    aL = np.zeros(size)
    aR = np.zeros(size)
    bL = np.zeros(size)
    bR = np.zeros(size)
    off = B * N  # storage index of beta cell 0
    aL[:N], aR[:N] = fld.alpha_left, fld.alpha_right
    bL[off:off + N], bR[off:off + N] = fld.beta_left, fld.beta_right

    right = law.right
    left_u = law.left.u if isinstance(law.left, DirichletControl) else None
    right_u = right.u
    ul0, ur0, _ = _control_arrays(left_u, h, B * N)
    ul1, ur1, um1 = _control_arrays(right_u, h, B * N)
    if isinstance(right, NeumannFeedback):
        f = float(right.f)
    else:
        f = 0.0

    for b in range(B):
        j = np.arange(b * N, (b + 1) * N)
        # y(t,0) = u0(t)  =>  beta(-s) = u0(s) - alpha(s)
        src = j  # alpha cells
        dst = off - 1 - j
        bL[dst] = ur0[j] - aR[src]
        bR[dst] = ul0[j] - aL[src]
        # right end, mirrored beta cell N-1-j
        m = off + N - 1 - j
        new = N + j
        if isinstance(right, DirichletControl):
            aL[new] = ul1[j] - bR[m]
            aR[new] = ur1[j] - bL[m]
        else:
            sb = (bR[m] - bL[m]) / h
            sa = ((f - 1.0) * sb + um1[j]) / (1.0 + f)
            start = aR[N + b * N - 1]
            edges = start + h * np.cumsum(sa)
            aR[new] = edges
            aL[new] = np.concatenate(([start], edges[:-1]))
    return CharacteristicField(h, aL, aR, bL, bR, 0, -off)


def simulate_linear(
    y0: GridFunction,
    y1: GridFunction,
    law: BoundaryLaw,
    T: float,
    record_every: int = 1,
    C: float = 0.0,
) -> Trajectory:
    """Solve on the characteristic lattice ``dt = 1/n_cells`` up to time ``T``.

    Controls shorter than ``T`` are switched off after their horizon.
    """
    check_same_grid(y0, y1)
    if y0.length != 1.0:
        raise ValueError("the characteristic solver works on [0, 1]")
    N, h = y0.n_cells, y0.h
    K = lattice_steps(T, N)
    fld = propagate(decompose(y0, y1, C), law, N, K)
    off = -fld.beta_start
    aL, aR, bL, bR = fld.alpha_left, fld.alpha_right, fld.beta_left, fld.beta_right

    levels = np.arange(0, K + 1, record_every)
    if levels[-1] != K:
        levels = np.append(levels, K)
    i = np.arange(N)
    ia = i[None, :] + levels[:, None]
    ib = off + i[None, :] - levels[:, None]
    yl = aL[ia] + bL[ib]
    yr = aR[ia] + bR[ib]
    sa = (aR[ia] - aL[ia]) / h
    sb = (bR[ib] - bL[ib]) / h
    cx = sa + sb
    ct = sa - sb

    y = _nodal_rows(yl, yr)
    jump = np.zeros_like(y)
    jump[:, 1:-1] = yl[:, 1:] - yr[:, :-1]

    k = np.arange(K)
    ta = N + k
    tb = off + N - 1 - k
    tsa = (aR[ta] - aL[ta]) / h
    tsb = (bR[tb] - bL[tb]) / h
    trace = {
        "t": np.arange(K + 1) * h,
        "y": 0.5 * (aL[ta] + aR[ta] + bL[tb] + bR[tb]),
        "y_t": tsa - tsb,
        "y_x": tsa + tsb,
    }
    return Trajectory(
        times=levels * h,
        y=y,
        y_t=_avg_rows(ct),
        y_x=_avg_rows(cx),
        cell_y_x=cx,
        cell_y_t=ct,
        y_jump=jump,
        trace=trace,
    )


def _nodal_rows(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    out = np.empty((left.shape[0], left.shape[1] + 1))
    out[:, 0] = left[:, 0]
    out[:, -1] = right[:, -1]
    out[:, 1:-1] = 0.5 * (right[:, :-1] + left[:, 1:])
    return out


def _avg_rows(cells: np.ndarray) -> np.ndarray:
    out = np.empty((cells.shape[0], cells.shape[1] + 1))
    out[:, 0] = cells[:, 0]
    out[:, -1] = cells[:, -1]
    out[:, 1:-1] = 0.5 * (cells[:, :-1] + cells[:, 1:])
    return out


def cell_energy(traj: Trajectory) -> np.ndarray:
    """Exact energy per recorded level from the per-cell derivatives."""
    if traj.cell_y_x is None:
        raise ValueError("trajectory carries no cell derivatives")
    return 0.5 * traj.h * np.sum(traj.cell_y_x**2 + traj.cell_y_t**2, axis=1)
