"""CSV and SVG writers for experiment artifacts."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .wavecore import ControlSignal, EnergyTrace, Trajectory


def fmt(v: float) -> str:
    # 17 significant digits round-trip every double
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return path


def _auto_stride(n: int, target: int) -> int:
    return max(1, -(-(n - 1) // target))


def field_rows(traj: Trajectory, stride_t: int = 0, stride_x: int = 0):
    """Long-format ``t, x, y, y_t, y_x`` rows on a subsampled grid.

    A zero stride picks one that keeps about 100 time levels and 50 nodes;
    the last level and the right endpoint are always included.
    """
    st = stride_t or _auto_stride(traj.n_time_levels, 100)
    sx = stride_x or _auto_stride(traj.n_cells + 1, 50)
    levels = sorted(set(range(0, traj.n_time_levels, st)) | {traj.n_time_levels - 1})
    nodes = sorted(set(range(0, traj.n_cells + 1, sx)) | {traj.n_cells})
    x = traj.x
    for k in levels:
        t = traj.times[k]
        for i in nodes:
            yield (t, x[i], traj.y[k, i], traj.y_t[k, i], traj.y_x[k, i])


def write_field(path: Path, traj: Trajectory, stride_t: int = 0, stride_x: int = 0) -> Path:
    return write_csv(path, ["t", "x", "y", "y_t", "y_x"], field_rows(traj, stride_t, stride_x))


def write_energy(path: Path, trace: EnergyTrace) -> Path:
    return write_csv(path, ["t", "E"], zip(trace.times, trace.energies))


def write_control(path: Path, u: ControlSignal) -> Path:
    """Cell means of ``u`` at the cell midpoints."""
    return write_csv(path, ["t", "u"], zip(u.midpoints, u.values))


def _diverging(v: float) -> str:
    # blue (-1) through white (0) to red (+1)
    v = max(-1.0, min(1.0, v))
    if v >= 0:
        r, g, b = 255, int(255 * (1 - v)), int(255 * (1 - v))
    else:
        r, g, b = int(255 * (1 + v)), int(255 * (1 + v)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def write_heatmap(path: Path, traj: Trajectory, max_cols: int = 200, max_rows: int = 60) -> Path:
    """Heatmap of ``y``: time to the right, space upward, symmetric colour scale."""
    kt = np.unique(np.linspace(0, traj.n_time_levels - 1, min(max_cols, traj.n_time_levels)).astype(int))
    kx = np.unique(np.linspace(0, traj.n_cells, min(max_rows, traj.n_cells + 1)).astype(int))
    data = traj.y[np.ix_(kt, kx)]
    scale = float(np.max(np.abs(data))) or 1.0
    cw, ch, pad = 4, 6, 40
    width = pad + cw * kt.size + 10
    height = 10 + ch * kx.size + pad
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" shape-rendering="crispEdges">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for a in range(kt.size):
        for b in range(kx.size):
            xp = pad + a * cw
            yp = 10 + (kx.size - 1 - b) * ch
            parts.append(f'<rect x="{xp}" y="{yp}" width="{cw}" height="{ch}" fill="{_diverging(data[a, b] / scale)}"/>')
    base = 10 + ch * kx.size
    parts.append(f'<text x="{pad}" y="{base + 15}" font-size="10">t = {traj.times[0]:g}</text>')
    parts.append(f'<text x="{width - 10}" y="{base + 15}" font-size="10" text-anchor="end">t = {traj.times[-1]:g}</text>')
    parts.append(f'<text x="4" y="{base}" font-size="10">x=0</text>')
    parts.append(f'<text x="4" y="18" font-size="10">x={traj.length:g}</text>')
    parts.append(f'<text x="{pad}" y="{height - 5}" font-size="10">|y| max {scale:.3g}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
