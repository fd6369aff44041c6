"""Hand-emitted SVG plots for trajectories and grid functions.

No plotting dependency: fixed 800x600 viewport, 2px strokes.  Trajectory
series recolor from red to blue wherever two consecutive samples lie inside
the target band; set bounds are drawn as green (constraint) and blue (target)
rule lines, and phase plots draw the constraint box edges in green.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

WIDTH = 800
HEIGHT = 600
MARGIN = 60

RED = "#cc2222"
BLUE = "#2244cc"
GREEN = "#22aa44"
GREY = "#555555"


@dataclass(frozen=True)
class PlotStyle:
    kind: str = "series"  # "series" (value vs time) or "phase" (two coordinates)
    component: int = 0
    invariant_bounds: Optional[tuple] = None
    target_bounds: Optional[tuple] = None
    box: Optional[tuple] = None  # ((lo1, hi1), (lo2, hi2)) for phase plots
    title: str = ""


def _scale(lo, hi, pixels, offset):
    span = hi - lo
    if span <= 0:
        span = 1.0

    def fn(v):
        return offset + (v - lo) / span * pixels

    return fn


def _polyline(points, color):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'


def _rule(x1, y1, x2, y2, color):
    return (
        f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
        f'stroke="{color}" stroke-width="2" stroke-dasharray="6,4"/>'
    )


def _frame(title):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="{GREY}" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="{MARGIN - 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )
    return parts


def _axis_labels(parts, x_lo, x_hi, y_lo, y_hi):
    parts.append(
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 24}" font-family="sans-serif" '
        f'font-size="12">{x_lo:.3g}</text>'
    )
    parts.append(
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 24}" text-anchor="end" '
        f'font-family="sans-serif" font-size="12">{x_hi:.3g}</text>'
    )
    parts.append(
        f'<text x="{MARGIN - 8}" y="{HEIGHT - MARGIN}" text-anchor="end" '
        f'font-family="sans-serif" font-size="12">{y_lo:.3g}</text>'
    )
    parts.append(
        f'<text x="{MARGIN - 8}" y="{MARGIN + 6}" text-anchor="end" '
        f'font-family="sans-serif" font-size="12">{y_hi:.3g}</text>'
    )


def trajectory_svg(times: Sequence[float], values: np.ndarray, style: PlotStyle) -> str:
    """Render a sampled trajectory; ``values`` is ``(K,)``/(K,1)`` or ``(K,2)``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0 or values.size == 0:
        raise ValueError("nothing to plot")
    if values.ndim == 1:
        values = values[:, None]
    if style.kind == "phase":
        if values.shape[1] < 2:
            raise ValueError("phase plots need two coordinates")
        return _phase_svg(values[:, 0], values[:, 1], style)
    comp = values[:, min(style.component, values.shape[1] - 1)]
    y_candidates = [comp.min(), comp.max()]
    for bounds in (style.invariant_bounds, style.target_bounds):
        if bounds is not None:
            y_candidates.extend(bounds)
    y_lo, y_hi = min(y_candidates), max(y_candidates)
    pad = 0.05 * max(y_hi - y_lo, 1e-9)
    y_lo -= pad
    y_hi += pad
    sx = _scale(times[0], times[-1], WIDTH - 2 * MARGIN, MARGIN)
    sy = _scale(y_lo, y_hi, -(HEIGHT - 2 * MARGIN), HEIGHT - MARGIN)
    parts = _frame(style.title)
    for bounds, color in ((style.invariant_bounds, GREEN), (style.target_bounds, BLUE)):
        if bounds is not None:
            for b in bounds:
                parts.append(_rule(MARGIN, sy(b), WIDTH - MARGIN, sy(b), color))
    inside = np.zeros(len(comp), dtype=bool)
    if style.target_bounds is not None:
        a, b = style.target_bounds
        inside = (comp > a) & (comp < b)
    run_color = None
    run = []
    for k in range(len(comp)):
        color = BLUE if (k > 0 and inside[k] and inside[k - 1]) else RED
        pt = (sx(times[k]), sy(comp[k]))
        if run_color is None:
            run_color = color
        if color != run_color:
            run.append(pt)
            parts.append(_polyline(run, run_color))
            run = [pt]
            run_color = color
        else:
            run.append(pt)
    if len(run) > 1:
        parts.append(_polyline(run, run_color))
    _axis_labels(parts, times[0], times[-1], y_lo, y_hi)
    parts.append("</svg>")
    return "\n".join(parts)


def _phase_svg(x1, x2, style: PlotStyle) -> str:
    xs = [x1.min(), x1.max()]
    ys = [x2.min(), x2.max()]
    if style.box is not None:
        xs.extend(style.box[0])
        ys.extend(style.box[1])
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad_x = 0.05 * max(x_hi - x_lo, 1e-9)
    pad_y = 0.05 * max(y_hi - y_lo, 1e-9)
    x_lo -= pad_x
    x_hi += pad_x
    y_lo -= pad_y
    y_hi += pad_y
    sx = _scale(x_lo, x_hi, WIDTH - 2 * MARGIN, MARGIN)
    sy = _scale(y_lo, y_hi, -(HEIGHT - 2 * MARGIN), HEIGHT - MARGIN)
    parts = _frame(style.title)
    if style.box is not None:
        (b1lo, b1hi), (b2lo, b2hi) = style.box
        parts.append(_rule(sx(b1lo), sy(b2lo), sx(b1hi), sy(b2lo), GREEN))
        parts.append(_rule(sx(b1lo), sy(b2hi), sx(b1hi), sy(b2hi), GREEN))
        parts.append(_rule(sx(b1lo), sy(b2lo), sx(b1lo), sy(b2hi), GREEN))
        parts.append(_rule(sx(b1hi), sy(b2lo), sx(b1hi), sy(b2hi), GREEN))
    pts = [(sx(a), sy(b)) for a, b in zip(x1, x2)]
    if len(pts) > 1:
        parts.append(_polyline(pts, RED))
    else:
        parts.append(f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="3" fill="{RED}"/>')
    _axis_labels(parts, x_lo, x_hi, y_lo, y_hi)
    parts.append("</svg>")
    return "\n".join(parts)


def grid_function_svg(gf, mode: Optional[int] = None, title: str = "") -> str:
    """Render a grid function: 1-D as per-mode lines, 2-D as a heat map."""
    modes = gf.domain.modes if mode is None else (mode,)
    if gf.domain.dim == 1:
        axis = gf.axes()[0]
        vals = gf.values
        v_lo = float(vals.min())
        v_hi = float(vals.max())
        pad = 0.05 * max(v_hi - v_lo, 1e-9)
        sx = _scale(axis[0], axis[-1], WIDTH - 2 * MARGIN, MARGIN)
        sy = _scale(v_lo - pad, v_hi + pad, -(HEIGHT - 2 * MARGIN), HEIGHT - MARGIN)
        parts = _frame(title)
        palette = [RED, BLUE, GREEN, GREY]
        for m in modes:
            slab = gf.domain.modes.index(m)
            pts = [(sx(x), sy(v)) for x, v in zip(axis, vals[slab])]
            parts.append(_polyline(pts, palette[slab % len(palette)]))
        _axis_labels(parts, axis[0], axis[-1], v_lo - pad, v_hi + pad)
        parts.append("</svg>")
        return "\n".join(parts)
    if gf.domain.dim == 2:
        m = modes[0]
        slab = gf.domain.modes.index(m)
        vals = gf.values[slab]
        v_lo = float(vals.min())
        v_hi = float(vals.max())
        span = max(v_hi - v_lo, 1e-12)
        nx, ny = vals.shape
        cw = (WIDTH - 2 * MARGIN) / nx
        ch = (HEIGHT - 2 * MARGIN) / ny
        parts = _frame(title or f"mode {m}")
        for i in range(nx):
            for j in range(ny):
                frac = (vals[i, j] - v_lo) / span
                shade = int(255 * (1 - frac))
                color = f"rgb({shade},{shade},255)"
                x = MARGIN + i * cw
                y = HEIGHT - MARGIN - (j + 1) * ch
                parts.append(
                    f'<rect x="{x:.2f}" y="{y:.2f}" width="{math.ceil(cw * 100) / 100}" '
                    f'height="{math.ceil(ch * 100) / 100}" fill="{color}"/>'
                )
        parts.append("</svg>")
        return "\n".join(parts)
    raise ValueError("only one- and two-dimensional grids are plottable")
