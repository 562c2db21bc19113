"""Learning-curve SVGs written as plain text, one line per run group.

Runs whose file names differ only in a ``seed<N>`` component form a group;
each group is drawn as its mean over seeds with a min/max band.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .runlog import read_csv

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
GRID_POINTS = 200


def group_key(path) -> str:
    stem = Path(path).stem
    key = re.sub(r"[_-]?seed\d+", "", stem)
    return key or stem


def load_series(path, column: str) -> tuple[np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    if column not in header:
        raise ValueError(f"{path}: no column {column!r}; available: {', '.join(header)}")
    x_col = "env_step" if "env_step" in header else header[0]
    pts = [(r[x_col], r[column]) for r in rows
           if isinstance(r[column], float) and math.isfinite(r[column])]
    if not pts:
        return np.empty(0), np.empty(0)
    x, y = np.array(pts, dtype=float).T
    return x, y


def aggregate(series: list[tuple[np.ndarray, np.ndarray]]):
    """Interpolate every run onto a shared step grid and reduce across runs."""
    series = [(x, y) for x, y in series if x.size]
    if not series:
        return None
    lo = max(x[0] for x, _ in series)
    hi = min(x[-1] for x, _ in series)
    if hi <= lo:
        lo = min(x[0] for x, _ in series)
        hi = max(x[-1] for x, _ in series)
    grid = np.linspace(lo, hi, GRID_POINTS) if hi > lo else np.array([lo])
    ys = np.array([np.interp(grid, x, y) for x, y in series])
    return grid, ys.mean(axis=0), ys.min(axis=0), ys.max(axis=0)


def emit_plot(csv_paths, column: str, out_svg, title: str | None = None) -> str:
    """Write an SVG of ``column`` against env steps; returns the SVG text."""
    if not csv_paths:
        raise ValueError("emit_plot needs at least one CSV")
    groups: dict[str, list] = {}
    for p in csv_paths:
        groups.setdefault(group_key(p), []).append(load_series(p, column))
    curves = {k: aggregate(v) for k, v in groups.items()}
    curves = {k: v for k, v in curves.items() if v is not None}

    x0, y0 = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    if curves:
        xmin = min(c[0][0] for c in curves.values())
        xmax = max(c[0][-1] for c in curves.values())
        ymin = min(c[2].min() for c in curves.values())
        ymax = max(c[3].max() for c in curves.values())
    else:
        xmin, xmax, ymin, ymax = 0.0, 1.0, 0.0, 1.0
    if xmax <= xmin:
        xmax = xmin + 1.0
    if ymax <= ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5

    def sx(v):
        return x0 + (v - xmin) / (xmax - xmin) * pw

    def sy(v):
        return y0 + ph - (v - ymin) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{x0 + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">env_step</text>',
        f'<text x="16" y="{y0 + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {y0 + ph / 2:.1f})">{escape(column)}</text>',
    ]
    if title:
        out.append(f'<text x="{x0 + pw / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i in range(5):
        xv = xmin + (xmax - xmin) * i / 4
        yv = ymin + (ymax - ymin) * i / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{y0 + ph + 16}" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{x0 - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
    for i, (name, (grid, mean, lo, hi)) in enumerate(sorted(curves.items())):
        color = COLORS[i % len(COLORS)]
        band = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(grid, hi)]
        band += [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(grid[::-1], lo[::-1])]
        out.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(grid, mean))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + 14 + 16 * i
        out.append(f'<line x1="{x0 + pw + 10}" y1="{ly}" x2="{x0 + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        n = len(groups[name])
        out.append(f'<text x="{x0 + pw + 34}" y="{ly + 4}">{escape(name)} (n={n})</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    Path(out_svg).write_text(text)
    return text
