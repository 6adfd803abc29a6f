"""Deterministic text artifacts: CSV dumps and a minimal SVG region plot.

Floats are written with 17 significant digits so that identical runs give
byte-identical files.
"""
from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

from .regions import MARGINAL, OUT_OF_MODEL, LabelGrid, RegionMap


def fmt(v) -> str:
    return format(float(v), ".17g")


def grid_csv(rmap: RegionMap) -> str:
    grid = rmap.grid
    two = grid.slice.dim == 2
    lines = ["p,q,label,component" if two else "p,label,component"]
    W, H = grid.shape
    for i in range(W):
        for j in range(H):
            xy = ",".join(fmt(c) for c in grid.coords(i, j))
            lines.append(f"{xy},{grid.labels[i, j]},{rmap.components[i, j]}")
    return "\n".join(lines) + "\n"


def scan_csv(grid: LabelGrid) -> str:
    lines = ["p,label"]
    for i in range(grid.shape[0]):
        lines.append(f"{fmt(grid.axes[0][i])},{grid.labels[i, 0]}")
    return "\n".join(lines) + "\n"


def boundary_csv(polylines) -> str:
    blocks = []
    for line in polylines:
        rows = [f"{fmt(pt.coords[0])},{fmt(pt.coords[1])},{fmt(pt.r)},{int(pt.refined)}" for pt in line]
        blocks.append("\n".join(rows))
    return "p,q,r,refined\n" + "\n\n".join(blocks) + ("\n" if blocks else "")


def roots_csv(roots: np.ndarray) -> str:
    lines = ["re,im,arg"]
    for z in roots:
        lines.append(f"{fmt(z.real)},{fmt(z.imag)},{fmt(np.angle(z))}")
    return "\n".join(lines) + "\n"


_STABLE = "#9ed99a"
_SPECIAL = {MARGINAL: "#7f7f7f", OUT_OF_MODEL: "#ffffff"}
_UNSTABLE = ["#f4a582", "#d6604d", "#b2182b", "#67001f", "#fdae61", "#e08214"]


def color(label: int) -> str:
    if label in _SPECIAL:
        return _SPECIAL[label]
    if label == 0:
        return _STABLE
    return _UNSTABLE[(label - 1) % len(_UNSTABLE)]


def region_svg(rmap: RegionMap, names: Sequence[str], size: int = 480, title: str = "") -> str:
    """Region-coloured raster with boundary polylines and labelled axes."""
    grid = rmap.grid
    (x0, x1), (y0, y1) = grid.slice.bounds
    left, top, pad = 60, 30, 20
    W, H = grid.shape

    def px(x):
        return left + (x - x0) / (x1 - x0) * size

    def py(y):
        return top + size - (y - y0) / (y1 - y0) * size

    dx, dy = size / W, size / H
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + size + pad}" '
           f'height="{top + size + 50}" font-family="sans-serif" font-size="12">']
    if title:
        out.append(f'<text x="{left + size / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    # merge vertical runs of equal label to keep the file small
    for i in range(W):
        j = 0
        while j < H:
            k = j
            while k + 1 < H and grid.labels[i, k + 1] == grid.labels[i, j]:
                k += 1
            x = left + i * dx
            y = top + size - (k + 1) * dy
            out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{dx:.3f}" height="{(k - j + 1) * dy:.3f}" '
                       f'fill="{color(int(grid.labels[i, j]))}" shape-rendering="crispEdges"/>')
            j = k + 1
    for line in rmap.polylines:
        pts = " ".join(f"{px(p.coords[0]):.3f},{py(p.coords[1]):.3f}" for p in line)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    for v in np.linspace(x0, x1, 5):
        out.append(f'<line x1="{px(v):.3f}" y1="{top + size}" x2="{px(v):.3f}" y2="{top + size + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.3f}" y="{top + size + 18}" text-anchor="middle">{v:g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<line x1="{left - 5}" y1="{py(v):.3f}" x2="{left}" y2="{py(v):.3f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(v) + 4:.3f}" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{left + size / 2:.1f}" y="{top + size + 38}" text-anchor="middle">{escape(names[0])}</text>')
    out.append(f'<text x="16" y="{top + size / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + size / 2:.1f})">{escape(names[1])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
