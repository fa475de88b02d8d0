"""SVG drawings of 2-D pointed subspaces.

Complete points are dots.  One-dimensional subspaces are dashed lines
clipped to the panel, with the basepoint marked by a hollow circle.  A
two-dimensional subspace (both coordinates free) shades the whole panel.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import NotTwoDimensional

PANEL = 320
MARGIN = 20


def _bounds(points):
    if not points:
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    xs = np.stack([p.basepoint for p in points])
    lo, hi = xs.min(axis=0), xs.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.15 * span.max() + 0.5
    return lo - pad, hi + pad


def _clip_line(x, v, lo, hi):
    """Segment of ``x + t v`` inside the box (Liang-Barsky)."""
    t0, t1 = -np.inf, np.inf
    for k in range(2):
        if abs(v[k]) < 1e-15:
            if not lo[k] <= x[k] <= hi[k]:
                return None
            continue
        a, b = (lo[k] - x[k]) / v[k], (hi[k] - x[k]) / v[k]
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    if t0 > t1:
        return None
    return x + t0 * v, x + t1 * v


def _panel(points, offset_x, title):
    lo, hi = _bounds(points)
    scale = (PANEL - 2 * MARGIN) / (hi - lo).max()

    def to_px(p):
        return (offset_x + MARGIN + (p[0] - lo[0]) * scale,
                PANEL - MARGIN - (p[1] - lo[1]) * scale)

    parts = ['<g class="panel">',
             f'<rect x="{offset_x}" y="0" width="{PANEL}" height="{PANEL}" fill="white" stroke="#888"/>']
    if title:
        parts.append(f'<text x="{offset_x + PANEL / 2}" y="14" text-anchor="middle" '
                     f'font-size="12">{escape(title)}</text>')
    for p in points:
        cx, cy = to_px(p.basepoint)
        if p.rank == 0:
            parts.append(f'<circle class="point" cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="black"/>')
        elif p.rank == 1:
            seg = _clip_line(p.basepoint, p.basis[:, 0], lo, hi)
            if seg is not None:
                (x1, y1), (x2, y2) = to_px(seg[0]), to_px(seg[1])
                parts.append(f'<line class="subspace" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" '
                             f'y2="{y2:.2f}" stroke="black" stroke-dasharray="6,4"/>')
            parts.append(f'<circle class="basepoint" cx="{cx:.2f}" cy="{cy:.2f}" r="3" '
                         f'fill="white" stroke="black"/>')
        else:
            parts.append(f'<rect class="plane" x="{offset_x}" y="0" width="{PANEL}" height="{PANEL}" '
                         f'fill="#ddd" fill-opacity="0.4"/>')
            parts.append(f'<circle class="basepoint" cx="{cx:.2f}" cy="{cy:.2f}" r="3" '
                         f'fill="white" stroke="black"/>')
    parts.append("</g>")
    return parts


def render2d(points, path, after=None, titles=("before", "after")):
    """Write an SVG of ``points``; with ``after`` given, draw two side-by-side panels."""
    panels = [list(points)] + ([list(after)] if after is not None else [])
    for group in panels:
        for p in group:
            if p.dimension != 2:
                raise NotTwoDimensional(f"cannot draw a subspace of R^{p.dimension}")
    width = PANEL * len(panels)
    body = []
    for k, group in enumerate(panels):
        title = titles[k] if after is not None else None
        body += _panel(group, k * PANEL, title)
    svg = "\n".join(
        [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL}" '
         f'viewBox="0 0 {width} {PANEL}">'] + body + ["</svg>"]
    )
    Path(path).write_text(svg + "\n")
    return path
