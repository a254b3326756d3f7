"""Minimal deterministic SVG line plots (no plotting library needed).

Identical input gives byte-identical output: coordinates are printed with a
fixed number of decimals and nothing time- or environment-dependent is
embedded in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=50)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    note: str | None = None  # e.g. a fitted slope, drawn at the last point


@dataclass
class PlotSpec:
    series: list[Series]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logy: bool = False
    extra: dict = field(default_factory=dict)


def _finite_points(s: Series, logy: bool):
    pts = []
    for x, y in zip(s.x, s.y):
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if logy:
            if y <= 0:
                continue
            y = math.log10(y)
        pts.append((x, y))
    return pts


def render_svg(spec: PlotSpec) -> str:
    if not spec.series or all(len(s.x) == 0 for s in spec.series):
        raise ValueError("nothing to plot: empty series")
    data = [_finite_points(s, spec.logy) for s in spec.series]
    allp = [p for d in data for p in d]
    if not allp:
        raise ValueError("nothing to plot: no finite points")
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    if spec.logy:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    L, R, T, B = MARGIN["left"], MARGIN["right"], MARGIN["top"], MARGIN["bottom"]
    pw, ph = WIDTH - L - R, HEIGHT - T - B
    X = lambda x: L + (x - x0) / (x1 - x0) * pw
    Y = lambda y: T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if spec.title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="15">{escape(spec.title)}</text>')
    # y ticks: decades on a log axis, five even ticks otherwise
    if spec.logy:
        step = max(1, int(math.ceil((y1 - y0) / 10)))
        ticks = [(v, f"1e{v}") for v in range(int(y0), int(y1) + 1, step)]
    else:
        ticks = [(y0 + i * (y1 - y0) / 4, f"{y0 + i * (y1 - y0) / 4:.3g}") for i in range(5)]
    for v, lab in ticks:
        out.append(f'<line x1="{L - 4}" y1="{Y(v):.2f}" x2="{L}" y2="{Y(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 6}" y="{Y(v) + 4:.2f}" text-anchor="end" font-size="11">{escape(lab)}</text>')
    for i in range(5):
        v = x0 + i * (x1 - x0) / 4
        out.append(f'<line x1="{X(v):.2f}" y1="{T + ph}" x2="{X(v):.2f}" y2="{T + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X(v):.2f}" y="{T + ph + 17}" text-anchor="middle" font-size="11">{v:.3g}</text>')
    if spec.xlabel:
        out.append(f'<text x="{L + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(spec.xlabel)}</text>')
    if spec.ylabel:
        out.append(
            f'<text x="16" y="{T + ph / 2:.2f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 16 {T + ph / 2:.2f})">{escape(spec.ylabel)}</text>'
        )
    for i, (s, pts) in enumerate(zip(spec.series, data)):
        color = COLORS[i % len(COLORS)]
        if pts:
            coords = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
            if s.note:
                lx, ly = pts[-1]
                out.append(f'<text x="{X(lx) + 4:.2f}" y="{Y(ly) - 4:.2f}" font-size="10" fill="{color}">{escape(s.note)}</text>')
        ly = T + 14 + 16 * i
        out.append(f'<line x1="{L + pw + 10}" y1="{ly - 4}" x2="{L + pw + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 34}" y="{ly}" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, path, logy: bool = False, title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
    """Write an SVG line plot. ``series`` is a list of :class:`Series` or (label, x, y) tuples."""
    items = [s if isinstance(s, Series) else Series(*s) for s in series]
    svg = render_svg(PlotSpec(items, title, xlabel, ylabel, logy))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
    return path
