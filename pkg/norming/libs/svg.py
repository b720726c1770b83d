"""
SVG plot data: zero-set polylines, point sets and a |P| heat grid on the unit disc
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from jinja2 import Template

from norming.libs.poly import MultiPoly, evaluate_many

HEAT_STEP = 0.04
POINT_LIMIT = 5000

SVG_TEMPLATE = """<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{{ size }}" height="{{ size }}" viewBox="-1.05 -1.05 2.1 2.1">
    <title>{{ title }}</title>
    <g transform="scale(1,-1)">
        <circle cx="0" cy="0" r="1" fill="none" stroke="#888888" stroke-width="0.004"/>
        {% for cell in cells %}
        <rect x="{{ cell.x }}" y="{{ cell.y }}" width="{{ step }}" height="{{ step }}" fill="#d62728" fill-opacity="{{ cell.opacity }}"/>
        {% endfor %}
        {% for line in polylines %}
        <polyline points="{{ line.points }}" fill="none" stroke="{{ line.color }}" stroke-width="0.006"/>
        {% endfor %}
        {% for p in points %}
        <circle cx="{{ p[0] }}" cy="{{ p[1] }}" r="0.008" fill="#1f77b4"/>
        {% endfor %}
    </g>
</svg>
"""

PALETTE = ["#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]


@dataclass
class HeatCell:
    x: float
    y: float
    opacity: float


@dataclass
class Polyline:
    points: str
    color: str


def _polyline(vertices: np.ndarray, closed: bool, color: str) -> Polyline:
    if closed and len(vertices):
        vertices = np.vstack([vertices, vertices[:1]])
    return Polyline(points=" ".join(f"{x:.5f},{y:.5f}" for x, y in vertices), color=color)


def heat_cells(p: MultiPoly, step: float = HEAT_STEP) -> List[HeatCell]:
    """|p| sampled on the disc, scaled to opacities in [0, 0.8]"""
    axis = np.arange(-1.0, 1.0, step)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    centers = np.column_stack([X.ravel() + step / 2, Y.ravel() + step / 2])
    centers = centers[np.linalg.norm(centers, axis=1) <= 1.0]
    values = np.abs(evaluate_many(p, centers))
    top = float(values.max()) or 1.0
    return [
        HeatCell(x=round(cx - step / 2, 5), y=round(cy - step / 2, 5), opacity=round(0.8 * v / top, 4))
        for (cx, cy), v in zip(centers, values)
    ]


def render(
    curves: Sequence = (),
    points: Optional[Sequence[Sequence[float]]] = None,
    heat: Optional[MultiPoly] = None,
    title: str = "",
    size: int = 600,
) -> str:
    """
    `curves` are LevelCurve-like objects (with `components`, each having `array` and `closed`).
    """
    polylines = []
    for k, curve in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        polylines.extend(_polyline(c.array, c.closed, color) for c in curve.components)
    pts = [] if points is None else [p for p in points if len(p) == 2][:POINT_LIMIT]
    cells = heat_cells(heat) if heat is not None and heat.n == 2 else []
    return Template(SVG_TEMPLATE).render(
        title=title, size=size, cells=cells, step=HEAT_STEP, polylines=polylines, points=pts
    )


def save(path: str, **kwargs) -> str:
    """Render and write to `path`; returns the path"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render(**kwargs), encoding="utf-8")
    return str(target)
