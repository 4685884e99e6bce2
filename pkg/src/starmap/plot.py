"""Static SVG scatter plots of 2-D embeddings with optional star overlay."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# tab20
PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)
DEFAULT_COLOR = "#1f77b4"
STAR_COLOR = "#000000"
MARGIN = 0.05


@dataclass(frozen=True)
class PlotSpec:
    width: int = 800
    height: int = 800
    point_radius: float = 1.5
    color_by: Optional[str] = None
    show_stars: bool = True
    star_radius: float = 7.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")


def viewport_map(points, width, height, margin=MARGIN):
    """Affine map from data to pixel coordinates.

    Keeps the aspect ratio, leaves ``margin`` of each side free, centers
    the data and flips the y axis.  Returns a function ``(N, 2) -> (N, 2)``.
    """
    points = np.asarray(points, dtype=np.float64)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    inner_w = width * (1.0 - 2.0 * margin)
    inner_h = height * (1.0 - 2.0 * margin)
    scales = [inner_w / span[0] if span[0] > 0 else math.inf,
              inner_h / span[1] if span[1] > 0 else math.inf]
    scale = min(scales)
    if not math.isfinite(scale):
        scale = 1.0
    center = (lo + hi) / 2.0

    def apply(p):
        p = np.asarray(p, dtype=np.float64)
        px = width / 2.0 + (p[:, 0] - center[0]) * scale
        py = height / 2.0 - (p[:, 1] - center[1]) * scale
        return np.column_stack([px, py])

    return apply


def _star_polygon(cx, cy, r_outer, r_inner=None):
    r_inner = r_outer * 0.45 if r_inner is None else r_inner
    pts = []
    for i in range(10):
        r = r_outer if i % 2 == 0 else r_inner
        angle = -math.pi / 2 + i * math.pi / 5
        pts.append(f"{cx + r * math.cos(angle):.2f},{cy + r * math.sin(angle):.2f}")
    return " ".join(pts)


def render_svg(Y, labels=None, stars=None, spec=PlotSpec()):
    """SVG document with one circle per point and a star polygon per star."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ValueError(f"plotting needs a 2-D embedding, got shape {Y.shape}")
    draw_stars = stars is not None and spec.show_stars and len(stars) > 0
    extent = np.vstack([Y, stars]) if draw_stars else Y
    to_px = viewport_map(extent, spec.width, spec.height)
    px = to_px(Y)
    if labels is not None:
        _, codes = np.unique(np.asarray(labels), return_inverse=True)
        colors = [PALETTE[c % len(PALETTE)] for c in codes.tolist()]
    else:
        colors = [DEFAULT_COLOR] * Y.shape[0]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="#ffffff"/>',
        '<g class="points">',
    ]
    r = spec.point_radius
    for (x, y), color in zip(px.tolist(), colors):
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')
    out.append("</g>")
    if draw_stars:
        out.append('<g class="stars">')
        for x, y in to_px(stars).tolist():
            out.append(f'<polygon points="{_star_polygon(x, y, spec.star_radius)}" '
                       f'fill="{STAR_COLOR}" stroke="#ffffff" stroke-width="0.8"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(path, Y, labels=None, stars=None, spec=PlotSpec()):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(Y, labels, stars, spec))
