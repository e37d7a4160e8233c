"""Deterministic SVG rendering of 2-D paths over a circle-grid field.

The document is assembled from fixed-format strings (4 decimal places), so
identical inputs produce byte-identical output.  Waypoints are drawn as dots,
grouped and colored by pod when a partition is supplied.
"""
from __future__ import annotations

import numpy as np

from .path import FullPathVector
from .pods import Color, PodPartition

_SIZE = 600.0
_MARGIN = 30.0
_POD_FILL = {Color.BLUE: "#1f6fb5", Color.RED: "#c23b22"}
_NEUTRAL_FILL = "#444444"


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def render_2d(path: FullPathVector, field=None, out=None,
              partition: PodPartition = None) -> str:
    """Render a 2-D path (and optional circle field) to an SVG document.

    Returns the SVG text; writes it to `out` when a file path is given.
    """
    if path.n != 2:
        raise ValueError(f"can only render 2-D paths, got dimension {path.n}")
    W = path.waypoints
    if field is not None:
        lo = np.asarray(field.domain.lower, dtype=np.float64)
        hi = np.asarray(field.domain.upper, dtype=np.float64)
    else:
        lo = W.min(axis=0) - 0.05
        hi = W.max(axis=0) + 0.05
    span = np.maximum(hi - lo, 1e-9)
    inner = _SIZE - 2.0 * _MARGIN
    scale = inner / float(span.max())

    def sx(x: float) -> float:
        return _MARGIN + (x - lo[0]) * scale

    def sy(y: float) -> float:
        # flip: SVG y grows downward
        return _SIZE - _MARGIN - (y - lo[1]) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_SIZE)}" '
        f'height="{int(_SIZE)}" viewBox="0 0 {int(_SIZE)} {int(_SIZE)}">',
        f'<rect width="{int(_SIZE)}" height="{int(_SIZE)}" fill="#ffffff"/>',
    ]
    if field is not None:
        for cx, cy in field.centers:
            parts.append(
                f'<circle class="field-falloff" cx="{_fmt(sx(cx))}" cy="{_fmt(sy(cy))}" '
                f'r="{_fmt(field.falloff * scale)}" fill="#d9d9d9"/>'
            )
        for cx, cy in field.centers:
            parts.append(
                f'<circle class="field-core" cx="{_fmt(sx(cx))}" cy="{_fmt(sy(cy))}" '
                f'r="{_fmt(field.radius * scale)}" fill="#7a7a7a"/>'
            )
    points = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in W)
    parts.append(
        f'<polyline class="path" points="{points}" fill="none" '
        f'stroke="#111111" stroke-width="1.5"/>'
    )
    dot = 3.0
    if partition is not None:
        if partition.waypoint_count != path.waypoint_count:
            raise ValueError("partition does not match the path length")
        for pod in partition.pods:
            parts.append(
                f'<g class="pod" data-color="{pod.color.value}" '
                f'fill="{_POD_FILL[pod.color]}">'
            )
            for i in pod.index_range():
                parts.append(
                    f'<circle class="waypoint" cx="{_fmt(sx(W[i, 0]))}" '
                    f'cy="{_fmt(sy(W[i, 1]))}" r="{_fmt(dot)}"/>'
                )
            parts.append("</g>")
    else:
        parts.append(f'<g class="pod" fill="{_NEUTRAL_FILL}">')
        for x, y in W:
            parts.append(
                f'<circle class="waypoint" cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" '
                f'r="{_fmt(dot)}"/>'
            )
        parts.append("</g>")
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
