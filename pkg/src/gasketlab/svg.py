"""Minimal deterministic SVG output for circle families."""

from __future__ import annotations


def circles_svg(
    circles,
    size: int = 800,
    stroke: str = "#1a1a1a",
    stroke_width: float = 1.0,
    margin: float = 0.03,
) -> str:
    """SVG document drawing (cx, cy, r) circles, scaled to fit the canvas.

    Output is deterministic for a fixed input list (17 significant digit
    coordinates, no timestamps).
    """
    circles = list(circles)
    if circles:
        lo_x = min(c[0] - c[2] for c in circles)
        hi_x = max(c[0] + c[2] for c in circles)
        lo_y = min(c[1] - c[2] for c in circles)
        hi_y = max(c[1] + c[2] for c in circles)
        span = max(hi_x - lo_x, hi_y - lo_y, 1e-300)
        pad = margin * span
        lo_x, lo_y, span = lo_x - pad, lo_y - pad, span + 2 * pad
    else:
        lo_x = lo_y = 0.0
        span = 1.0
    scale = size / span

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<g fill="none" stroke="{stroke}" stroke-width="{stroke_width:.17g}">',
    ]
    for cx, cy, r in circles:
        px = (cx - lo_x) * scale
        py = size - (cy - lo_y) * scale  # flip y so the plane is upright
        lines.append(f'<circle cx="{px:.17g}" cy="{py:.17g}" r="{r * scale:.17g}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
