"""Standalone SVG emission for trajectory inspection (no plotting deps)."""

from __future__ import annotations

import numpy as np

from .predictor import Latent
from .sampler import Trajectory

_SVG_NS = "http://www.w3.org/2000/svg"


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _polyline(points, stroke: str, width: float = 1.5) -> str:
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return (
        f'<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{pts}"/>'
    )


def _panel_frame(x0, y0, w, h, title):
    return (
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#888"/>'
        f'<text x="{x0 + 4}" y="{y0 + 14}" font-size="12" font-family="sans-serif">{title}</text>'
    )


def plot_trajectory(traj: Trajectory, z0: Latent, path) -> str:
    """Write an SVG with the per-step distance-to-z0 curve (one point per
    recorded state) and, for 2-D latents, the latent path in the plane.
    Returns the path written."""
    dists = [float(np.linalg.norm(z.data - z0.data)) for z in traj.latents]
    n = len(dists)
    pw, ph, margin = 420, 300, 36
    two_d = z0.dim == 2
    width = pw * (2 if two_d else 1) + margin * (3 if two_d else 2)
    height = ph + 2 * margin

    parts = [
        f'<svg xmlns="{_SVG_NS}" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    # distance curve panel
    x0, y0 = margin, margin
    dmax = max(max(dists), 1e-12)
    points = [
        (x0 + pw * (i / max(n - 1, 1)), y0 + ph - ph * (d / dmax))
        for i, d in enumerate(dists)
    ]
    parts.append(_panel_frame(x0, y0, pw, ph, "distance to z0 per step"))
    parts.append(_polyline(points, "#1f77b4"))
    parts.append(
        f'<text x="{x0}" y="{y0 + ph + 16}" font-size="11" font-family="sans-serif">'
        f"steps 0..{n - 1}, max dist {_fmt(dmax)}</text>"
    )

    if two_d:
        x1 = 2 * margin + pw
        xs = np.array([z.data[0] for z in traj.latents] + [z0.data[0]])
        ys = np.array([z.data[1] for z in traj.latents] + [z0.data[1]])
        lo = min(xs.min(), ys.min())
        hi = max(xs.max(), ys.max())
        span = max(hi - lo, 1e-12)

        def to_px(vx, vy):
            return (
                x1 + pw * (vx - lo) / span,
                y0 + ph - ph * (vy - lo) / span,
            )

        path_points = [to_px(z.data[0], z.data[1]) for z in traj.latents]
        cx, cy = to_px(z0.data[0], z0.data[1])
        parts.append(_panel_frame(x1, y0, pw, ph, "latent path (2-D)"))
        parts.append(_polyline(path_points, "#d62728"))
        parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4" fill="#2ca02c"/>')

    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    return str(path)
