"""Minimal hand-written SVG plots for experiment outputs."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .experiments import acyclic_limit_formula

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 24, 36, 52


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(xlabel)}</text>',
        f'<text x="16" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {(TOP + H - BOTTOM) / 2})">{escape(ylabel)}</text>',
    ]


def _ticks(lines, xs, ys, fx, fy, xfmt="{:.1f}", yfmt="{:.1f}"):
    for x in xs:
        px = fx(x)
        lines.append(f'<line x1="{px:.2f}" y1="{H - BOTTOM}" x2="{px:.2f}" y2="{H - BOTTOM + 5}" stroke="black"/>')
        lines.append(f'<text x="{px:.2f}" y="{H - BOTTOM + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{xfmt.format(x)}</text>')
    for y in ys:
        py = fy(y)
        lines.append(f'<line x1="{LEFT - 5}" y1="{py:.2f}" x2="{LEFT}" y2="{py:.2f}" stroke="black"/>')
        lines.append(f'<text x="{LEFT - 8}" y="{py + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{yfmt.format(y)}</text>')


def acyclicity_curve(points: list[dict]) -> str:
    """Empirical acyclic fractions with Wilson bars over the limit curve on (0, 1)."""
    fx = lambda x: LEFT + x * (W - LEFT - RIGHT)  # noqa: E731
    fy = lambda y: H - BOTTOM - y * (H - TOP - BOTTOM)  # noqa: E731
    out = _frame("Probability that G(n, d/n) is acyclic", "d", "acyclic fraction")
    _ticks(out, np.linspace(0, 1, 6), np.linspace(0, 1, 6), fx, fy)
    grid = [(i + 0.5) / 200 for i in range(200)]
    path = " ".join(
        f"{'M' if i == 0 else 'L'}{fx(d):.2f},{fy(acyclic_limit_formula(d)):.2f}" for i, d in enumerate(grid)
    )
    out.append(f'<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for pt in points:
        d = pt["d"]
        if not 0 <= d <= 1:
            continue
        lo, hi = pt["wilson_95_interval"]
        px = fx(d)
        out.append(f'<line x1="{px:.2f}" y1="{fy(lo):.2f}" x2="{px:.2f}" y2="{fy(hi):.2f}" stroke="firebrick"/>')
        out.append(f'<circle cx="{px:.2f}" cy="{fy(pt["acyclic_fraction"]):.2f}" r="3" fill="firebrick"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def radius_histogram(radii, bins: int = 30) -> str:
    """Histogram of positive radii on a log10 axis."""
    radii = np.asarray([r for r in radii if r > 0], dtype=np.float64)
    out = _frame("Spectral radius of non-acyclic trials", "log10 radius", "count")
    if radii.size == 0:
        out.append("</svg>")
        return "\n".join(out) + "\n"
    logs = np.log10(radii)
    lo, hi = float(logs.min()), float(logs.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(logs, bins=bins, range=(lo, hi))
    top = max(1, int(counts.max()))
    fx = lambda x: LEFT + (x - lo) / (hi - lo) * (W - LEFT - RIGHT)  # noqa: E731
    fy = lambda y: H - BOTTOM - y / top * (H - TOP - BOTTOM)  # noqa: E731
    ystep = max(1, math.ceil(top / 5))
    _ticks(out, np.linspace(lo, hi, 5), range(0, top + 1, ystep), fx, fy, "{:.2f}", "{:d}")
    for c, a, b in zip(counts.tolist(), edges[:-1], edges[1:]):
        if c:
            out.append(
                f'<rect x="{fx(a):.2f}" y="{fy(c):.2f}" width="{fx(b) - fx(a):.2f}" '
                f'height="{fy(0) - fy(c):.2f}" fill="steelblue" stroke="white"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
