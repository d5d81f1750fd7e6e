"""Minimal self-contained SVG figures (polylines, markers and axes)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c")
WIDTH, HEIGHT = 640, 420
MARGIN = 55


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def _frame(title, xlabel, ylabel, xlim, ylim):
    x0, x1 = xlim
    y0, y1 = ylim
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (np.asarray(x) - x0) / (x1 - x0) * pw

    def sy(y):
        return HEIGHT - MARGIN - (np.asarray(y) - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        px = sx(t)
        parts.append(f'<line x1="{_fmt(px)}" y1="{HEIGHT - MARGIN}" x2="{_fmt(px)}" '
                     f'y2="{HEIGHT - MARGIN + 4}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        py = sy(t)
        parts.append(f'<line x1="{MARGIN - 4}" y1="{_fmt(py)}" x2="{MARGIN}" y2="{_fmt(py)}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN - 6}" y="{_fmt(py + 4)}" text-anchor="end">{t:.3g}</text>')
    return parts, sx, sy


def _limits(v):
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def time_series_svg(t, X, title="solution") -> str:
    """Line plot of the three densities against time."""
    t = np.asarray(t, float)
    X = np.asarray(X, float)
    parts, sx, sy = _frame(title, "t", "density", _limits(t), _limits(X))
    for i in range(3):
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(sx(t), sy(X[:, i])))
        parts.append(f'<polyline fill="none" stroke="{COLORS[i]}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN + 5}" y="{MARGIN + 15 * i}" fill="{COLORS[i]}">x{i + 1}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def orbit_scatter_svg(points, title="orbit of the period map", highlight=()) -> str:
    """Scatter of 3-D points under a fixed oblique (isometric-style) projection."""
    P = np.asarray(points, float)
    # screen axes: x1 to the lower left, x2 to the lower right, x3 up
    u = (P[:, 1] - P[:, 0]) * np.cos(np.pi / 6)
    v = P[:, 2] - 0.5 * (P[:, 0] + P[:, 1])
    parts, sx, sy = _frame(title, "(x2 - x1) cos 30deg", "x3 - (x1 + x2)/2", _limits(u), _limits(v))
    for a, b in zip(sx(u), sy(v)):
        parts.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="1.1" fill="{COLORS[0]}"/>')
    for h in highlight:
        h = np.asarray(h, float)
        hu = (h[1] - h[0]) * np.cos(np.pi / 6)
        hv = h[2] - 0.5 * (h[0] + h[1])
        parts.append(f'<circle cx="{_fmt(sx(hu))}" cy="{_fmt(sy(hv))}" r="3" fill="{COLORS[1]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
