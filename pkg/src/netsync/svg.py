"""Minimal SVG line plots: polylines, a frame, and min/max tick labels."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def line_plot(path, series, title="", xlabel="", ylabel="", width=480, height=360, logy=False, markers=False):
    """Write an SVG with one polyline per ``(xs, ys, label)`` in ``series``."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 50
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    cleaned = []
    for xs, ys, label in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if logy:
            ok &= ys > 0
            ys = np.where(ok, np.log10(np.where(ys > 0, ys, 1.0)), np.nan)
        cleaned.append((xs[ok], ys[ok], label))
    allx = np.concatenate([c[0] for c in cleaned]) if cleaned else np.array([0.0, 1.0])
    ally = np.concatenate([c[1] for c in cleaned]) if cleaned else np.array([0.0, 1.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = allx.min(), allx.max()
    y0, y1 = ally.min(), ally.max()
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def sx(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return pad_t + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{pad_l + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{pad_t + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {pad_t + ph / 2})">'
        f"{escape(ylabel + (' (log10)' if logy else ''))}</text>",
    ]
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{sx(v):.1f}" y="{pad_t + ph + 15}" text-anchor="{anchor}">{v:.4g}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{pad_l - 5}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    for k, (xs, ys, label) in enumerate(cleaned):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if markers:
            out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>' for a, b in zip(xs, ys))
        out.append(f'<text x="{pad_l + 8}" y="{pad_t + 14 + 14 * k}" fill="{color}">{escape(str(label))}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)
