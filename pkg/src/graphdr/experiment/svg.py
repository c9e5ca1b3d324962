"""Standalone SVG scatter plots of 2-D embeddings, one colour per class."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["PALETTE", "render_scatter_svg"]

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2")


def _fmt(v):
    return f"{v:.2f}"


def render_scatter_svg(embedding, labels, class_names, palette=PALETTE, title=None,
                       width=640, height=480, legend_width=180, radius=2.5):
    """Scatter of ``embedding`` rows coloured by ``labels``, legend on the right.

    Axes are scaled to the data with a 5% margin on each side.
    """
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.size == 0 and emb.ndim < 2:
        emb = emb.reshape(0, 2)
    if emb.ndim != 2 or emb.shape[1] != 2:
        raise ValueError(f"embedding must have exactly 2 columns, got shape {emb.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(emb):
        raise ValueError("one label per embedded point required")
    if len(class_names) > len(palette):
        raise ValueError(f"{len(class_names)} classes but only {len(palette)} palette colours")
    if len(labels) and (labels.min() < 0 or labels.max() >= len(class_names)):
        raise ValueError("label outside the class/palette range")

    plot_w = width - legend_width
    top = 30 if title else 10
    plot_h = height - top - 10
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{plot_w / 2:.1f}" y="20" font-family="sans-serif" font-size="14" '
                   f'text-anchor="middle">{escape(title)}</text>')
    out.append(f'<rect x="10" y="{top}" width="{plot_w - 20}" height="{plot_h}" fill="none" stroke="#888"/>')
    if len(emb):
        lo, hi = emb.min(axis=0), emb.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        lo, span = lo - 0.05 * span, span * 1.1
        sx = 10 + (emb[:, 0] - lo[0]) / span[0] * (plot_w - 20)
        sy = top + plot_h - (emb[:, 1] - lo[1]) / span[1] * plot_h
        out.append('<g class="points" stroke="none" fill-opacity="0.8">')
        for x, y, c in zip(sx, sy, labels):
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{radius}" fill="{palette[c]}"/>')
        out.append("</g>")
    out.append('<g class="legend" font-family="sans-serif" font-size="12">')
    for k, name in enumerate(class_names):
        y = top + 10 + 20 * k
        out.append(f'<rect x="{plot_w + 5}" y="{y}" width="12" height="12" fill="{palette[k]}"/>')
        out.append(f'<text x="{plot_w + 23}" y="{y + 10}">{escape(str(name))}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
