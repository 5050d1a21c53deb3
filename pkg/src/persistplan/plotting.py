"""Minimal SVG scatter of log10(feature count) against ICC with fitted lines."""

from __future__ import annotations

import math
from pathlib import Path

from .regression import RegressionFit

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f", "#bcbd22"]


def _label(key: tuple) -> str:
    kind, value, far = key
    if kind == "eer":
        return f"EER < {value * 100:g}%"
    return f"FRR {value * 100:g}% @ FAR {far * 100:g}%"


def write_fit_svg(path: str | Path, columns: dict[tuple, list], fits: dict[tuple, RegressionFit],
                  width: int = 640, height: int = 420) -> None:
    pts = [(x, math.log10(n)) for cells in columns.values() for x, n in cells if n is not None]
    if not pts:
        Path(path).write_text('<svg xmlns="http://www.w3.org/2000/svg"/>\n')
        return
    x0, x1 = min(p[0] for p in pts) - 0.05, max(p[0] for p in pts) + 0.05
    y0, y1 = 0.0, max(p[1] for p in pts) * 1.1
    ml, mr, mt, mb = 60, 170, 20, 50

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{sy(y0):.1f}" x2="{width - mr}" y2="{sy(y0):.1f}" stroke="black"/>',
        f'<line x1="{ml}" y1="{sy(y0):.1f}" x2="{ml}" y2="{mt}" stroke="black"/>',
        f'<text x="{(ml + width - mr) / 2:.0f}" y="{height - 10}" text-anchor="middle">ICC</text>',
        f'<text x="15" y="{(mt + height - mb) / 2:.0f}" transform="rotate(-90 15 {(mt + height - mb) / 2:.0f})" '
        f'text-anchor="middle">log10(number of features)</text>',
    ]
    for i, (key, cells) in enumerate(columns.items()):
        color = _COLORS[i % len(_COLORS)]
        for x, n in cells:
            if n is not None:
                parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(math.log10(n)):.1f}" r="3" fill="{color}"/>')
        f = fits.get(key)
        if f is not None:
            xa, xb = f.icc_min, f.icc_max
            parts.append(
                f'<line x1="{sx(xa):.1f}" y1="{sy(f.intercept + f.slope * xa):.1f}" '
                f'x2="{sx(xb):.1f}" y2="{sy(f.intercept + f.slope * xb):.1f}" stroke="{color}"/>'
            )
        ly = mt + 16 * i + 10
        parts.append(f'<circle cx="{width - mr + 15}" cy="{ly}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{width - mr + 24}" y="{ly + 4}">{_label(key)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
