"""Self-contained SVG line charts (no renderer dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#d62728", "#2ca02c", "#1f77b4", "#ff7f0e")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_chart(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 720, height: int = 360, log_y: bool = False) -> str:
    """``series`` maps a legend label to y values (x is the sample index) or
    to an ``(x, y)`` pair."""
    left, right, top, bottom = 64, 16, 32, 44
    pw, ph = width - left - right, height - top - bottom
    lines = []
    for label, data in series.items():
        if isinstance(data, tuple):
            x, y = (np.asarray(d, dtype=float) for d in data)
        else:
            y = np.asarray(data, dtype=float)
            x = np.arange(y.size, dtype=float)
        if log_y:
            y = np.log10(np.maximum(y, 1e-300))
        ok = np.isfinite(x) & np.isfinite(y)
        lines.append((label, x[ok], y[ok]))
    xs = np.concatenate([l[1] for l in lines]) if lines else np.zeros(1)
    ys = np.concatenate([l[2] for l in lines]) if lines else np.zeros(1)
    if xs.size == 0:
        xs = ys = np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(y0, y1):
        label = f"1e{t:g}" if log_y else f"{t:.4g}"
        out.append(f'<line x1="{left}" y1="{py(t):.1f}" x2="{left + pw}" y2="{py(t):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 4}" y="{py(t) + 4:.1f}" text-anchor="end">{label}</text>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{top + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for i, (label, x, y) in enumerate(lines):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 14 + 14 * i
        out.append(f'<line x1="{left + 8}" y1="{ly - 4}" x2="{left + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 32}" y="{ly}">{escape(str(label))}</text>')
    if title:
        out.append(f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.0f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{top + ph / 2:.0f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {top + ph / 2:.0f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def forecast_chart(actual, predicted, title: str = "actual vs predicted") -> str:
    series = {}
    if actual is not None:
        series["actual"] = actual
    series["predicted"] = predicted
    return line_chart(series, title, "sample", "value")


def cost_chart(cost, title: str = "cost vs epoch") -> str:
    return line_chart({"cost": (np.arange(1, len(cost) + 1), cost)}, title, "epoch", "cost (log10)", log_y=True)
