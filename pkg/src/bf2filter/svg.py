"""Minimal self-contained SVG line/scatter plots for CLI output."""
from __future__ import annotations

import math
from html import escape

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 440
_L, _R, _T, _B = 70, 20, 40, 60


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_plot(series, title="", xlabel="", ylabel="", logx=False, xlim=None, ylim=None,
              markers=True, comment=None) -> str:
    """Render ``series`` = [(label, xs, ys), ...] as an SVG document string."""
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    pts = [(tx(x), y) for _, xs, ys in series for x, y in zip(xs, ys)
           if not (math.isnan(y) or (logx and x <= 0))]
    if xlim is None:
        xlim = (min((p[0] for p in pts), default=0.0), max((p[0] for p in pts), default=1.0))
    else:
        xlim = (tx(xlim[0]), tx(xlim[1]))
    if ylim is None:
        ylim = (min((p[1] for p in pts), default=0.0), max((p[1] for p in pts), default=1.0))
    x0, x1 = xlim
    y0, y1 = ylim
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = _W - _L - _R, _H - _T - _B

    def sx(v):
        return _L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _T + ph - (v - y0) / (y1 - y0) * ph

    out = [f"<!-- {escape(comment).replace('--', '- -')} -->"] if comment else []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
               f'font-family="sans-serif" font-size="12">')
    out.append(f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>')
    for v in _ticks(x0, x1):
        label = f"{10 ** v:.3g}" if logx else f"{v:.3g}"
        out.append(f'<line x1="{sx(v):.1f}" y1="{_T + ph}" x2="{sx(v):.1f}" y2="{_T + ph + 5}" stroke="#000"/>')
        out.append(f'<text x="{sx(v):.1f}" y="{_T + ph + 18}" text-anchor="middle">{label}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{_L - 5}" y1="{sy(v):.1f}" x2="{_L}" y2="{sy(v):.1f}" stroke="#000"/>')
        out.append(f'<text x="{_L - 8}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{_W / 2}" y="{_T - 15}" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{_L + pw / 2}" y="{_H - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{_T + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {_T + ph / 2})">{escape(ylabel)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        colour = _COLOURS[i % len(_COLOURS)]
        coords = [(sx(tx(x)), sy(y)) for x, y in zip(xs, ys)
                  if not (math.isnan(y) or (logx and x <= 0))]
        if coords:
            path = " ".join(f"{a:.1f},{b:.1f}" for a, b in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
            if markers:
                out.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="2.5" fill="{colour}"/>' for a, b in coords)
        ly = _T + 15 + 16 * i
        out.append(f'<line x1="{_L + pw - 120}" y1="{ly}" x2="{_L + pw - 100}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{_L + pw - 95}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path, *args, **kwargs) -> None:
    with open(path, "w") as fh:
        fh.write(line_plot(*args, **kwargs))
