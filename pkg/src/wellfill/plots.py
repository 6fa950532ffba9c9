"""Standalone SVG charts: log tracks, truth-vs-prediction scatter, line charts, heatmaps.

Output is plain text with fixed number formatting, so identical inputs give
identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .wells import PROPERTIES, WellLog

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _text(x, y, s, anchor="middle", extra=""):
    return f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>'


def _range(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _polylines(xs, ys, sx, sy, color, width=1.0) -> list[str]:
    """One polyline per finite run, so absent values show as breaks."""
    out = []
    ok = np.isfinite(xs) & np.isfinite(ys)
    run: list[str] = []
    for i in range(len(xs)):
        if ok[i]:
            run.append(f"{_f(sx(xs[i]))},{_f(sy(ys[i]))}")
        elif run:
            out.append(run)
            run = []
    if run:
        out.append(run)
    return [f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{" ".join(r)}"/>'
            for r in out]


def _axis_ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def log_tracks_svg(well: WellLog, overlays: dict | None = None, title: str | None = None,
                   max_points: int = 2000) -> str:
    """One track per property with depth increasing downward.

    ``overlays`` maps a label to ``{PropertyKind: (rows, values)}``; each is
    drawn as dots over the track (e.g. predictions in gaps).
    """
    track_w, gap, top, height = 150, 20, 50, 600
    width = 60 + len(PROPERTIES) * (track_w + gap)
    d0, d1 = float(well.depths[0]), float(well.depths[-1])
    stride = max(1, int(math.ceil(well.n_rows / max_points)))
    rows = np.arange(0, well.n_rows, stride)
    depths = well.depths

    def sy(d):
        return top + (d - d0) / (d1 - d0 if d1 > d0 else 1.0) * height

    body = [_text(width / 2, 20, title or well.name, extra=' font-size="14"')]
    for t in _axis_ticks(d0, d1):
        body.append(_text(52, sy(t) + 4, f"{t:.0f}", anchor="end"))
    body.append(_text(14, top + height / 2, "depth (m)", extra=f' transform="rotate(-90 14 {_f(top + height / 2)})"'))
    for j, kind in enumerate(PROPERTIES):
        x0 = 60 + j * (track_w + gap)
        vals = well[kind]
        extra_vals = [v[1] for ov in (overlays or {}).values() for k, v in ov.items() if k == kind]
        lo, hi = _range(np.concatenate([vals, *[np.asarray(e) for e in extra_vals]]) if extra_vals else vals)

        def sx(v, x0=x0, lo=lo, hi=hi):
            return x0 + (v - lo) / (hi - lo) * track_w

        body.append(f'<rect x="{x0}" y="{top}" width="{track_w}" height="{height}" fill="none" stroke="#999"/>')
        body.append(_text(x0 + track_w / 2, top - 8, kind.value))
        body.append(_text(x0, top + height + 14, f"{lo:.3g}", anchor="start"))
        body.append(_text(x0 + track_w, top + height + 14, f"{hi:.3g}", anchor="end"))
        body.extend(_polylines(vals[rows], depths[rows], sx, sy, PALETTE[0]))
        for c, (label, ov) in enumerate(sorted((overlays or {}).items())):
            if kind not in ov:
                continue
            o_rows, o_vals = ov[kind]
            color = PALETTE[(c + 1) % len(PALETTE)]
            for r, v in list(zip(np.asarray(o_rows).tolist(), np.asarray(o_vals).tolist()))[::stride]:
                if math.isfinite(v):
                    body.append(f'<circle cx="{_f(sx(v))}" cy="{_f(sy(depths[r]))}" r="1" fill="{color}"/>')
    for c, label in enumerate(sorted(overlays or {})):
        body.append(_text(width - 10, 20 + 14 * (c + 1), label, anchor="end",
                          extra=f' fill="{PALETTE[(c + 1) % len(PALETTE)]}"'))
    return _svg(width, top + height + 30, body)


def _frame(width, height, margin, xlo, xhi, ylo, yhi, xlabel, ylabel, title):
    pw, ph = width - margin - 20, height - margin - 40

    def sx(v):
        return margin + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return 40 + ph - (v - ylo) / (yhi - ylo) * ph

    body = [_text(width / 2, 20, title, extra=' font-size="14"'),
            f'<rect x="{margin}" y="40" width="{pw}" height="{ph}" fill="none" stroke="#999"/>']
    for t in _axis_ticks(xlo, xhi):
        body.append(_text(sx(t), 40 + ph + 14, f"{t:.3g}"))
    for t in _axis_ticks(ylo, yhi):
        body.append(_text(margin - 4, sy(t) + 4, f"{t:.3g}", anchor="end"))
    body.append(_text(margin + pw / 2, height - 8, xlabel))
    body.append(_text(12, 40 + ph / 2, ylabel, extra=f' transform="rotate(-90 12 {_f(40 + ph / 2)})"'))
    return body, sx, sy


def scatter_svg(truth, predicted, title: str = "truth vs prediction", max_points: int = 3000) -> str:
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    lo, hi = _range(np.concatenate([t, p]))
    body, sx, sy = _frame(420, 420, 60, lo, hi, lo, hi, "truth", "prediction", title)
    body.append(f'<line x1="{_f(sx(lo))}" y1="{_f(sy(lo))}" x2="{_f(sx(hi))}" y2="{_f(sy(hi))}" '
                f'stroke="#999" stroke-dasharray="4 3"/>')
    stride = max(1, int(math.ceil(t.size / max_points)))
    for a, b in zip(t[::stride].tolist(), p[::stride].tolist()):
        if math.isfinite(a) and math.isfinite(b):
            body.append(f'<circle cx="{_f(sx(a))}" cy="{_f(sy(b))}" r="1.5" fill="{PALETTE[0]}" fill-opacity="0.5"/>')
    return _svg(420, 420, body)


def lines_svg(series: dict[str, tuple], title: str, xlabel: str, ylabel: str) -> str:
    """``series`` maps a label to (xs, ys); used for MAPE against neighbor count."""
    all_x = np.concatenate([np.asarray(x, dtype=np.float64) for x, _ in series.values()]) if series else np.zeros(1)
    all_y = np.concatenate([np.asarray(y, dtype=np.float64) for _, y in series.values()]) if series else np.zeros(1)
    xlo, xhi = _range(all_x)
    ylo, yhi = _range(all_y)
    body, sx, sy = _frame(520, 360, 60, xlo, xhi, ylo, yhi, xlabel, ylabel, title)
    for c, (label, (xs, ys)) in enumerate(sorted(series.items())):
        color = PALETTE[c % len(PALETTE)]
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        body.extend(_polylines(xs, ys, sx, sy, color, 1.5))
        for a, b in zip(xs.tolist(), ys.tolist()):
            if math.isfinite(b):
                body.append(f'<circle cx="{_f(sx(a))}" cy="{_f(sy(b))}" r="2.5" fill="{color}"/>')
        body.append(_text(500, 56 + 14 * c, label, anchor="end", extra=f' fill="{color}"'))
    return _svg(520, 360, body)


def heatmap_svg(values, labels, title: str) -> str:
    """Square matrix in [-1, 1] (blue negative, red positive); NaN cells are grey."""
    M = np.asarray(values, dtype=np.float64)
    n = M.shape[0]
    cell, x0, y0 = 60, 70, 50
    size = x0 + n * cell + 20
    body = [_text(size / 2, 20, title, extra=' font-size="14"')]
    for i in range(n):
        body.append(_text(x0 - 6, y0 + i * cell + cell / 2 + 4, labels[i], anchor="end"))
        body.append(_text(x0 + i * cell + cell / 2, y0 + n * cell + 14, labels[i]))
        for j in range(n):
            v = M[i, j]
            if math.isfinite(v):
                a = min(1.0, abs(v))
                r, g, b = (255, int(255 * (1 - a)), int(255 * (1 - a))) if v >= 0 else \
                    (int(255 * (1 - a)), int(255 * (1 - a)), 255)
                fill, label = f"rgb({r},{g},{b})", f"{v:.2f}"
            else:
                fill, label = "#cccccc", "n/a"
            body.append(f'<rect x="{x0 + j * cell}" y="{y0 + i * cell}" width="{cell}" height="{cell}" '
                        f'fill="{fill}" stroke="white"/>')
            body.append(_text(x0 + j * cell + cell / 2, y0 + i * cell + cell / 2 + 4, label))
    return _svg(size, y0 + n * cell + 30, body)
