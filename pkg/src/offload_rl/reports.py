"""CSV tables and static SVG line charts.

Output is a pure function of the input: numbers are written with a fixed
format and the SVG has no timestamps or random ids, so identical records
give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ReportIOError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 720, 400
MARGIN = dict(left=64, right=130, top=36, bottom=48)


def fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".10g")
    if x is None:
        return ""
    return str(x)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc
    return path


def write_csv(path, header: Sequence[str], rows) -> Path:
    return write_text(path, csv_text(header, rows))


def read_csv(path) -> tuple[list[str], list[dict]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            return list(reader.fieldnames or []), rows
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    band: tuple[Sequence[float], Sequence[float]] | None = None  # (lower, upper)


@dataclass
class Chart:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)  # (y, label) gridlines
    vlines: list[tuple[float, str]] = field(default_factory=list)  # (x, label) markers
    y_range: tuple[float, float] | None = None


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 10))
        v += step
    return out


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_svg(chart: Chart) -> str:
    xs = [x for s in chart.series for x in s.x]
    ys = [y for s in chart.series for y in s.y]
    for s in chart.series:
        if s.band:
            ys.extend(s.band[0])
            ys.extend(s.band[1])
    ys.extend(y for y, _ in chart.hlines)
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if chart.y_range:
        y0, y1 = chart.y_range
    else:
        y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
        pad = 0.05 * (y1 - y0 or 1.0)
        y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    def pts(xv, yv):
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xv, yv))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_esc(chart.title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{fmt(float(t))}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{fmt(float(t))}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{_esc(chart.x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{_esc(chart.y_label)}</text>'
    )
    for y, label in chart.hlines:
        if y0 <= y <= y1:
            out.append(
                f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{py(y):.2f}" y2="{py(y):.2f}" '
                f'stroke="#999" stroke-dasharray="4 3"/>'
            )
            out.append(f'<text x="{MARGIN["left"] + pw + 4}" y="{py(y) + 4:.2f}" fill="#666">{_esc(label)}</text>')
    for x, label in chart.vlines:
        if x0 <= x <= x1:
            out.append(
                f'<line x1="{px(x):.2f}" x2="{px(x):.2f}" y1="{MARGIN["top"]}" y2="{MARGIN["top"] + ph}" '
                f'stroke="#bbb" stroke-dasharray="2 3"/>'
            )
            out.append(f'<text x="{px(x) + 3:.2f}" y="{MARGIN["top"] + 12}" fill="#666">{_esc(label)}</text>')
    for i, s in enumerate(chart.series):
        color = PALETTE[i % len(PALETTE)]
        if s.band:
            lo, hi = s.band
            poly = pts(s.x, hi) + " " + pts(list(s.x)[::-1], list(lo)[::-1])
            out.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        out.append(f'<polyline points="{pts(s.x, s.y)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 14 + 16 * i
        lx = MARGIN["left"] + pw + 40
        out.append(f'<line x1="{lx}" x2="{lx + 18}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 22}" y="{ly + 4}">{_esc(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, chart: Chart) -> Path:
    return write_text(path, render_svg(chart))
