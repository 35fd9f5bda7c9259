"""Self-contained SVG plots built from a written report directory.

The SVG is assembled by hand with fixed-precision coordinates so that the same
report always yields byte-identical XML.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from . import serialization as ser

W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 40, 60


class MissingTableError(LookupError):
    def __init__(self, table: str, where):
        super().__init__(f"report {where} has no table {table!r}")
        self.table = table


@dataclass
class Series:
    label: str
    x: list
    y: list
    style: str = "points"  # or "line"
    color: str = "#1f77b4"


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    series: list = field(default_factory=list)


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        if b - a < 1:
            b = a + 1
        return [10.0**k for k in range(a, b + 1)]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span)) if span > 0 else 1.0
    for m in (1, 2, 5, 10):
        if span / (step * m) <= 6:
            step *= m
            break
    start = math.floor(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _range(vals, log):
    vals = [v for v in vals if math.isfinite(v) and (v > 0 or not log)]
    if not vals:
        return (1.0, 10.0) if log else (0.0, 1.0)
    lo, hi = min(vals), max(vals)
    if lo == hi:
        lo, hi = (lo / 2, hi * 2) if log else (lo - 0.5, hi + 0.5)
    if not log:
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad
    return lo, hi


def _tick_label(t):
    return f"{t:g}"


def render(fig: Figure) -> str:
    xs = [v for s in fig.series for v in s.x]
    ys = [v for s in fig.series for v in s.y]
    xt = _ticks(*_range(xs, fig.logx), fig.logx)
    yt = _ticks(*_range(ys, fig.logy), fig.logy)
    x0, x1 = xt[0], xt[-1]
    y0, y1 = yt[0], yt[-1]
    tx = math.log10 if fig.logx else (lambda v: v)
    ty = math.log10 if fig.logy else (lambda v: v)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + pw * (tx(v) - tx(x0)) / (tx(x1) - tx(x0))

    def py(v):
        return TOP + ph * (1 - (ty(v) - ty(y0)) / (ty(y1) - ty(y0)))

    def ok(xv, yv):
        return all(math.isfinite(t) for t in (xv, yv)) and (xv > 0 or not fig.logx) and (yv > 0 or not fig.logy)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(fig.title)}</text>',
        f'<g id="axes" stroke="black" fill="none"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></g>',
        '<g id="ticks" font-family="sans-serif" font-size="11">',
    ]
    for t in xt:
        X = _f(px(t))
        out.append(f'<line x1="{X}" y1="{TOP + ph}" x2="{X}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{TOP + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in yt:
        Y = _f(py(t))
        out.append(f'<line x1="{LEFT - 5}" y1="{Y}" x2="{LEFT}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">{_tick_label(t)}</text>')
    out.append("</g>")
    out.append(f'<text id="xlabel" x="{LEFT + pw / 2}" y="{H - 18}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{escape(fig.xlabel)}</text>')
    out.append(f'<text id="ylabel" x="18" y="{TOP + ph / 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 18 {TOP + ph / 2})">{escape(fig.ylabel)}</text>')
    for i, s in enumerate(fig.series):
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y) if ok(a, b)]
        out.append(f'<g id="series-{i}" class="{s.style}">')
        if s.style == "line" and len(pts) > 1:
            d = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{s.color}" stroke-dasharray="6 4"/>')
        elif s.style != "line":
            for a, b in pts:
                out.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="3" fill="{s.color}"/>')
        out.append("</g>")
        ly = TOP + 14 + 16 * i
        out.append(f'<text x="{LEFT + 10}" y="{ly}" font-family="sans-serif" font-size="11" '
                   f'fill="{s.color}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# report readers
# --------------------------------------------------------------------------


def _table(report_dir: Path, name: str, listed) -> dict:
    path = report_dir / f"{name}.csv"
    if name not in listed or not path.exists():
        raise MissingTableError(name, report_dir)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def _col(rows, key):
    return [float(r[key]) for r in rows]


def _e1(rows):
    return [Figure("Sign changes on the half circle vs doubling exponent", "beta(D, u) [grid sup, log ratio]",
                   "nu(T/2, u) [sign changes, exact count]",
                   series=[Series("corpus polynomials (grid-refined)", _col(rows, "beta"), _col(rows, "nu_half"))])]


def _e2(rows):
    return [Figure("Positive area vs doubling exponent", "log max(beta, 3) [dimensionless]",
                   "Area({u>0}) [unit disc area units, grid-refined]",
                   series=[Series("corpus polynomials (grid-refined)", _col(rows, "log_beta_star"), _col(rows, "area"))])]


def _e3(rows):
    N = _col(rows, "N")
    a = _col(rows, "area_ratio_margin0")
    series = [Series("area ratio (grid-refined)", N, a)]
    if N:
        C = max(ai * math.log(n) for ai, n in zip(a, N))
        grid = [N[0] * (N[-1] / N[0]) ** (k / 49) for k in range(50)] if len(N) > 1 else N
        series.append(Series(f"reference {C:.3g}/log N", grid, [C / math.log(n) for n in grid], "line", "#d62728"))
    return [Figure("Positivity area ratio of Re P_N", "N [degree]", "Area/pi [fraction of disc]", True, True,
                   series)]


def _e4(rows):
    lam = _col(rows, "lambda")
    a = _col(rows, "area_ratio")
    series = [Series("area ratio in D_N (grid-refined)", lam, a)]
    if lam:
        C = max(x * math.log(l) for x, l in zip(a, lam))
        series.append(Series(f"reference {C:.3g}/log lambda", lam, [C / math.log(l) for l in lam], "line", "#d62728"))
    return [Figure("Asymmetry ratio of transplanted harmonics", "lambda = N(N+1) [eigenvalue]",
                   "area ratio [fraction of cap]", True, True, series)]


def _e5(rows):
    return [Figure("Beltrami coefficient vs potential size", "||q|| [sup norm]", "sup |mu| [grid sup]",
                   series=[Series("q family t q0 (spectral grid)", _col(rows, "q_norm"), _col(rows, "sup_mu"))])]


def _e6(rows):
    d = _col(rows, "d")
    v = _col(rows, "area_times_logd")
    series = [Series("N_d log d (certified grid-refined area)", d, v)]
    big = [x for x, dd in zip(v, d) if dd >= 8]
    if big:
        lo = min(big)
        series.append(Series("band floor", [d[0], d[-1]], [lo, lo], "line", "#2ca02c"))
        series.append(Series("band ceiling (4x floor)", [d[0], d[-1]], [4 * lo, 4 * lo], "line", "#d62728"))
    return [Figure("Least positivity area band", "d [sign changes]", "N_d log d [area units]", True, False, series)]


def _e7(rows):
    return [Figure("Doubling exponent vs normalized nodal length", "Length lambda^(-1/2) [marching squares]",
                   "B1 [mean doubling exponent, sampled discs]",
                   series=[Series("random eigenfunctions", _col(rows, "normalized_length"), _col(rows, "B1"))])]


PLOTS = {"E1": ("gelfond", _e1), "E2": ("harmonic_area", _e2), "E3": ("extremal_sweep", _e3),
         "E4": ("sphere_transplant", _e4), "E5": ("q_family", _e5), "E6": ("nadirashvili", _e6), "E7": ("yau", _e7)}


def plot(report_dir) -> list[Path]:
    """Write ``<table>.svg`` next to the report; returns the written paths."""
    report_dir = Path(report_dir)
    path = report_dir / "report.json"
    if not path.exists():
        raise FileNotFoundError(f"no report.json in {report_dir}")
    body = ser.read_document(path, "experiment-report")["data"]
    exp = body["experiment"]
    table, build = PLOTS[exp]
    rows = _table(report_dir, table, body["tables"])
    out = []
    for i, fig in enumerate(build(rows)):
        p = report_dir / (f"{table}.svg" if i == 0 else f"{table}_{i}.svg")
        p.write_text(render(fig))
        out.append(p)
    return out
