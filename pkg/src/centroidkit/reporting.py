"""Deterministic serialization of experiment reports.

report.json bytes depend only on the report dict (sorted keys, canonical
float repr); wall-clock lives in timing.json so reruns stay byte-identical.
Tables are flat CSV per experiment; plots are self-contained SVG assembled
with explicit float formatting, no plotting library.
"""

from __future__ import annotations

import csv
import json
import math
import os
from fractions import Fraction
from typing import Optional

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def canonical_json(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def write_report(report: dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        fh.write(canonical_json(report))
    return path


def write_timing(timing: dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "timing.json")
    with open(path, "w") as fh:
        fh.write(canonical_json(timing))
    return path


# ---------------------------------------------------------------------------
# CSV tables


def _experiment_reports(report: dict) -> list:
    if "experiments" in report:
        return list(report["experiments"])
    return [report]


def _flat_cell_row(row: dict) -> dict:
    out = {}
    for key, value in row.get("cell", {}).items():
        out[f"cell_{key}"] = value
    for key, value in row.get("values", {}).items():
        if isinstance(value, (list, dict)):
            continue  # nested series get their own table
        out[key] = value
    out["passed"] = row.get("passed")
    return out


def _write_csv(path: str, header: list, rows: list):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_tables(report: dict, out_dir: str) -> list:
    """One flat CSV per experiment, plus one per nested list-valued field."""
    tables_dir = os.path.join(out_dir, "tables")
    os.makedirs(tables_dir, exist_ok=True)
    written = []
    for exp in _experiment_reports(report):
        name = exp["experiment"]
        flat = [_flat_cell_row(r) for r in exp["cells"]]
        header = sorted({k for row in flat for k in row})
        path = os.path.join(tables_dir, f"{name}.csv")
        _write_csv(path, header,
                   [[_plain(row.get(k)) for k in header] for row in flat])
        written.append(path)
        written.extend(_nested_tables(exp, tables_dir))
    return written


def _nested_tables(exp: dict, tables_dir: str) -> list:
    written = []
    collected: dict = {}
    for idx, row in enumerate(exp["cells"]):
        for key, value in row.get("values", {}).items():
            if not (isinstance(value, list) and value):
                continue
            if isinstance(value[0], dict):
                cols = sorted({k for item in value for k in item})
                rows = [[idx] + [_plain(item.get(c)) for c in cols] for item in value]
            elif isinstance(value[0], (list, tuple)):
                cols = [f"v{j}" for j in range(len(value[0]))]
                rows = [[idx] + [_plain(v) for v in item] for item in value]
            else:
                continue
            bucket = collected.setdefault(key, (["cell_index"] + cols, []))
            bucket[1].extend(rows)
    for key, (header, rows) in sorted(collected.items()):
        path = os.path.join(tables_dir, f"{exp['experiment']}_{key}.csv")
        _write_csv(path, header, rows)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# SVG plots


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo]


class _Frame:
    """Pixel mapping for one plot frame with optional log axes."""

    def __init__(self, xs, ys, logx: bool, logy: bool,
                 width=640, height=400, margins=(60, 20, 30, 48)):
        self.logx, self.logy = logx, logy
        fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
        fy = (lambda v: math.log10(v)) if logy else (lambda v: v)
        self.fx, self.fy = fx, fy
        tx = [fx(v) for v in xs]
        ty = [fy(v) for v in ys]
        self.x0, self.x1 = min(tx), max(tx)
        self.y0, self.y1 = min(ty), max(ty)
        if self.x1 <= self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x0 + 0.5
        if self.y1 <= self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y0 + 0.5
        pad_y = 0.06 * (self.y1 - self.y0)
        self.y0 -= pad_y
        self.y1 += pad_y
        left, right, top, bottom = margins
        self.px0, self.px1 = left, width - right
        self.py0, self.py1 = height - bottom, top
        self.width, self.height = width, height

    def px(self, v: float) -> float:
        t = (self.fx(v) - self.x0) / (self.x1 - self.x0)
        return self.px0 + t * (self.px1 - self.px0)

    def py(self, v: float) -> float:
        t = (self.fy(v) - self.y0) / (self.y1 - self.y0)
        return self.py0 + t * (self.py1 - self.py0)

    def x_ticks(self) -> list:
        if self.logx:
            lo, hi = math.floor(self.x0), math.ceil(self.x1)
            return [10.0**e for e in range(int(lo), int(hi) + 1)
                    if self.x0 - 1e-9 <= e <= self.x1 + 1e-9]
        return [t for t in _ticks(self.x0, self.x1) if self.x0 <= t <= self.x1]

    def y_ticks(self) -> list:
        if self.logy:
            lo, hi = math.floor(self.y0), math.ceil(self.y1)
            return [10.0**e for e in range(int(lo), int(hi) + 1)
                    if self.y0 - 1e-9 <= e <= self.y1 + 1e-9]
        return [t for t in _ticks(self.y0, self.y1) if self.y0 <= t <= self.y1]


def svg_plot(series: list, title: str, xlabel: str, ylabel: str,
             logx: bool = False, logy: bool = False) -> str:
    """Polyline chart; series = [{label, x: [...], y: [...]}]."""
    xs = [v for s in series for v in s["x"]]
    ys = [v for s in series for v in s["y"]]
    frame = _Frame(xs, ys, logx, logy)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.width}" '
        f'height="{frame.height}" viewBox="0 0 {frame.width} {frame.height}">',
        f'<rect width="{frame.width}" height="{frame.height}" fill="#ffffff"/>',
        f'<text x="{frame.width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    # axes
    parts.append(f'<line x1="{frame.px0}" y1="{frame.py0}" x2="{frame.px1}" '
                 f'y2="{frame.py0}" stroke="#333333" stroke-width="1"/>')
    parts.append(f'<line x1="{frame.px0}" y1="{frame.py0}" x2="{frame.px0}" '
                 f'y2="{frame.py1}" stroke="#333333" stroke-width="1"/>')
    for t in frame.x_ticks():
        x = frame.px(t)
        parts.append(f'<line x1="{x:.2f}" y1="{frame.py0}" x2="{x:.2f}" '
                     f'y2="{frame.py0 + 4}" stroke="#333333"/>')
        parts.append(f'<text x="{x:.2f}" y="{frame.py0 + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in frame.y_ticks():
        y = frame.py(t)
        parts.append(f'<line x1="{frame.px0 - 4}" y1="{y:.2f}" x2="{frame.px0}" '
                     f'y2="{y:.2f}" stroke="#333333"/>')
        parts.append(f'<text x="{frame.px0 - 7}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    parts.append(f'<text x="{(frame.px0 + frame.px1) / 2:.1f}" '
                 f'y="{frame.height - 8}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="16" y="{(frame.py0 + frame.py1) / 2:.1f}" '
                 f'text-anchor="middle" font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {(frame.py0 + frame.py1) / 2:.1f})">'
                 f'{ylabel}</text>')
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{frame.px(x):.2f},{frame.py(y):.2f}"
                       for x, y in zip(s["x"], s["y"]))
        dash = ' stroke-dasharray="6 4"' if s.get("dashed") else ""
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"{dash}/>')
        for x, y in zip(s["x"], s["y"]):
            parts.append(f'<circle cx="{frame.px(x):.2f}" cy="{frame.py(y):.2f}" '
                         f'r="2.4" fill="{color}"/>')
        parts.append(f'<text x="{frame.px1 - 6}" y="{frame.py1 + 14 + 15 * i}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="11" '
                     f'fill="{color}">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _plot_rotational_invariance(exp) -> Optional[dict]:
    ps = [r["cell"]["p"] for r in exp["cells"]]
    est = [r["values"]["estimate"] for r in exp["cells"]]
    oracle = [r["values"]["oracle"] for r in exp["cells"]]
    return {"series": [{"label": "estimate", "x": ps, "y": est},
                       {"label": "closed form", "x": ps, "y": oracle, "dashed": True}],
            "title": "Sphere dual-norm moments", "xlabel": "p", "ylabel": "value"}


def _plot_constants_table(exp) -> Optional[dict]:
    by_dim: dict = {}
    for r in exp["cells"]:
        by_dim.setdefault(r["cell"]["dim"], []).append(
            (r["cell"]["k"], r["values"]["c"]))
    series = []
    for n in sorted(by_dim):
        pts = sorted(by_dim[n])
        series.append({"label": f"n={n}", "x": [p[0] for p in pts],
                       "y": [p[1] for p in pts]})
    return {"series": series, "title": "Even-moment constants",
            "xlabel": "k", "ylabel": "c"}


def _plot_envelope_sweep(exp) -> Optional[dict]:
    worst: dict = {}
    for r in exp["cells"]:
        key = (r["cell"]["family"], r["cell"]["p"])
        worst[key] = max(worst.get(key, 0.0), r["values"]["ratio"])
    families = sorted({k[0] for k in worst})
    series = []
    for fam in families:
        pts = sorted((p, v) for (f, p), v in worst.items() if f == fam)
        series.append({"label": fam, "x": [p for p, _ in pts],
                       "y": [v for _, v in pts]})
    return {"series": series, "title": "Worst ratio to envelope over n",
            "xlabel": "p", "ylabel": "ratio"}


def _plot_exponential_tails(exp) -> Optional[dict]:
    rows = exp["cells"][0]["values"]["rows"]
    ts = [r["t"] for r in rows]
    return {"series": [
        {"label": "witness frequency", "x": ts, "y": [r["frequency"] for r in rows]},
        {"label": "analytic bound", "x": ts, "y": [r["analytic_bound"] for r in rows],
         "dashed": True}],
        "title": "Exponential tail witness", "xlabel": "t",
        "ylabel": "P", "logy": True}


def _plot_entropy_bound(exp) -> Optional[dict]:
    prof = exp["cells"][0]["values"]["profile"]
    measured = exp["cells"][0]["values"]["measured"]
    eps = [r["eps"] for r in prof]
    return {"series": [
        {"label": "entropy bound", "x": eps, "y": [r["bound"] for r in prof]},
        {"label": "measured", "x": [eps[0], eps[-1]], "y": [measured, measured],
         "dashed": True}],
        "title": "Covering bound vs measured moment", "xlabel": "eps",
        "ylabel": "value", "logx": True}


def _plot_minoration_sparse(exp) -> Optional[dict]:
    series = []
    for r in exp["cells"]:
        prof = [(e, l) for e, l in r["values"]["profile"] if l > 0]
        if prof:
            series.append({"label": f"n={r['cell']['dim']}",
                           "x": [e for e, _ in prof], "y": [l for _, l in prof]})
    if not series:
        return None
    return {"series": series, "title": "Certified entropy profiles",
            "xlabel": "eps", "ylabel": "log N lower", "logx": True, "logy": True}


def _plot_minoration_unconditional(exp) -> Optional[dict]:
    by_fam: dict = {}
    for r in exp["cells"]:
        by_fam.setdefault(r["cell"]["family"], []).append(
            (r["cell"]["dim"], r["values"]["ratio"]))
    series = [{"label": fam, "x": [d for d, _ in sorted(pts)],
               "y": [v for _, v in sorted(pts)]}
              for fam, pts in sorted(by_fam.items())]
    return {"series": series, "title": "Normalized minoration ratio",
            "xlabel": "n", "ylabel": "ratio", "logx": True}


_PLOTTERS = {
    "rotational-invariance": _plot_rotational_invariance,
    "constants-table": _plot_constants_table,
    "envelope-sweep": _plot_envelope_sweep,
    "exponential-tails": _plot_exponential_tails,
    "entropy-bound": _plot_entropy_bound,
    "minoration-sparse": _plot_minoration_sparse,
    "minoration-unconditional": _plot_minoration_unconditional,
}


def emit_plots(report: dict, out_dir: str) -> list:
    """Write one SVG per plottable experiment; returns written paths."""
    written = []
    plots_dir = os.path.join(out_dir, "plots")
    for exp in _experiment_reports(report):
        plotter = _PLOTTERS.get(exp.get("experiment"))
        if plotter is None or not exp.get("cells"):
            continue
        desc = plotter(exp)
        if desc is None:
            continue
        os.makedirs(plots_dir, exist_ok=True)
        svg = svg_plot(desc["series"], desc["title"], desc["xlabel"],
                       desc["ylabel"], logx=desc.get("logx", False),
                       logy=desc.get("logy", False))
        path = os.path.join(plots_dir, f"{exp['experiment']}.svg")
        with open(path, "w") as fh:
            fh.write(svg)
        written.append(path)
    return written
