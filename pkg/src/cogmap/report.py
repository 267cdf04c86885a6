"""Rendering of system-weight reports as CSV, JSON or an SVG bar chart.

All renderers return bytes and are deterministic: the same report always
produces the same output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from html import escape

import numpy as np

from .data import PathOrStream, _open
from .errors import FormatError
from .impulse import SystemWeightReport, WeightMethod, report_from_weights

FORMATS = ("csv", "structured", "svg")
REPORT_FORMAT = "cogmap-weights"
REPORT_VERSION = 1


def _g12(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    return format(v, ".12g")


def _num(v):
    """JSON-safe number: infinities become strings."""
    if v is None:
        return None
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(_g12(v))


def render_csv(report: SystemWeightReport) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["indicator", "weight", "rank"])
    for rank, name in enumerate(report.ranking, start=1):
        w.writerow([name, _g12(report.weight(name)), rank])
    return buf.getvalue().encode("utf-8")


def report_to_dict(report: SystemWeightReport) -> dict:
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "method": report.method.value,
        "truncation_error_bound": _num(report.truncation_error_bound),
        "residual": _num(report.residual),
        "steps": report.steps,
        "weights": [
            {"indicator": n, "weight": _num(report.weight(n)), "rank": r}
            for r, n in enumerate(report.ranking, start=1)
        ],
    }
    if report.spectral is not None:
        sp = report.spectral
        doc["spectral"] = {
            "spectral_radius": _num(sp.spectral_radius),
            "is_contraction": sp.is_contraction,
            "iterations": sp.iterations,
            "tolerance": sp.tolerance,
        }
    return doc


def render_structured(report: SystemWeightReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


SVG_COLORS = {
    "positive": "#198754",
    "negative": "#dc3545",
    "axis": "#212529",
    "grid": "#e9ecef",
    "text": "#212529",
    "bg": "#ffffff",
}
FONT = "DejaVu Sans, Arial, sans-serif"


def render_svg(report: SystemWeightReport, title: str = "System weights") -> bytes:
    """Horizontal signed bar chart, one bar per indicator in rank order."""
    names = report.ranking
    weights = [report.weight(n) for n in names]
    bar_h, gap = 18, 6
    label_w, value_w = 220, 90
    plot_w = 420
    top, bottom = 40, 20
    height = top + bottom + max(1, len(names)) * (bar_h + gap)
    width = label_w + plot_w + value_w
    lo = min([0.0, *weights])
    hi = max([0.0, *weights])
    span = (hi - lo) or 1.0
    x0 = label_w + plot_w * (-lo / span)

    def px(v):
        return label_w + plot_w * ((v - lo) / span)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="{FONT}" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{SVG_COLORS["bg"]}"/>',
        f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-size="14" '
        f'fill="{SVG_COLORS["text"]}">{escape(title)}</text>',
    ]
    for k, (name, w) in enumerate(zip(names, weights)):
        y = top + k * (bar_h + gap)
        x1 = px(w)
        x, bw = (x0, x1 - x0) if w >= 0 else (x1, x0 - x1)
        color = SVG_COLORS["positive"] if w >= 0 else SVG_COLORS["negative"]
        out.append(
            f'<text x="{label_w - 8}" y="{y + bar_h - 5}" text-anchor="end" '
            f'fill="{SVG_COLORS["text"]}">{escape(name)}</text>'
        )
        out.append(
            f'<rect class="bar" x="{x:.2f}" y="{y}" width="{bw:.2f}" height="{bar_h}" fill="{color}" '
            f'data-indicator="{escape(name)}" data-weight="{_g12(w)}" data-rank="{k + 1}"/>'
        )
        out.append(
            f'<text x="{label_w + plot_w + 8}" y="{y + bar_h - 5}" '
            f'fill="{SVG_COLORS["text"]}">{_g12(w)}</text>'
        )
    out.append(
        f'<line x1="{x0:.2f}" y1="{top - 6}" x2="{x0:.2f}" y2="{height - bottom + 2}" '
        f'stroke="{SVG_COLORS["axis"]}" stroke-width="1"/>'
    )
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def render_report(report: SystemWeightReport, format: str = "csv") -> bytes:
    if format == "csv":
        return render_csv(report)
    if format == "structured":
        return render_structured(report)
    if format == "svg":
        return render_svg(report)
    raise ValueError(f"unknown report format {format!r}; choose from {', '.join(FORMATS)}")


def load_weights(source: PathOrStream) -> SystemWeightReport:
    """Read a weight report written as CSV (``indicator,weight[,rank]``) or structured JSON."""
    fh, close = _open(source)
    try:
        text = fh.read()
    finally:
        if close:
            fh.close()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed weight report: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
        if doc.get("format") != REPORT_FORMAT:
            raise FormatError("not a weight report", "$.format")
        if doc.get("version", 0) > REPORT_VERSION:
            raise FormatError(f"weight report version {doc.get('version')} is newer than supported", "$.version")
        rows = doc.get("weights", [])
        names = [r["indicator"] for r in rows]
        weights = [float(r["weight"]) for r in rows]
        bound = doc.get("truncation_error_bound") or 0.0
        return report_from_weights(
            names, weights, WeightMethod(doc.get("method", "supplied")),
            truncation_error_bound=float(bound), residual=doc.get("residual"), steps=doc.get("steps"),
        )
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or reader.fieldnames[:2] != ["indicator", "weight"]:
        raise FormatError("weight CSV header must start with indicator,weight", "line 1")
    names, weights = [], []
    for row in reader:
        try:
            weights.append(float(row["weight"]))
        except (TypeError, ValueError):
            raise FormatError(f"bad weight {row['weight']!r}", f"line {reader.line_num}") from None
        names.append(row["indicator"])
    return report_from_weights(names, np.array(weights))
