"""Minimal SVG line charts for the experiment CSV files.

Output is a pure function of the CSV text: coordinates are printed with a
fixed number of decimals and curves appear in order of first occurrence.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .experiments import CSV_HEADERS

__all__ = ["detect_variant", "emit_plots", "render_svg"]

WIDTH, HEIGHT, PAD = 480, 360, 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def detect_variant(header: list[str]) -> str:
    for variant, cols in CSV_HEADERS.items():
        if header == cols:
            return variant
    raise ValueError(f"unknown CSV schema: {','.join(header)}")


def _curves(variant, records):
    """Return (title, x label, y label, log-y, log2-x, {name: [(x, y)]})."""
    curves: dict[str, list] = {}

    def add(name, x, y):
        curves.setdefault(name, []).append((float(x), float(y)))

    if variant == "mui-vs-n":
        for r in records:
            add(f"M={r['m']}", r["n"], r["mui_mean"])
        return "Interference energy vs N", "N", "per-user MUI energy", True, False, curves
    if variant == "estar-vs-n":
        for r in records:
            add(f"I={r['target_i']}", r["n"], r["e_star"])
        return "Largest symbol energy vs N", "N", "E*", False, False, curves
    if variant == "power-vs-n":
        for r in records:
            add("CE precoder", r["n"], r["pt_db_ce"])
            add("cooperative bound", r["n"], r["pt_db_coop"])
        return "Required PT/sigma^2 vs N", "log2 N", "PT/sigma^2 (dB)", False, True, curves
    for r in records:
        add(f"delta={r['delta']}", r["n"], r["box_hit_fraction"])
    return "Box-hit fraction vs N", "N", "fraction of targets hit", False, False, curves


def render_svg(csv_text: str) -> dict[str, str]:
    """Build ``{suffix: svg_text}`` for one CSV document (one chart per file)."""
    reader = csv.reader(io.StringIO(csv_text))
    rows = [r for r in reader if r]
    if not rows:
        raise ValueError("empty CSV")
    header, body = rows[0], rows[1:]
    variant = detect_variant(header)
    if not body:
        raise ValueError("CSV has a header but no data rows")
    records = [dict(zip(header, r)) for r in body]
    title, xlabel, ylabel, logy, log2x, curves = _curves(variant, records)

    def tx(x):
        return math.log2(x) if log2x else x

    def ty(y):
        if logy:
            return math.log10(max(y, 1e-300))
        return y

    pts = [(tx(x), ty(y)) for c in curves.values() for x, y in c]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def sx(x):
        return PAD + (tx(x) - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

    def sy(y):
        return HEIGHT - PAD - (ty(y) - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">{ylabel}{" (log10)" if logy else ""}</text>',
        f'<text x="{PAD}" y="{HEIGHT - PAD + 16}" font-size="10" text-anchor="middle">{x0:.4g}</text>',
        f'<text x="{WIDTH - PAD}" y="{HEIGHT - PAD + 16}" font-size="10" text-anchor="middle">{x1:.4g}</text>',
        f'<text x="{PAD - 4}" y="{HEIGHT - PAD}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{PAD - 4}" y="{PAD}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (name, c) in enumerate(curves.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in c)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        out.append(f'<text x="{WIDTH - PAD}" y="{PAD + 14 * i}" font-size="11" '
                   f'text-anchor="end" fill="{color}">{name}</text>')
    out.append("</svg>")
    return {variant: "\n".join(out) + "\n"}


def emit_plots(csv_path, out_dir=None) -> list[Path]:
    """Write one SVG per chart built from ``csv_path``; nothing is written on error."""
    csv_path = Path(csv_path)
    charts = render_svg(csv_path.read_text(encoding="utf-8"))
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for _, svg in charts.items():
        p = out_dir / (csv_path.stem + ".svg")
        p.write_text(svg, encoding="utf-8")
        paths.append(p)
    return paths
