"""Result files: BER table (CSV), run manifest (JSON) and a BER plot (SVG).

The CSV and SVG depend only on the BER points, so repeated runs of the same
configuration produce identical bytes. The SVG is written by hand to avoid a
plotting dependency.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from satrx.montecarlo import BerPoint

CSV_HEADER = ("detector", "snr_db", "frames", "bits", "bit_errors", "ber")
BER_FLOOR = 1e-8

RESULTS_CSV = "results.csv"
MANIFEST_JSON = "manifest.json"
PLOT_SVG = "ber.svg"

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass
class RunManifest:
    config: dict
    version: str
    config_digest: str
    wall_clock_s: float = 0.0
    workers: int = 1
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def results_csv(points: Sequence[BerPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in points:
        w.writerow([p.detector, repr(p.snr_db), p.frames, p.bits, p.bit_errors, repr(p.ber)])
    return buf.getvalue()


def read_results_csv(path) -> list[BerPoint]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        BerPoint(r["detector"], float(r["snr_db"]), int(r["bit_errors"]), int(r["bits"]), int(r["frames"]))
        for r in rows
    ]


# --------------------------------------------------------------------------
# SVG


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def ber_svg(points: Sequence[BerPoint], title: str = "BER of the desired satellite") -> str:
    """Log-scale BER against SNR, one polyline per detector.

    Zero-error points are drawn on the ``1e-8`` floor as hollow triangles.
    """
    if not points:
        raise ValueError("no points to plot")
    width, height = 640, 440
    left, right, top, bottom = 70, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom

    snrs = [p.snr_db for p in points]
    x_lo, x_hi = min(snrs), max(snrs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    bers = [max(p.ber, BER_FLOOR) for p in points]
    y_hi = 0.0
    y_lo = math.floor(math.log10(min(bers)))
    if y_lo == y_hi:
        y_lo -= 1

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + (y_hi - math.log10(max(v, BER_FLOOR))) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(int(y_lo), int(y_hi) + 1):
        y = sy(10.0**e)
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" y2="{_fmt(y)}" stroke="#dddddd"/>')
        out.append(
            f'<text x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>'
        )
    for v in sorted(set(snrs)):
        x = sx(v)
        out.append(f'<line x1="{_fmt(x)}" y1="{top}" x2="{_fmt(x)}" y2="{top + ph}" stroke="#eeeeee"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + ph + 16}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle">SNR (dB)</text>')
    out.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">BER</text>'
    )

    names = list(dict.fromkeys(p.detector for p in points))
    for i, name in enumerate(names):
        colour = _PALETTE[i % len(_PALETTE)]
        series = sorted((p for p in points if p.detector == name), key=lambda p: p.snr_db)
        coords = " ".join(f"{_fmt(sx(p.snr_db))},{_fmt(sy(p.ber))}" for p in series)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        for p in series:
            x, y = sx(p.snr_db), sy(p.ber)
            if p.bit_errors == 0:
                out.append(
                    f'<path d="M{_fmt(x - 4)},{_fmt(y - 4)} L{_fmt(x + 4)},{_fmt(y - 4)} '
                    f'L{_fmt(x)},{_fmt(y + 3)} Z" fill="white" stroke="{colour}"/>'
                )
            else:
                out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{colour}"/>')
        ly = top + 14 + 18 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    ly = top + 14 + 18 * len(names)
    lx = left + pw + 12
    out.append(
        f'<path d="M{lx + 6},{ly - 8} L{lx + 14},{ly - 8} L{lx + 10},{ly - 1} Z" fill="white" stroke="black"/>'
    )
    out.append(f'<text x="{lx + 26}" y="{ly}">no errors (1e-8)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_results(points: Sequence[BerPoint], manifest: RunManifest, out_dir) -> dict[str, Path]:
    """Write the CSV, SVG and manifest into ``out_dir`` and return their paths."""
    if not points:
        raise ValueError("no BER points to write")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out_dir / RESULTS_CSV,
        "plot": out_dir / PLOT_SVG,
        "manifest": out_dir / MANIFEST_JSON,
    }
    paths["results"].write_text(results_csv(points))
    paths["plot"].write_text(ber_svg(points))
    manifest.outputs = {k: v.name for k, v in paths.items()}
    paths["manifest"].write_text(manifest.to_json())
    return paths
