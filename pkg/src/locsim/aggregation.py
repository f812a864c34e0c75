"""Reduce attack traces to percentile / success-rate rows and render reports.

Greedy rows summarise remaining candidate counts, statistical rows the
rank of the best ground-truth location.  Percentiles use the nearest-rank
method so every reported value is one that actually occurred.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from .pruning import DEFAULT_CRITERION, GreedyTrace, StatTrace, SuccessCriterion

CSV_COLUMNS = ("game_label", "encoding", "logic", "mode", "n", "samples",
               "p25", "p50", "p75", "mean_success_rate", "criterion")


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class ReportRow:
    game_label: str
    encoding: str
    logic: str
    mode: str
    n: int
    samples: int
    p25: int
    p50: int
    p75: int
    mean_success_rate: float
    criterion: str = ""

    def __post_init__(self):
        if not self.p25 <= self.p50 <= self.p75:
            raise ValueError("percentiles out of order")
        if self.samples < 1:
            raise ValueError("row without samples")
        if not 0.0 <= self.mean_success_rate <= 1.0:
            raise ValueError("mean success rate outside [0, 1]")

    @property
    def key(self):
        return (self.game_label, self.encoding, self.logic, self.mode, self.criterion)


def percentile(samples, q, weights=None):
    """Nearest-rank percentile: element ``ceil(q * len) - 1`` of the sorted samples.

    With weights, the smallest value whose cumulative weight reaches ``q``
    of the total (identical to the unweighted rule for equal weights).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("percentile of empty samples")
    q = Fraction(q).limit_denominator(10 ** 9) if isinstance(q, float) else Fraction(q)
    if not 0 < q <= 1:
        raise ValueError("q must be in (0, 1]")
    if weights is None:
        return sorted(samples)[math.ceil(q * len(samples)) - 1]
    pairs = sorted(zip(samples, (Fraction(w) for w in weights)), key=lambda p: p[0])
    total = sum(w for _, w in pairs)
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    acc = Fraction(0)
    for value, w in pairs:
        acc += w
        if acc >= q * total:
            return value
    return pairs[-1][0]


def aggregate(traces, weights=None, criterion: SuccessCriterion | str = DEFAULT_CRITERION,
              final_only: bool = False) -> list[ReportRow]:
    """One row per (trace key, n).

    By default every trace record contributes to the row of its ``n``.
    With ``final_only`` only each trace's last record counts, which is what
    campaigns want when they run a separate selection per length.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to aggregate")
    modes = {t.mode for t in traces}
    if len(modes) > 1:
        raise ValueError(f"mixed trace modes {sorted(modes)}")
    mode = modes.pop()
    uniform = weights is None
    if uniform:
        weights = [1] * len(traces)
    elif len(weights) != len(traces):
        raise ValueError("one weight per trace required")
    label = criterion.label if isinstance(criterion, SuccessCriterion) else str(criterion)
    if mode == "greedy":
        label = ""

    buckets = {}
    for trace, w in zip(traces, weights):
        records = trace.records[-1:] if final_only else trace.records
        for r in records:
            if mode == "greedy":
                value, ok = r.remaining, r.recall
            else:
                value, ok = r.rank, r.recall_under[label]
            key = (trace.game_label, trace.encoding, trace.logic, r.n)
            buckets.setdefault(key, []).append((value, bool(ok), w))

    quartiles = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    rows = []
    for (game, enc, logic, n), items in sorted(buckets.items()):
        values = [v for v, _, _ in items]
        if uniform:
            msr = sum(ok for _, ok, _ in items) / len(items)
            pct = [percentile(values, q) for q in quartiles]
        else:
            ws = [Fraction(w) for _, _, w in items]
            msr = float(sum(w for w, (_, ok, _) in zip(ws, items) if ok) / sum(ws))
            pct = [percentile(values, q, ws) for q in quartiles]
        rows.append(ReportRow(game, enc, logic, mode, n, len(items), *(int(v) for v in pct), msr, label))
    return rows


# -- emitters ---------------------------------------------------------------

def _fmt_rate(x: float) -> str:
    return repr(float(x))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.game_label, r.encoding, r.logic, r.mode, r.n, r.samples,
                    r.p25, r.p50, r.p75, _fmt_rate(r.mean_success_rate), r.criterion])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ReportRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ReportError(f"unexpected CSV header {reader.fieldnames}")
    return [ReportRow(d["game_label"], d["encoding"], d["logic"], d["mode"], int(d["n"]),
                      int(d["samples"]), int(d["p25"]), int(d["p50"]), int(d["p75"]),
                      float(d["mean_success_rate"]), d["criterion"]) for d in reader]


def rows_to_json(rows) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def _group(rows):
    groups = {}
    for r in rows:
        groups.setdefault(r.key, []).append(r)
    return groups


def _slug(*parts) -> str:
    s = "_".join(p for p in parts if p)
    return "".join(c if c.isalnum() or c in "-_." else "-" for c in s)


def render_svg(rows, title: str = "") -> str:
    """Line chart: percentiles on a log-scale left axis, success rate on the right."""
    rows = sorted(rows, key=lambda r: r.n)
    width, height = 640, 400
    left, right, top, bottom = 70, 70, 40, 50
    pw, ph = width - left - right, height - top - bottom
    ns = [r.n for r in rows]
    n_lo, n_hi = min(ns), max(ns)
    top_val = max(max(r.p75 for r in rows), 1)
    decades = max(1, math.ceil(math.log10(top_val + 1)))

    def x(n):
        return left + (pw * (n - n_lo) / (n_hi - n_lo) if n_hi > n_lo else pw / 2)

    def y_log(v):
        # values are counts or ranks, so 0 is drawn on the axis floor
        return top + ph - ph * (math.log10(max(v, 1)) / decades)

    def y_rate(v):
        return top + ph - ph * v

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>',
           f'<g class="y-axis log-scale" stroke="#999">']
    for d in range(decades + 1):
        yy = y_log(10 ** d)
        out.append(f'<line x1="{left}" y1="{yy:.1f}" x2="{left + pw}" y2="{yy:.1f}" stroke-dasharray="2,3"/>')
        out.append(f'<text x="{left - 6}" y="{yy + 4:.1f}" text-anchor="end" stroke="none">1e{d}</text>')
    out.append('</g><g class="y2-axis" fill="#c00">')
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{left + pw + 6}" y="{y_rate(v) + 4:.1f}">{v:.2f}</text>')
    out.append('</g><g class="x-axis">')
    for n in sorted(set(ns)):
        out.append(f'<text x="{x(n):.1f}" y="{top + ph + 16}" text-anchor="middle">{n}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">scans used (n)</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left + pw}" y1="{top}" x2="{left + pw}" y2="{top + ph}" stroke="#c00"/></g>')

    def poly(points, color, dash=""):
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in points)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>'

    out.append(poly([(x(r.n), y_log(r.p25)) for r in rows], "#36c", "4,2"))
    out.append(poly([(x(r.n), y_log(r.p50)) for r in rows], "#036"))
    out.append(poly([(x(r.n), y_log(r.p75)) for r in rows], "#36c", "4,2"))
    out.append(poly([(x(r.n), y_rate(r.mean_success_rate)) for r in rows], "#c00"))
    out.append("</svg>\n")
    return "\n".join(out)


def emit_report(rows, formats, out_dir) -> list[Path]:
    rows = list(rows)
    if not rows:
        raise ReportError("nothing to emit")
    formats = set(formats)
    unknown = formats - {"csv", "json", "svg"}
    if unknown:
        raise ReportError(f"unknown report formats {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
        written.append(path)

    if "csv" in formats:
        put("report.csv", rows_to_csv(rows))
    if "json" in formats:
        put("report.json", rows_to_json(rows))
    if "svg" in formats:
        for key, group in sorted(_group(rows).items()):
            game, enc, logic, mode, crit = key
            put(_slug(game, logic, mode, crit) + ".svg",
                render_svg(group, f"{game} / {enc} / {logic} ({mode}{', ' + crit if crit else ''})"))
    return written
