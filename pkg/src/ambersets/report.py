"""Rendering metrics reports as text tables, CSV and JSON lines."""

from __future__ import annotations

import csv
import io
import json
import math

from .errors import ConfigError
from .metrics import SPLITS, MetricsReport

FORMATS = ("table", "csv", "json-lines")
CSV_FIELDS = ("task", "metric", "split", "k", "num", "den", "value")


def _pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.1f}"


def render_table(report: MetricsReport) -> str:
    """One header row plus one row per task: All/Head/Tail/forall per k, then confusion."""
    header = ["Task"]
    for k in report.ks:
        header += [f"All@{k}", f"Head@{k}", f"Tail@{k}", f"∀@{k}"]
    header += ["Conf-All", "Conf-Head", "Conf-Tail"]
    rows = [header]
    for task in sorted(report.tasks):
        m = report.tasks[task]
        row = [task]
        for k in report.ks:
            acc = m.accuracy[k]
            row += [_pct(acc[s].value) for s in SPLITS] + [_pct(m.forall[k].value)]
        row += [_pct(m.confusion[s].value) for s in SPLITS]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths))).rstrip()
             for r in rows]
    return "\n".join(lines) + "\n"


def render_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for task in sorted(report.tasks):
        m = report.tasks[task]
        k0 = report.ks[0]
        for k in report.ks:
            for s in SPLITS:
                r = m.accuracy[k][s]
                w.writerow([task, "accuracy", s, k, r.num, r.den, repr(r.value)])
            r = m.forall[k]
            w.writerow([task, "forall", "All", k, r.num, r.den, repr(r.value)])
        for s in SPLITS:
            r = m.confusion[s]
            w.writerow([task, "confusion", s, "", r.num, r.den, repr(r.value)])
        for row in m.gap_bins:
            w.writerow([task, "gap_head", row.bin.label, k0, row.head.num, row.head.den, repr(row.head.value)])
            w.writerow([task, "gap_tail", row.bin.label, k0, row.tail.num, row.tail.den, repr(row.tail.value)])
    return buf.getvalue()


def parse_csv(text: str) -> dict[tuple[str, str, str, str], tuple[int, int, float]]:
    """Inverse of :func:`render_csv`, keyed by (task, metric, split, k)."""
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["task"], row["metric"], row["split"], row["k"])
        out[key] = (int(row["num"]), int(row["den"]), float(row["value"]))
    return out


def render_json_lines(report: MetricsReport) -> str:
    lines = []
    for task in sorted(report.tasks):
        rec = {"run_id": report.run_id, "collection": report.collection, "task": task}
        rec.update(report.tasks[task].to_dict())
        lines.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def render_gap_csv(report: MetricsReport) -> str:
    """Flat per-bin rows for plotting head-minus-tail accuracy against popularity gap."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "bin", "lower", "upper", "pairs", "head_acc", "tail_acc", "difference"])
    for task in sorted(report.tasks):
        for row in report.tasks[task].gap_bins:
            upper = "" if math.isinf(row.bin.upper) else row.bin.upper
            head = repr(row.head.value) if row.head.den else ""
            tail = repr(row.tail.value) if row.tail.den else ""
            diff = "" if row.difference is None else repr(row.difference)
            w.writerow([task, row.bin.label, row.bin.lower, upper, row.pairs, head, tail, diff])
    return buf.getvalue()


def emit_report(report: MetricsReport, fmt: str = "table") -> str:
    if fmt == "table":
        return render_table(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json-lines":
        return render_json_lines(report)
    raise ConfigError(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")
