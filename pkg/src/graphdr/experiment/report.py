"""Aggregation of per-seed rows into mean (std) tables, CSV and Markdown."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..models import KINDS
from .config import INPUT_MODES, REDUCERS

__all__ = ["CLASSIFICATION_FIELDS", "CLUSTERING_FIELDS", "mean_std", "format_mean_std",
           "aggregate", "markdown_table", "read_rows", "write_rows", "write_summary"]

CLASSIFICATION_FIELDS = ["model", "input", "seed", "accuracy", "precision", "recall", "f1", "params",
                         "epochs", "best_epoch"]
CLUSTERING_FIELDS = ["model", "input", "output", "seed", "labeling", "silhouette", "dunn"]
METRICS = ("accuracy", "precision", "recall", "f1")


def mean_std(values):
    """Mean and sample (n-1) standard deviation; std is None for a single value."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values to aggregate")
    return float(v.mean()), (float(v.std(ddof=1)) if v.size > 1 else None)


def format_mean_std(values):
    m, s = mean_std(values)
    return f"{m:.2f} ({'—' if s is None else f'{s:.2f}'})"


def _order(value, reference):
    return reference.index(value) if value in reference else len(reference)


def aggregate(rows):
    """Group classification rows by (model, input); one summary dict per group."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to aggregate")
    keys = set(rows[0])
    for r in rows:
        if set(r) != keys:
            raise ValueError(f"inconsistent row schema: {sorted(set(r) ^ keys)}")
    groups = {}
    for r in rows:
        groups.setdefault((r["model"], r["input"]), []).append(r)
    out = []
    for (model, mode), members in sorted(groups.items(),
                                         key=lambda kv: (_order(kv[0][1], INPUT_MODES), _order(kv[0][0], KINDS))):
        seeds = [int(m["seed"]) for m in members]
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"duplicate seeds for {model}/{mode}")
        summary = {"model": model, "input": mode, "seeds": len(members)}
        for metric in METRICS:
            summary[metric] = format_mean_std([float(m[metric]) for m in members])
        if "params" in members[0]:
            summary["params"] = members[0]["params"]
        out.append(summary)
    return out


def markdown_table(header, rows):
    cells = [[str(h) for h in header]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["| " + " | ".join(c.ljust(w) for c, w in zip(cells[0], widths)) + " |",
             "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += ["| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |" for r in cells[1:]]
    return "\n".join(lines)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_rows(path, fieldnames, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in fieldnames})


def read_rows(paths):
    rows = []
    for p in paths:
        with open(p, newline="", encoding="utf-8") as fh:
            rows.extend(csv.DictReader(fh))
    return rows


def write_summary(out_dir, classification_rows, clustering_rows=(), dataset=""):
    """Write ``classification_summary.csv``, ``clustering_summary.csv`` and ``summary.md``."""
    out_dir = Path(out_dir)
    table = aggregate(classification_rows)
    fields = ["model", "input", "seeds", *METRICS, "params"]
    write_rows(out_dir / "classification_summary.csv", fields, table)
    clustering_rows = sorted(
        clustering_rows,
        key=lambda r: (_order(r["input"], INPUT_MODES), _order(r["model"], KINDS), _order(r["output"], REDUCERS)),
    )
    write_rows(out_dir / "clustering_summary.csv", CLUSTERING_FIELDS, clustering_rows)

    parts = [f"# Results: {dataset}" if dataset else "# Results", ""]
    parts += ["## Node classification (test nodes, mean (std) over seeds)", ""]
    parts.append(markdown_table(["Model", "Input", "Accuracy", "Precision", "Recall", "F1"],
                                [[t["model"], t["input"], *(t[m] for m in METRICS)] for t in table]))
    if clustering_rows:
        parts += ["", "## Clustering of embedded test nodes (first seed)", ""]
        parts.append(markdown_table(
            ["Model", "Input", "Output", "Silhouette", "Dunn"],
            [[r["model"], r["input"], r["output"], f"{float(r['silhouette']):.3f}", f"{float(r['dunn']):.3f}"]
             for r in clustering_rows]))
    parts += ["", "## Trainable parameters", ""]
    parts.append(markdown_table(["Model", "Input", "Parameters"],
                                [[t["model"], t["input"], f"{int(t['params']):,}"] for t in table if "params" in t]))
    (out_dir / "summary.md").write_text("\n".join(parts) + "\n", encoding="utf-8")
    return table
