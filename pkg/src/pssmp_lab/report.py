"""CSV tables and the markdown run report.

CSVs are comma separated with a header row, ``.`` decimals and ``inf`` /
``nan`` literals.  Floats are written with ``repr`` so that a run is
reproduced byte for byte.  The environment stamp (seed, replicas, wall time)
only goes into ``report.md``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import platform
from numbers import Integral, Real

import numpy as np

from .experiments import ExperimentResult, Table

VERDICT_COLUMNS = ["verdict", "passed", "value", "threshold", "table", "detail"]


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_, Integral)):
        return str(int(v))
    if isinstance(v, Real):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return repr(f)
    return str(v)


def table_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError(f"row width mismatch in table {table.name!r}")
        w.writerow([format_cell(c) for c in row])
    return buf.getvalue()


def verdict_table(res: ExperimentResult) -> Table:
    return Table("verdicts", VERDICT_COLUMNS,
                 [[v.name, int(bool(v.passed)), v.value, v.threshold, v.table, v.detail]
                  for v in res.verdicts])


def write_result(res: ExperimentResult, out_dir: str) -> list[str]:
    """Write ``<out_dir>/<Ek>/<table>.csv`` and ``verdicts.csv``; returns paths."""
    d = os.path.join(out_dir, res.experiment)
    os.makedirs(d, exist_ok=True)
    paths = []
    for t in [*res.tables, verdict_table(res)]:
        path = os.path.join(d, f"{t.name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(table_csv(t))
        paths.append(path)
    return paths


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_markdown(results, stamps, interrupted: bool = False) -> str:
    """``results`` are ExperimentResults; ``stamps`` maps id -> dict(seed, replicas, workers)."""
    lines = ["# Verification run", ""]
    lines.append(f"Python {platform.python_version()} on {platform.machine()}, "
                 f"{os.cpu_count()} CPU(s).")
    if interrupted:
        lines += ["", "**Interrupted**: only the experiments listed below completed."]
    lines += ["", "| experiment | verdict | seed | replicas | workers | wall time (s) |",
              "|---|---|---|---|---|---|"]
    for r in results:
        s = stamps[r.experiment]
        lines.append(f"| {r.experiment} | {'PASS' if r.passed else 'FAIL'} | {s['seed']} | "
                     f"{s['replicas']} | {s['workers']} | {r.wall_time:.1f} |")
    for r in results:
        lines += ["", f"## {r.experiment}: {r.title}", ""]
        lines += ["| check | result | value | threshold | table | detail |",
                  "|---|---|---|---|---|---|"]
        for v in r.verdicts:
            lines.append(f"| {v.name} | {'pass' if v.passed else 'FAIL'} | {_fmt(v.value)} | "
                         f"{v.threshold} | {v.table}.csv | {v.detail} |")
        for n in r.notes:
            lines += ["", f"- {n}"]
        lines += ["", "Tables: " + ", ".join(f"`{r.experiment}/{t.name}.csv`" for t in r.tables)]
    return "\n".join(lines) + "\n"


def write_report(results, stamps, out_dir: str, interrupted: bool = False) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_markdown(results, stamps, interrupted))
    return path
