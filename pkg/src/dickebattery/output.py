"""Writing result tables: CSV, JSON sidecars and SVG line plots."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .experiments import ResultTable

FORMATS = ("csv", "json", "svg")
SIG_DIGITS = 15


def format_number(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def to_csv_text(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.columns)
    for row in table.data:
        w.writerow([format_number(float(x)) for x in row])
    return buf.getvalue()


def parse_csv_text(text: str) -> ResultTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return ResultTable(tuple(header), data)


def read_csv(path) -> ResultTable:
    with open(path, newline="") as fh:
        return parse_csv_text(fh.read())


def to_json_obj(table: ResultTable) -> dict:
    return {
        "columns": list(table.columns),
        "rows": table.data.tolist(),
        "meta": table.meta,
    }


def plot_svg(table: ResultTable, path, columns=None, title: str | None = None) -> Path:
    """One line per column against the first column; each line's SVG group id is its column name."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed hash salt and no timestamp keep the SVG byte-stable across runs
    matplotlib.rcParams["svg.hashsalt"] = "dickebattery"
    x_name = table.columns[0]
    columns = [c for c in (columns or table.columns[1:]) if c != x_name]
    x = table.column(x_name)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for c in columns:
        (line,) = ax.plot(x, table.column(c), label=c)
        line.set_gid(c)
    ax.set_xlabel(x_name)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit(table: ResultTable, out, formats=("csv",), columns=None, sidecar: dict | None = None) -> list[Path]:
    """Write ``table`` next to the path stem ``out`` in each requested format.

    ``svg`` also writes the CSV it plots. ``sidecar`` (e.g. power maxima) goes
    to ``<stem>.power.json``. Returns the paths written.
    """
    if len(table) == 0:
        raise ValueError("refusing to write an empty table")
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValueError(f"unknown format(s) {bad}; choose from {', '.join(FORMATS)}")
    stem = Path(out)
    if stem.suffix.lower() in {"." + f for f in FORMATS}:
        stem = stem.with_suffix("")
    if not stem.parent.exists():
        raise OSError(f"output directory {stem.parent} does not exist")
    written = []
    fmts = set(formats)
    if "csv" in fmts or "svg" in fmts:
        p = stem.with_name(stem.name + ".csv")
        p.write_text(to_csv_text(table), newline="")
        written.append(p)
    if "json" in fmts:
        p = stem.with_name(stem.name + ".json")
        p.write_text(json.dumps(to_json_obj(table), indent=2))
        written.append(p)
    if "svg" in fmts:
        written.append(plot_svg(table, stem.with_name(stem.name + ".svg"), columns, title=stem.name))
    if sidecar:
        p = stem.with_name(stem.name + ".power.json")
        p.write_text(json.dumps(sidecar, indent=2))
        written.append(p)
    return written
