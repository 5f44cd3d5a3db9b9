"""Dataset ingestion and report serialization for the command-line tool.

Input files are delimited text (comma or tab, detected from the header) with
columns named ``x``, ``u`` and ``v`` in any order and any letter case.
Other columns are ignored.  Empty fields and ``NA`` mark missing values.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import TruncatedSample, validate_sample
from .exceptions import InputError

REPORT_VERSION = 1
REQUIRED = ("x", "u", "v")


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _delimiter(header_line: str) -> str:
    return "\t" if header_line.count("\t") > header_line.count(",") else ","


def read_rows(path):
    """Raw ``(x, u, v)`` string triplets in file order (missing fields kept)."""
    text = _read_text(path)
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InputError(f"{path}: empty file or missing header")
    reader = csv.reader(io.StringIO(text), delimiter=_delimiter(lines[0]))
    header = [h.strip().strip('"').lower() for h in next(reader)]
    cols = {}
    for name in REQUIRED:
        if header.count(name) != 1:
            raise InputError(f"{path}: header needs exactly one '{name}' column, got {header}")
        cols[name] = header.index(name)
    rows = []
    for record in reader:
        if not record or all(not f.strip() for f in record):
            continue
        rows.append(tuple(record[cols[c]].strip() if cols[c] < len(record) else "" for c in REQUIRED))
    return rows


def read_dataset(path) -> TruncatedSample:
    """Load and validate a dataset file; missing rows are dropped and counted."""
    rows = read_rows(path)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return validate_sample(rows)


def write_dataset(sample: TruncatedSample, path, delimiter=","):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(REQUIRED)
        for row in zip(sample.x.tolist(), sample.u.tolist(), sample.v.tolist()):
            w.writerow([repr(val) for val in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def dumps_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def dumps_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value)) if math.isfinite(value) else ""
    return str(value)


def _parse_cell(text):
    if text == "":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_report(path):
    """Re-read a report written by the tool (JSON object or CSV list of rows)."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return json.loads(text)
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def emit(text: str, out=None):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror or exc}") from exc


PLOT_COLUMNS = ("series", "x", "value")


def plot_rows(series: dict):
    """Long-format plot rows from ``{name: (x, values)}``."""
    return [{"series": name, "x": float(xv), "value": float(yv)}
            for name, (xs, ys) in series.items() for xv, yv in zip(np.ravel(xs), np.ravel(ys))]
