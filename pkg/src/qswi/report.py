"""Versioned JSON reports and CSV tables.

Reports are plain dicts serialised with sorted keys and no timestamps, so
the same command and seed always give byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .config import tolerance_table

SCHEMA = 1


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def make_report(command: str, inputs: dict, results: dict, *, seed: int | None = None,
                checks: dict | None = None) -> dict:
    """``checks`` maps a name to a bool; any False makes the report a failure."""
    return _plain({"schema": SCHEMA, "command": command, "inputs": inputs, "seed": seed,
                   "results": results, "checks": checks or {},
                   "passed": all((checks or {}).values()),
                   "tolerances": tolerance_table()})


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write(report: dict, out: str | None) -> str:
    text = dumps(report)
    if out:
        Path(out).write_text(text)
    return text


def csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns})
    return buf.getvalue()


def write_csv(rows: list[dict], columns, path: str) -> None:
    Path(path).write_text(csv_text(rows, columns))
