"""Trace CSV serialization.

Floats are written with ``repr`` (shortest round-trip form) and inapplicable
fields are left empty, so a trace file is a byte-exact function of the run.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .matrix import atomic_write_text
from .optimizers import Trace

HEADER = ("iter", "elapsed_sec", "objective", "step", "inertia", "lbar", "lunder", "test_rmse")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def trace_to_csv(trace: Trace, record_time: bool = False) -> str:
    """Render a trace; ``elapsed_sec`` stays empty unless ``record_time`` is set."""
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    for r in trace.records:
        row = [r.iter, r.elapsed_sec if record_time else None, r.objective, r.step,
               r.inertia, r.lbar, r.lunder, r.test_rmse]
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_trace(path, trace: Trace, record_time: bool = False) -> None:
    atomic_write_text(path, trace_to_csv(trace, record_time))


def read_trace(path) -> dict[str, np.ndarray]:
    """Columns of a trace file as float arrays (NaN for empty fields).

    Raises:
        ValueError: if the header differs from the trace header.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HEADER:
        raise ValueError(f"{path}: not a trace file (header must be {','.join(HEADER)})")
    cols = {h: [] for h in HEADER}
    for lineno, rec in enumerate(rows[1:], start=2):
        if len(rec) != len(HEADER):
            raise ValueError(f"{path}:{lineno}: expected {len(HEADER)} fields, got {len(rec)}")
        for h, v in zip(HEADER, rec):
            cols[h].append(float(v) if v else math.nan)
    return {h: np.array(v, dtype=float) for h, v in cols.items()}
