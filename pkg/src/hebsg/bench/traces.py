"""CSV serialization of run traces.

Schema: ``k,alpha,obj,gap,dist_sq,gnorm,evals``.  Floats use 17 significant
digits; NaN and unavailable fields are written as empty strings.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional

import numpy as np

from hebsg.core import RunTrace

HEADER = ("k", "alpha", "obj", "gap", "dist_sq", "gnorm", "evals")


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else format(v, ".17g")


def trace_rows(trace: RunTrace, h_ref: Optional[float] = None, thin: int = 1):
    """Rows of the CSV schema; with ``thin > 1`` only every ``thin``-th row and the last are kept."""
    n = len(trace)
    gap = trace.gap(h_ref) if h_ref is not None else None
    for i in range(n):
        if thin > 1 and i % thin and i != n - 1:
            continue
        yield (
            str(int(trace.k[i])),
            _fmt(trace.alpha[i]),
            _fmt(trace.obj[i]),
            _fmt(gap[i]) if gap is not None else "",
            _fmt(trace.dist_sq[i]) if trace.dist_sq is not None else "",
            _fmt(trace.gnorm[i]),
            str(int(trace.evals[i])),
        )


def write_trace_csv(path, trace: RunTrace, h_ref: Optional[float] = None, thin: int = 1) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(trace_rows(trace, h_ref, thin))
    return path


def read_trace_csv(path):
    """Read a trace CSV; returns ``(trace, gap)`` where ``gap`` may be ``None``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HEADER:
        raise ValueError(f"{path}: expected header {','.join(HEADER)}")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")

    def col(j):
        return np.array([float(r[j]) if r[j] != "" else math.nan for r in body])

    dist = col(4)
    gap = col(3)
    trace = RunTrace(
        k=col(0).astype(np.int64),
        alpha=col(1),
        obj=col(2),
        gnorm=col(5),
        evals=col(6).astype(np.int64),
        dist_sq=None if np.all(np.isnan(dist)) else dist,
    )
    return trace, (None if np.all(np.isnan(gap)) else gap)
