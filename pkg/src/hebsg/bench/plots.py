"""Matplotlib figures written to files (SVG by default, no GUI)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAX_POINTS = 2000


def _subsample(k, logx: bool):
    n = len(k)
    if n <= MAX_POINTS:
        return np.arange(n)
    if logx:
        idx = np.unique(np.geomspace(1, n, MAX_POINTS).astype(int) - 1)
    else:
        idx = np.unique(np.linspace(0, n - 1, MAX_POINTS).astype(int))
    return idx


def emit_plot(traces: dict, path, y: str = "gap", x: str = "k", h_ref: Optional[float] = None,
              best_so_far: bool = False, title: str = "") -> Path:
    """Plot one curve per trace on a log-scale y axis and save it.

    Parameters
    ----------
    traces : dict
        ``label -> RunTrace``.
    y : {"gap", "dist_sq"}
        Objective gap ``h(x_k) - h_ref`` or squared distance ``e_k``.
    x : {"k", "logk"}
        Linear or logarithmic iteration axis.
    best_so_far : bool
        Plot the running minimum of the objective instead of ``h(x_k)``.
    """
    if not traces:
        raise ValueError("no traces to plot")
    if y not in ("gap", "dist_sq") or x not in ("k", "logk"):
        raise ValueError(f"unsupported axes {y}:{x}")
    if y == "gap" and h_ref is None:
        raise ValueError("gap plots need a reference optimum")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "hebsg", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        plotted = 0
        for label, tr in traces.items():
            if y == "gap":
                obj = tr.best_so_far() if best_so_far else tr.obj
                vals = np.maximum(obj - h_ref, 0.0)
            else:
                if tr.dist_sq is None:
                    continue
                vals = tr.dist_sq
            idx = _subsample(tr.k, x == "logk")
            v = vals[idx]
            keep = v > 0
            if not keep.any():
                continue
            ax.plot(tr.k[idx][keep], v[keep], label=label, linewidth=1.2)
            plotted += 1
        if not plotted:
            plt.close(fig)
            raise ValueError(f"none of the traces has positive {y} values to plot")
        ax.set_yscale("log")
        if x == "logk":
            ax.set_xscale("log")
        ax.set_xlabel("iteration k (subgradient evaluations)")
        ax.set_ylabel("best h - h*" if (y == "gap" and best_so_far) else ("h - h*" if y == "gap" else "d(x_k, X)^2"))
        if title:
            ax.set_title(title)
        ax.grid(True, which="major", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
        plt.close(fig)
    return path
