"""Reference optimum ``h*`` for problems without a closed-form solution.

The estimate is the best objective of a long DS2-SG run (``eps = 1e-30``),
which needs neither ``c`` nor ``h*``.  Results are cached as small JSON files
under ``$HEBSG_CACHE`` (default ``~/.cache/hebsg``) keyed by a fingerprint of
the problem data and the run budget.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Optional

import numpy as np

from hebsg.core import ProblemInstance
from hebsg.solvers import Ds2SgConfig, ds2_sg

CACHE_ENV = "HEBSG_CACHE"
REF_EPS = 1e-30
REF_BETA = 4.0


def fingerprint(*arrays, **scalars) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    for k in sorted(scalars):
        h.update(f"{k}={scalars[k]!r};".encode())
    return h.hexdigest()


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "hebsg"))


def reference_optimum(problem: ProblemInstance, x1, budget: int = 300000, theta: float = 1.0,
                      key: Optional[str] = None, use_cache: bool = True) -> float:
    """Best objective value found by a long DS2-SG run from ``x1``."""
    if problem.optimal_value is not None:
        return float(problem.optimal_value)
    if problem.G is None or problem.diameter_sq is None:
        raise ValueError("a reference run needs G and a bounded constraint set")
    path = None
    if use_cache and key is not None:
        path = cache_dir() / f"ref-{fingerprint(key=key, budget=budget, theta=theta, eps=REF_EPS)[:32]}.json"
        if path.exists():
            try:
                return float(json.loads(path.read_text())["h_ref"])
            except (ValueError, KeyError):
                pass
    cfg = Ds2SgConfig.for_target(problem.G, theta, problem.diameter_sq, REF_EPS, REF_BETA,
                                 max_outer_loops=200)
    rep = ds2_sg(problem, cfg, x1, max_evals=budget)
    h_ref = float(rep.best_obj)
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps({"h_ref": repr(h_ref), "budget": budget}))
        except OSError:
            pass
    return h_ref
