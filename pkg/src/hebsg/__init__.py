"""Projected subgradient methods for convex functions with Hölderian growth.

The package is organised as

``core``
    problem/trace types, the projected step and the distance recursion.
``schedules``
    stepsize rules ``k -> alpha_k``.
``solvers``
    FixedSG, descending stairs (DS-SG), doubling-trick stairs (DS2-SG) and
    the incremental / noisy / normalized variants.
``problems``
    instrumented test problems, LAD regression and sparse SVM, projections.
``baselines``
    restarted (averaged) subgradient schemes used for comparison.
``analysis``
    closed-form rate bounds and log-log slope fitting.
``bench``
    experiment configs, presets, CSV traces, plots and the ``hebsg`` CLI.
"""

from hebsg.core import (
    HebParams,
    OracleError,
    ProblemInstance,
    RunTrace,
    SolverReport,
    projected_subgradient_step,
    recursion_bound,
    verify_key_recursion,
)

__all__ = [
    "HebParams",
    "OracleError",
    "ProblemInstance",
    "RunTrace",
    "SolverReport",
    "projected_subgradient_step",
    "recursion_bound",
    "verify_key_recursion",
]

__version__ = "0.1.0"
