"""Problem and trace types, the projected subgradient step and the key recursion.

Iterations are 1-indexed: ``x_1`` is the starting point and a run of ``K``
steps produces ``x_2, ..., x_{K+1}``.  Every trace carries one row per
evaluated iterate plus a terminal row for the returned point, whose stepsize
and subgradient norm are NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

Oracle = Callable[[np.ndarray], "tuple[float, np.ndarray]"]
Projection = Callable[[np.ndarray], np.ndarray]

CEIL_GUARD = 1e-12


class OracleError(RuntimeError):
    """A subgradient oracle returned a non-finite value or subgradient."""


class ConditionError(ValueError):
    """A parameter choice violates a precondition of a convergence guarantee.

    ``condition`` is a short machine-readable name of the inequality.
    """

    def __init__(self, condition: str, message: str):
        super().__init__(f"[{condition}] {message}")
        self.condition = condition


def guarded_ceil(value: float) -> int:
    """Ceiling that ignores round-off above an integer (relative 1e-12)."""
    return int(math.ceil(value - CEIL_GUARD * abs(value)))


@dataclass(frozen=True)
class HebParams:
    """Hölder error bound ``h(x) - h* >= c d(x, X)^(1/theta)`` plus ``||g|| <= G``."""

    c: float
    theta: float
    G: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be positive and finite, got {self.c}")
        if not (0 < self.theta <= 1):
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not (self.G > 0 and math.isfinite(self.G)):
            raise ValueError(f"G must be positive and finite, got {self.G}")

    @property
    def kappa(self) -> float:
        return self.G / self.c

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.theta)

    def replace(self, **changes) -> "HebParams":
        values = {"c": self.c, "theta": self.theta, "G": self.G}
        values.update(changes)
        return HebParams(**values)


@dataclass(frozen=True)
class ProblemInstance:
    """``min h(x) s.t. x in C`` given by oracles.

    ``oracle(x)`` returns ``(h(x), g)`` with ``g`` a subgradient, ``project``
    is the Euclidean projection onto ``C``.  ``heb`` is the claimed error bound
    (it may be conservative, or ``None`` when ``c`` is unknown).  ``distance``
    and ``optimal_value`` are the optional exact instrumentation.
    """

    dim: int
    oracle: Oracle
    project: Projection
    heb: Optional[HebParams] = None
    G: Optional[float] = None
    distance: Optional[Callable[[np.ndarray], float]] = None
    optimal_value: Optional[float] = None
    diameter_sq: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.G is None and self.heb is not None:
            object.__setattr__(self, "G", self.heb.G)

    @property
    def instrumented(self) -> bool:
        return self.distance is not None

    def dist_sq(self, x: np.ndarray) -> float:
        if self.distance is None:
            raise ValueError(f"problem {self.name!r} has no distance instrumentation")
        d = float(self.distance(x))
        return d * d

    def with_heb(self, heb: HebParams) -> "ProblemInstance":
        """Same problem declared with different error-bound constants."""
        return _replace(self, heb=heb, G=heb.G)


def _replace(problem: ProblemInstance, **changes) -> ProblemInstance:
    import dataclasses

    return dataclasses.replace(problem, **changes)


def evaluate(problem: ProblemInstance, x: np.ndarray) -> tuple[float, np.ndarray]:
    value, g = problem.oracle(x)
    value = float(value)
    g = np.asarray(g, dtype=float)
    if not math.isfinite(value) or not np.all(np.isfinite(g)):
        raise OracleError(f"non-finite oracle output at x={x!r} (value={value})")
    return value, g


def projected_subgradient_step(x, alpha: float, problem: ProblemInstance):
    """One step ``P_C(x - alpha g)``; returns ``(x_next, h(x), g)``."""
    if not alpha > 0:
        raise ValueError(f"stepsize must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    value, g = evaluate(problem, x)
    return problem.project(x - alpha * g), value, g


def recursion_bound(e: float, alpha: float, heb: HebParams) -> float:
    """Upper bound on ``e_{k+1}`` from ``e_k`` for one step with stepsize ``alpha``."""
    if e < 0:
        raise ValueError("squared distance must be nonnegative")
    bound = e - 2.0 * alpha * heb.c * e ** heb.gamma + alpha * alpha * heb.G * heb.G
    return max(0.0, bound)


@dataclass
class RunTrace:
    """Per-iterate record of a run.

    Arrays are aligned; row ``i`` describes iterate ``x_{k[i]}``.  ``alpha`` and
    ``gnorm`` are NaN on the terminal row.  ``dist_sq`` is ``None`` when the
    problem is not instrumented.
    """

    k: np.ndarray
    alpha: np.ndarray
    obj: np.ndarray
    gnorm: np.ndarray
    evals: np.ndarray
    dist_sq: Optional[np.ndarray] = None
    iterates: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.k)

    @property
    def instrumented(self) -> bool:
        return self.dist_sq is not None

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.obj)

    def gap(self, h_ref: float) -> np.ndarray:
        return np.maximum(self.obj - h_ref, 0.0)


@dataclass
class PhaseEntry:
    """One constant-stepsize phase of a staircase or restart method."""

    outer: int
    stage: int
    K: int
    alpha: float
    c: Optional[float]
    start_evals: int
    end_evals: int
    end_obj: float
    end_dist_sq: Optional[float] = None


@dataclass
class SolverReport:
    x: np.ndarray
    x_best: np.ndarray
    best_obj: float
    subgrad_evals: int
    trace: RunTrace
    phases: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


class Recorder:
    """Drives projected steps on one problem and accumulates the trace.

    Solvers that chain several phases (stairs, restarts) share a recorder so
    that ``k`` and the evaluation counter run on continuously.
    """

    def __init__(self, problem: ProblemInstance, keep_iterates: bool = False,
                 max_evals: Optional[int] = None):
        self.problem = problem
        self.keep_iterates = keep_iterates
        self.max_evals = max_evals
        self.evals = 0
        self.k = 0
        self.best_obj = math.inf
        self.x_best = None
        self._rows = []
        self._iterates = []

    @property
    def exhausted(self) -> bool:
        return self.max_evals is not None and self.evals >= self.max_evals

    def record(self, x, alpha, value, gnorm, evals_used=1):
        self.k += 1
        self.evals += evals_used
        d2 = self.problem.dist_sq(x) if self.problem.instrumented else math.nan
        self._rows.append((self.k, alpha, value, gnorm, self.evals, d2))
        if self.keep_iterates:
            self._iterates.append(np.array(x, dtype=float))
        if value < self.best_obj:
            self.best_obj = value
            self.x_best = np.array(x, dtype=float)

    def step(self, x, alpha: float, normalize: bool = False) -> np.ndarray:
        if not alpha > 0:
            raise ValueError(f"stepsize must be positive, got {alpha}")
        value, g = evaluate(self.problem, x)
        gnorm = float(np.linalg.norm(g))
        direction = g
        if normalize:
            if gnorm == 0.0:
                # 0 in the subdifferential means x is optimal; only a known h* can contradict it
                h_star = self.problem.optimal_value
                if h_star is not None and value > h_star + 1e-12 * (1.0 + abs(h_star)):
                    raise OracleError(f"zero subgradient at a non-optimal point (h={value})")
            else:
                direction = g / gnorm
        self.record(x, alpha, value, gnorm)
        return self.problem.project(x - alpha * direction)

    def objective(self, x) -> float:
        """Objective at ``x`` for instrumentation; not counted as an evaluation."""
        return evaluate(self.problem, x)[0]

    def close(self, x) -> RunTrace:
        value = self.objective(x)
        self.k += 1
        d2 = self.problem.dist_sq(x) if self.problem.instrumented else math.nan
        self._rows.append((self.k, math.nan, value, math.nan, self.evals, d2))
        if self.keep_iterates:
            self._iterates.append(np.array(x, dtype=float))
        if value < self.best_obj:
            self.best_obj = value
            self.x_best = np.array(x, dtype=float)
        rows = np.array(self._rows, dtype=float)
        return RunTrace(
            k=rows[:, 0].astype(np.int64),
            alpha=rows[:, 1],
            obj=rows[:, 2],
            gnorm=rows[:, 3],
            evals=rows[:, 4].astype(np.int64),
            dist_sq=rows[:, 5] if self.problem.instrumented else None,
            iterates=np.array(self._iterates) if self.keep_iterates else None,
        )

    def report(self, x, **kwargs) -> SolverReport:
        trace = self.close(x)
        return SolverReport(
            x=np.array(x, dtype=float),
            x_best=self.x_best,
            best_obj=self.best_obj,
            subgrad_evals=self.evals,
            trace=trace,
            **kwargs,
        )


class RecursionCheck(NamedTuple):
    ok: bool
    first_violation: Optional[int]
    max_excess: float

    def __bool__(self) -> bool:
        return self.ok


def verify_key_recursion(trace: RunTrace, heb: HebParams, tol: float = 1e-9) -> RecursionCheck:
    """Check ``e_{k+1} <= recursion_bound(e_k, alpha_k) + tol (1 + e_k)`` on every step.

    ``max_excess`` is the largest ``(e_{k+1} - bound) / (1 + e_k)`` observed.
    """
    if trace.dist_sq is None:
        raise ValueError("recursion check needs an instrumented trace (dist_sq)")
    e = trace.dist_sq
    first = None
    worst = -math.inf
    for i in range(len(e) - 1):
        a = trace.alpha[i]
        if not a > 0:
            continue
        excess = (e[i + 1] - recursion_bound(e[i], a, heb)) / (1.0 + e[i])
        worst = max(worst, excess)
        if excess > tol and first is None:
            first = int(trace.k[i])
    return RecursionCheck(first is None, first, worst)


def feasibility_residual(problem: ProblemInstance, x) -> float:
    """``||x - P_C(x)|| / (1 + ||x||)``."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - problem.project(x)) / (1.0 + np.linalg.norm(x)))
