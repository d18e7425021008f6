"""Projected subgradient solvers: constant stepsize, descending stairs and the doubling trick.

All solvers return a :class:`~hebsg.core.SolverReport`.  Staircase methods
fill ``report.phases`` with one :class:`~hebsg.core.PhaseEntry` per constant
stepsize phase.  ``max_evals`` caps the number of subgradient evaluations;
a run that hits the cap stops mid-phase.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from hebsg.core import (
    ConditionError,
    HebParams,
    PhaseEntry,
    ProblemInstance,
    Recorder,
    SolverReport,
    evaluate,
    feasibility_residual,
    guarded_ceil,
)
from hebsg.schedules import StepsizeSchedule


def _start(problem: ProblemInstance, x1) -> np.ndarray:
    x = np.array(x1, dtype=float).reshape(-1)
    if x.shape != (problem.dim,):
        raise ValueError(f"starting point has shape {x.shape}, expected ({problem.dim},)")
    if feasibility_residual(problem, x) > 1e-9:
        raise ValueError("starting point is not in the constraint set")
    return x


def _run_constant(rec: Recorder, x, K: int, alpha: float) -> np.ndarray:
    for _ in range(K):
        if rec.exhausted:
            break
        x = rec.step(x, alpha)
    return x


# -- FixedSG ------------------------------------------------------------------

def fixed_sg(problem: ProblemInstance, K: int, alpha: float, x1, *,
             keep_iterates: bool = False) -> SolverReport:
    """``K`` projected steps with constant stepsize ``alpha``; returns ``x_{K+1}``."""
    if K < 1:
        raise ValueError("K must be a positive integer")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    rec = Recorder(problem, keep_iterates=keep_iterates)
    x = _run_constant(rec, _start(problem, x1), K, alpha)
    return rec.report(x)


def fixed_sg_iteration_count(eps: float, heb: HebParams, d1_sq: float,
                             Dhat: Optional[float] = None) -> int:
    """Iterations after which FixedSG with ``fixed_eps_constant(eps)`` keeps ``e_{k+1} <= 2 eps``.

    For ``theta <= 1/2`` (and no ``Dhat``) uses the ``ln(d1^2/eps) eps^(1-1/theta)``
    count; for ``theta >= 1/2`` with a bound ``Dhat >= d1^2`` uses the
    ``Dhat^(1-1/(2 theta)) ln(d1^2/eps) eps^(-1/(2 theta))`` count.

    Raises
    ------
    ConditionError
        If ``eps`` (or ``Dhat``) violates the matching precondition.
    """
    theta, kappa = heb.theta, heb.kappa
    if not (eps > 0 and d1_sq > 0):
        raise ValueError("eps and d1_sq must be positive")
    if theta <= 0.5 and Dhat is None:
        cap = (theta * kappa ** 2 / 2.0) ** (theta / (1.0 - theta))
        if eps > cap * (1 + 1e-12):
            raise ConditionError("eps_small_theta",
                                 f"eps={eps} exceeds (theta kappa^2/2)^(theta/(1-theta)) = {cap}")
        K = 0.5 * theta * kappa ** 2 * math.log(d1_sq / eps) * eps ** (1.0 - 1.0 / theta)
    else:
        if theta < 0.5:
            raise ConditionError("theta_range", "the Dhat-based count needs theta >= 1/2")
        if Dhat is None:
            raise ConditionError("dhat_missing", "theta > 1/2 needs a bound Dhat >= d(x1, X)^2")
        if d1_sq > Dhat * (1 + 1e-12):
            raise ConditionError("dhat_initial", f"d1_sq={d1_sq} exceeds Dhat={Dhat}")
        cap = min(Dhat / 2.0, (theta * kappa ** 2 / 2.0) ** (2 * theta) * Dhat ** (2 * theta - 1))
        if eps > cap * (1 + 1e-12):
            raise ConditionError("eps_dhat",
                                 f"eps={eps} exceeds min(Dhat/2, (theta kappa^2/2)^(2theta) Dhat^(2theta-1)) = {cap}")
        if theta < 1:
            cap2 = (kappa ** 2 / 4.0) ** (theta / (1.0 - theta))
            if eps > cap2 * (1 + 1e-12):
                raise ConditionError("eps_kappa",
                                     f"eps={eps} exceeds (kappa^2/4)^(theta/(1-theta)) = {cap2}")
        elif kappa < 2:
            raise ConditionError("kappa_ge_2", f"theta = 1 needs kappa >= 2, got {kappa}")
        K = (0.5 * theta * kappa ** 2 * Dhat ** (1.0 - 1.0 / (2 * theta))
             * math.log(d1_sq / eps) * eps ** (-1.0 / (2 * theta)))
    return max(1, guarded_ceil(K))


# -- descending stairs --------------------------------------------------------

def dssg_beta_lower_bound(heb: HebParams, Omega: float) -> float:
    """Smallest admissible stair factor for ``1/2 <= theta < 1`` (1 when ``theta = 1``)."""
    theta, kappa = heb.theta, heb.kappa
    if theta == 1:
        return 1.0
    first = 0.5 * (kappa ** 2 / 4.0) ** (theta / (theta - 1.0)) * Omega
    second = theta ** (-2 * theta) * kappa ** (-4 * theta) * Omega ** (2 * (1 - theta))
    return max(first, second)


def stairs_needed(Omega: float, eps: float, beta: float) -> int:
    if not beta > 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if not (0 < eps and 0 < Omega < math.inf):
        raise ValueError("need eps > 0 and a finite Omega > 0")
    return max(1, guarded_ceil(math.log(Omega / eps) / math.log(beta)))


@dataclass(frozen=True)
class DsSgConfig:
    """Descending stairs parameters.

    ``beta`` shrinks the stepsize by ``beta^(-1/(2 theta))`` and stretches the
    stairs by ``beta^((1-theta)/theta)``; ``Omega1 >= d(x_init, X)^2``.
    """

    beta: float
    M: int
    Omega1: float
    heb: HebParams
    eps: Optional[float] = None
    enforce: bool = True

    def __post_init__(self):
        self.validate()

    @classmethod
    def for_target(cls, heb: HebParams, Omega1: float, eps: float, beta: float,
                   enforce: bool = True) -> "DsSgConfig":
        return cls(beta, stairs_needed(Omega1, eps, beta), Omega1, heb, eps, enforce)

    def validate(self):
        theta = self.heb.theta
        if not self.beta > 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if not self.Omega1 > 0:
            raise ValueError("Omega1 must be positive")
        if not 0.5 <= theta <= 1:
            raise ValueError("descending stairs needs 1/2 <= theta <= 1")
        if not self.enforce:
            return
        if theta == 1:
            if self.heb.kappa < 2:
                raise ConditionError("kappa_ge_2", f"theta = 1 needs kappa >= 2, got {self.heb.kappa}")
        else:
            lb = dssg_beta_lower_bound(self.heb, self.Omega1)
            if self.beta < lb:
                raise ConditionError("beta_lower_bound", f"beta={self.beta} is below the admissible {lb}")
        if self.eps is not None and self.M < stairs_needed(self.Omega1, self.eps, self.beta):
            raise ConditionError("stairs_count",
                                 f"M={self.M} < {stairs_needed(self.Omega1, self.eps, self.beta)} stairs needed for eps={self.eps}")

    @property
    def K1_tilde(self) -> float:
        h = self.heb
        return (h.theta * h.kappa ** 2 * self.beta ** (1 / (2 * h.theta)) * math.log(2 * self.beta)
                * self.Omega1 ** (1 - 1 / h.theta))

    @property
    def alpha1(self) -> float:
        h = self.heb
        return (2 * h.c / h.G ** 2) * (self.Omega1 / (2 * self.beta)) ** (1 / (2 * h.theta))

    def stair_length(self, m: int) -> int:
        theta = self.heb.theta
        return guarded_ceil(self.beta ** ((m - 1) * (1 - theta) / theta) * self.K1_tilde)

    def stair_alpha(self, m: int) -> float:
        """Stepsize of stair ``m``, by repeated multiplication as in the recursive definition."""
        a = self.alpha1
        shrink = self.beta ** (-1 / (2 * self.heb.theta))
        for _ in range(m - 1):
            a *= shrink
        return a

    def stair_target(self, m: int) -> float:
        """``beta^-m Omega1``, the squared distance guaranteed after stair ``m``."""
        return self.beta ** (-m) * self.Omega1


def _ds_sg_run(rec: Recorder, cfg: DsSgConfig, x, phases: list, outer: int = 1) -> np.ndarray:
    alpha = cfg.alpha1
    shrink = cfg.beta ** (-1 / (2 * cfg.heb.theta))
    for m in range(1, cfg.M + 1):
        if rec.exhausted:
            break
        K = cfg.stair_length(m)
        start = rec.evals
        x = _run_constant(rec, x, K, alpha)
        phases.append(PhaseEntry(
            outer=outer, stage=m, K=K, alpha=alpha, c=cfg.heb.c,
            start_evals=start, end_evals=rec.evals,
            end_obj=rec.objective(x),
            end_dist_sq=rec.problem.dist_sq(x) if rec.problem.instrumented else None,
        ))
        alpha *= shrink
    return x


def ds_sg(problem: ProblemInstance, cfg: DsSgConfig, x_init, *,
          max_evals: Optional[int] = None, keep_iterates: bool = False) -> SolverReport:
    """Descending stairs subgradient method for ``1/2 <= theta <= 1``.

    Runs ``M`` FixedSG stairs chained through their outputs.  On an
    instrumented problem ``d(x_init, X)^2 <= Omega1`` is checked first.
    """
    x = _start(problem, x_init)
    if cfg.enforce and problem.instrumented and problem.dist_sq(x) > cfg.Omega1 * (1 + 1e-12):
        raise ConditionError("omega_initial",
                             f"d(x_init, X)^2 = {problem.dist_sq(x)} exceeds Omega1 = {cfg.Omega1}")
    rec = Recorder(problem, keep_iterates=keep_iterates, max_evals=max_evals)
    phases = []
    x = _ds_sg_run(rec, cfg, x, phases)
    return rec.report(x, phases=phases)


# -- doubling trick -----------------------------------------------------------

def default_c1(G: float, theta: float, Omega_C: float) -> float:
    """Initial over-estimate of ``c``: ``G/2`` for ``theta = 1``, else ``G Omega_C^(1/2 - 1/(2 theta))``."""
    if theta == 1:
        return G / 2.0
    return G * Omega_C ** (0.5 - 0.5 / theta)


STOPPING = ("max_outer_loops", "objective_gap", "external")


@dataclass(frozen=True)
class Ds2SgConfig:
    """Parameters of the doubling-trick staircase for unknown ``c``.

    ``stopping`` selects the rule ending the outer loop:

    * ``"max_outer_loops"``: stop after ``max_outer_loops`` loops;
    * ``"objective_gap"``: stop once ``c_l^-theta (h(x_l) - h_lb)^theta < sqrt(eps)``;
    * ``"external"``: stop when ``callback(l, x_l, h(x_l))`` returns true.

    ``max_outer_loops`` also caps the other two rules.
    """

    c1: float
    Omega_C: float
    beta: float
    M: int
    G: float
    theta: float
    eps: Optional[float] = None
    stopping: str = "max_outer_loops"
    max_outer_loops: int = 10
    h_lb: Optional[float] = None
    callback: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        self.validate()

    @classmethod
    def for_target(cls, G: float, theta: float, Omega_C: float, eps: float, beta: float,
                   c1: Optional[float] = None, **kwargs) -> "Ds2SgConfig":
        if Omega_C is None or not math.isfinite(Omega_C):
            raise ConditionError("bounded_set", "the doubling trick needs a bounded set (finite Omega_C)")
        c1 = default_c1(G, theta, Omega_C) if c1 is None else c1
        return cls(c1, Omega_C, beta, stairs_needed(Omega_C, eps, beta), G, theta, eps, **kwargs)

    def validate(self):
        if self.Omega_C is None or not (self.Omega_C > 0 and math.isfinite(self.Omega_C)):
            raise ConditionError("bounded_set", "the doubling trick needs a bounded set (finite Omega_C)")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if not self.beta > 1:
            raise ValueError("beta must exceed 1")
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if not 0.5 <= self.theta <= 1:
            raise ValueError("the doubling trick needs 1/2 <= theta <= 1")
        heb1 = HebParams(self.c1, self.theta, self.G)
        if self.theta == 1:
            if heb1.kappa < 2:
                raise ConditionError("kappa1_ge_2", f"theta = 1 needs G/c1 >= 2, got {heb1.kappa}")
        else:
            lb = dssg_beta_lower_bound(heb1, self.Omega_C)
            if self.beta < lb:
                raise ConditionError("beta_lower_bound", f"beta={self.beta} is below the admissible {lb}")
        if self.eps is not None and self.M < stairs_needed(self.Omega_C, self.eps, self.beta):
            raise ConditionError("stairs_count", f"M={self.M} is too small for eps={self.eps}")
        if self.stopping not in STOPPING:
            raise ValueError(f"stopping must be one of {STOPPING}")
        if self.stopping == "objective_gap" and (self.h_lb is None or self.eps is None):
            raise ValueError("objective_gap stopping needs h_lb and eps")
        if self.stopping == "external" and self.callback is None:
            raise ValueError("external stopping needs a callback")
        if self.max_outer_loops < 1:
            raise ValueError("max_outer_loops must be positive")

    def c_at(self, l: int) -> float:
        return self.c1 * 2.0 ** (-(l - 1))

    def stage_config(self, l: int) -> DsSgConfig:
        return DsSgConfig(self.beta, self.M, self.Omega_C, HebParams(self.c_at(l), self.theta, self.G))

    def loops_needed(self, true_c: float) -> int:
        """``max(0, ceil(log2(c1/c))) + 1``: loops after which the guarantee holds."""
        return max(0, guarded_ceil(math.log2(self.c1 / true_c))) + 1

    def _should_stop(self, l: int, x, obj: float) -> bool:
        if l >= self.max_outer_loops:
            return True
        if self.stopping == "objective_gap":
            gap = max(obj - self.h_lb, 0.0)
            return self.c_at(l) ** (-self.theta) * gap ** self.theta < math.sqrt(self.eps)
        if self.stopping == "external":
            return bool(self.callback(l, x, obj))
        return False


def ds2_sg(problem: ProblemInstance, cfg: Ds2SgConfig, x_init, *,
           max_evals: Optional[int] = None, keep_iterates: bool = False) -> SolverReport:
    """Doubling-trick descending stairs: rerun DS-SG with ``c`` halved each outer loop.

    Each loop starts from the previous loop's output.  ``report.extra`` holds
    ``loop_outputs`` (one ``(l, c_l, x_l, h(x_l))`` tuple per completed loop),
    the best loop output ``best_output`` and its objective ``best_output_obj``
    (nonincreasing over loops), and the per-loop best values ``best_by_loop``.
    """
    x = _start(problem, x_init)
    rec = Recorder(problem, keep_iterates=keep_iterates, max_evals=max_evals)
    phases, outputs, best_by_loop = [], [], []
    best_x, best_obj = None, math.inf
    l = 1
    while True:
        x = _ds_sg_run(rec, cfg.stage_config(l), x, phases, outer=l)
        obj = rec.objective(x)
        outputs.append((l, cfg.c_at(l), x.copy(), obj))
        if obj < best_obj:
            best_x, best_obj = x.copy(), obj
        best_by_loop.append(best_obj)
        if rec.exhausted or cfg._should_stop(l, x, obj):
            break
        l += 1
    return rec.report(x, phases=phases, extra={
        "loop_outputs": outputs,
        "best_output": best_x,
        "best_output_obj": best_obj,
        "best_by_loop": best_by_loop,
    })


# -- generic schedules and extensions ----------------------------------------

def generic_sg(problem: ProblemInstance, schedule: StepsizeSchedule, K: int, x1, *,
               max_evals: Optional[int] = None, keep_iterates: bool = False,
               normalize: bool = False) -> SolverReport:
    """``K`` steps ``x_{k+1} = P_C(x_k - alpha_k g_k)`` with ``alpha_k = schedule(k)``.

    Stops early, with ``extra["stop_reason"]`` set, if the stepsize underflows to 0.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    rec = Recorder(problem, keep_iterates=keep_iterates, max_evals=max_evals)
    x = _start(problem, x1)
    extra = {}
    for k in range(1, K + 1):
        if rec.exhausted:
            break
        alpha = schedule(k)
        if alpha == 0.0:
            # geometric schedules underflow; no later step can move x
            extra["stop_reason"] = "stepsize underflow"
            break
        x = rec.step(x, alpha, normalize=normalize)
    return rec.report(x, extra=extra)


def sum_problem(parts: Sequence[ProblemInstance]) -> ProblemInstance:
    """``h = sum_i h_i`` as one problem sharing the first part's projection."""
    parts = list(parts)

    def oracle(x):
        total, g = 0.0, np.zeros(parts[0].dim)
        for p in parts:
            v, gi = evaluate(p, x)
            total += v
            g = g + gi
        return total, g

    G = sum(p.G for p in parts) if all(p.G is not None for p in parts) else None
    return ProblemInstance(dim=parts[0].dim, oracle=oracle, project=parts[0].project,
                           G=G, diameter_sq=parts[0].diameter_sq, name="sum")


def incremental_sg(parts: Sequence[ProblemInstance], schedule: StepsizeSchedule, K: int, x1, *,
                   full: Optional[ProblemInstance] = None,
                   max_evals: Optional[int] = None) -> SolverReport:
    """Incremental method for ``h = sum_i h_i``: each outer step sweeps the parts in order.

    ``psi_0 = x_k``, ``psi_i = P_C(psi_{i-1} - alpha_k g_i)`` with ``g_i`` a
    subgradient of ``h_i`` at ``psi_{i-1}``, and ``x_{k+1} = psi_m``.  The
    trace records the outer iterates, with ``h(x_k)`` and instrumentation taken
    from ``full`` (defaults to the sum of the parts) and ``gnorm`` the norm of
    the summed part subgradients.  One sweep counts as one evaluation (one
    pass over the data).  The distance recursion holds with ``G`` replaced by
    ``m G`` where ``G`` bounds every part's subgradients.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    if K < 1:
        raise ValueError("K must be a positive integer")
    full = sum_problem(parts) if full is None else full
    project = parts[0].project
    rec = Recorder(full, max_evals=max_evals)
    x = _start(full, x1)
    for k in range(1, K + 1):
        if rec.exhausted:
            break
        alpha = schedule(k)
        psi = x
        gsum = np.zeros_like(x)
        for p in parts:
            _, g = evaluate(p, psi)
            gsum += g
            psi = project(psi - alpha * g)
        rec.record(x, alpha, rec.objective(x), float(np.linalg.norm(gsum)))
        x = psi
    return rec.report(x)


def noisy_oracle(problem: ProblemInstance, R: float, noise_source=0) -> ProblemInstance:
    """Wrap ``problem`` so each subgradient is perturbed by a vector of norm exactly ``R``.

    Directions are uniform on the sphere, drawn from ``noise_source`` (a seed or
    a ``numpy.random.Generator``).  The generator is consumed by each call, so
    one wrapped instance should serve one run.  For ``theta = 1`` and ``R < c``
    the wrapped problem declares ``c - R`` and ``sqrt(2 (G^2 + R^2))``; with
    ``R >= c`` the guarantees are void, a warning is issued and no error bound
    is declared.
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    if R == 0:
        return problem
    rng = noise_source if isinstance(noise_source, np.random.Generator) else np.random.default_rng(noise_source)
    base = problem.oracle

    def oracle(x):
        value, g = base(x)
        u = rng.standard_normal(problem.dim)
        return value, np.asarray(g, dtype=float) + (R / np.linalg.norm(u)) * u

    heb = problem.heb
    if heb is not None:
        if heb.theta != 1:
            warnings.warn("noise resilience is only established for theta = 1", stacklevel=2)
            heb = None
        elif R >= heb.c:
            warnings.warn(f"noise level R={R} >= c={heb.c}: convergence guarantees are void", stacklevel=2)
            heb = None
        else:
            heb = HebParams(heb.c - R, 1.0, math.sqrt(2.0 * (heb.G ** 2 + R ** 2)))
    import dataclasses

    G = heb.G if heb is not None else (problem.G + R if problem.G is not None else None)
    return dataclasses.replace(problem, oracle=oracle, heb=heb, G=G, name=f"{problem.name}+noise({R:g})")


def normalized_sg(problem: ProblemInstance, mu_h: float, schedule: StepsizeSchedule, K: int, x1, *,
                  max_evals: Optional[int] = None) -> SolverReport:
    """Normalized steps ``P_C(x_k - alpha_k g_k / ||g_k||)`` under Goffin's condition number ``mu_h``.

    The distance recursion holds with ``c = mu_h``, ``G = 1``, ``theta = 1``;
    ``report.extra["recursion_heb"]`` carries those constants.  A zero
    subgradient is only accepted at a point known to be optimal.
    """
    if not 0 < mu_h <= 1:
        raise ValueError(f"mu_h must lie in (0, 1], got {mu_h}")
    report = generic_sg(problem, schedule, K, x1, max_evals=max_evals, normalize=True)
    report.extra["recursion_heb"] = HebParams(mu_h, 1.0, 1.0)
    return report
