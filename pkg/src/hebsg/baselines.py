"""Restarted averaged subgradient baselines (RSG and its adaptive variant R2SG).

Shor's geometric stepsize is available as :func:`hebsg.schedules.shor_geometric`
and runs through :func:`hebsg.solvers.generic_sg`.

The stage length and stepsize defaults below follow the usual RSG recipe
(``t = 9 G^2 / (c^(2 theta) eps^(2(1-theta)))``, ``eta_1 = eps_0 / (3 G^2)``,
halving).  They are benchmark defaults, not verified guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hebsg.core import HebParams, PhaseEntry, ProblemInstance, Recorder, SolverReport, guarded_ceil
from hebsg.solvers import _start


@dataclass(frozen=True)
class RsgConfig:
    t: int
    stages: int
    eta1: float
    shrink: float = 2.0
    averaging: bool = True

    def __post_init__(self):
        if self.t < 1 or self.stages < 1:
            raise ValueError("t and stages must be positive integers")
        if not self.eta1 > 0:
            raise ValueError("eta1 must be positive")
        if self.shrink < 1 or (self.stages > 1 and self.shrink == 1):
            raise ValueError("shrink must exceed 1 so that stage stepsizes strictly decrease")

    def stage_eta(self, s: int) -> float:
        return self.eta1 / self.shrink ** (s - 1)


def rsg_defaults(heb: HebParams, eps: float, eps0: float, shrink: float = 2.0) -> RsgConfig:
    """Stage length, stage count and first stepsize from ``(c, theta, G)`` and ``eps0 >= h(x1) - h*``."""
    if not 0 < eps < eps0:
        raise ValueError("need 0 < eps < eps0")
    t = guarded_ceil(9.0 * heb.c ** (-2 * heb.theta) * heb.G ** 2 * eps ** (-2 * (1 - heb.theta)))
    stages = max(1, guarded_ceil(math.log2(eps0 / eps)))
    return RsgConfig(t=max(1, t), stages=stages, eta1=eps0 / (3.0 * heb.G ** 2), shrink=shrink)


def _rsg_run(rec: Recorder, cfg: RsgConfig, x, phases: list, outputs: list, outer: int = 1):
    for s in range(1, cfg.stages + 1):
        if rec.exhausted:
            break
        eta = cfg.stage_eta(s)
        start = rec.evals
        total = np.zeros_like(x)
        n = 0
        for _ in range(cfg.t):
            if rec.exhausted:
                break
            total += x
            n += 1
            x = rec.step(x, eta)
        if cfg.averaging and n:
            x = total / n
        obj = rec.objective(x)
        outputs.append({"outer": outer, "stage": s, "evals": rec.evals, "x": x.copy(), "obj": obj})
        phases.append(PhaseEntry(outer=outer, stage=s, K=n, alpha=eta, c=None,
                                 start_evals=start, end_evals=rec.evals, end_obj=obj,
                                 end_dist_sq=rec.problem.dist_sq(x) if rec.problem.instrumented else None))
    return x


def rsg(problem: ProblemInstance, cfg: RsgConfig, x1, *, max_evals: Optional[int] = None,
        keep_iterates: bool = False) -> SolverReport:
    """Restarted subgradient method.

    Each stage runs ``t`` constant-stepsize steps from the previous stage's
    output and returns the mean of the ``t`` points at which subgradients were
    taken.  The trace holds the raw iterates; ``report.extra["stage_outputs"]``
    holds the averaged points and their objective values.
    """
    rec = Recorder(problem, keep_iterates=keep_iterates, max_evals=max_evals)
    phases, outputs = [], []
    x = _rsg_run(rec, cfg, _start(problem, x1), phases, outputs)
    return rec.report(x, phases=phases, extra={"stage_outputs": outputs})


def r2sg(problem: ProblemInstance, cfg: RsgConfig, theta_hat: float, x1, *,
         outer_loops: int = 20, growth: Optional[float] = None,
         max_evals: Optional[int] = None, keep_iterates: bool = False) -> SolverReport:
    """RSG restarted with stage lengths ``ceil(t * growth^(l-1))`` and the same ``eta1``.

    ``growth`` defaults to ``2^(2(1 - theta_hat))``.  Stops after
    ``outer_loops`` calls or when ``max_evals`` is reached.
    """
    if not theta_hat < 1:
        raise ValueError("R2SG needs theta_hat < 1")
    if not theta_hat > 0:
        raise ValueError("theta_hat must be positive")
    growth = 2.0 ** (2.0 * (1.0 - theta_hat)) if growth is None else growth
    if not growth >= 1:
        raise ValueError("growth must be at least 1")
    rec = Recorder(problem, keep_iterates=keep_iterates, max_evals=max_evals)
    phases, outputs, budgets = [], [], []
    x = _start(problem, x1)
    for l in range(1, outer_loops + 1):
        if rec.exhausted:
            break
        t_l = r2sg_budget(cfg.t, growth, l)
        budgets.append(t_l)
        stage_cfg = RsgConfig(t=t_l, stages=cfg.stages, eta1=cfg.eta1, shrink=cfg.shrink,
                              averaging=cfg.averaging)
        x = _rsg_run(rec, stage_cfg, x, phases, outputs, outer=l)
    return rec.report(x, phases=phases, extra={"stage_outputs": outputs, "inner_budgets": budgets,
                                                "growth": growth})


def r2sg_budget(t1: int, growth: float, l: int) -> int:
    return guarded_ceil(t1 * growth ** (l - 1))
