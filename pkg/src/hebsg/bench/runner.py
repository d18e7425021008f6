"""Run an :class:`~hebsg.bench.config.ExperimentConfig` and write its outputs."""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hebsg import analysis, baselines, schedules, solvers
from hebsg.bench.config import REQUIRED, ConfigError, ExperimentConfig
from hebsg.bench.datasets import load_libsvm
from hebsg.bench.plots import emit_plot
from hebsg.bench.reference import fingerprint, reference_optimum
from hebsg.bench.traces import write_trace_csv
from hebsg.core import HebParams, ProblemInstance, SolverReport
from hebsg import problems as P


@dataclass
class BuiltProblem:
    instance: ProblemInstance
    theta: float
    key: str


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    problem: ProblemInstance
    x1: np.ndarray
    h_ref: Optional[float]
    reports: dict
    summary: list
    files: list = field(default_factory=list)


def _lad_G(lad, choice: str) -> float:
    if choice == "certified":
        return lad.G_certified
    if choice == "columns":
        return lad.G
    if choice == "rows":
        return float(np.linalg.norm(lad.E, axis=1).sum())
    try:
        return float(choice)
    except ValueError:
        raise ConfigError(f"[problem].G: expected certified|columns|rows or a number, got {choice!r}") from None


def build_problem(cfg: ExperimentConfig) -> BuiltProblem:
    p, kind, seed = cfg.problem, cfg.problem_kind, cfg.seed
    if kind in ("lad", "libsvm_lad"):
        if kind == "lad":
            lad = P.make_random_lad(p.int("m", REQUIRED), p.int("n", REQUIRED), p.float("tau", REQUIRED), seed)
        else:
            E, b = _load(p)
            lad = P.LadProblem(E, b, p.float("tau", REQUIRED))
        inst = lad.instance(name=cfg.name)
        inst = _with_G(inst, _lad_G(lad, p.str("G", "columns")))
        return BuiltProblem(inst, 1.0, fingerprint(lad.E, lad.b, kind="lad", tau=lad.tau, G=inst.G))
    if kind in ("svm", "libsvm_svm"):
        if kind == "svm":
            svm = P.make_random_svm(p.int("m", REQUIRED), p.int("n", REQUIRED), p.float("tau", REQUIRED), seed)
        else:
            C, y = _load(p, grouping=p.str("label_grouping", "pm1"))
            svm = P.SvmProblem(C, y, p.float("tau", REQUIRED))
        inst = svm.instance(name=cfg.name)
        if p.has("G"):
            inst = _with_G(inst, p.float("G"))
        return BuiltProblem(inst, 1.0, fingerprint(svm.C, svm.y, kind="svm", tau=svm.tau, G=inst.G))
    if kind == "consistent_lad":
        _, inst = P.make_consistent_lad(p.int("m", REQUIRED), p.int("n", REQUIRED), p.float("tau", REQUIRED), seed)
        return BuiltProblem(inst, 1.0, "")
    if kind == "power":
        pg = P.PowerGrowthProblem(p.float("c", REQUIRED), p.float("theta", REQUIRED), p.int("dim", REQUIRED),
                                  p.float("radius", 1.0), p.str("constraint", "ball"))
        return BuiltProblem(pg.instance(), pg.theta, "")
    if kind == "l1norm":
        inst = P.make_l1_norm_problem(p.int("dim", REQUIRED), p.float("radius", 1.0), p.str("constraint", "box"))
        return BuiltProblem(inst, 1.0, "")
    raise ConfigError(f"[problem].kind: unsupported {kind!r}")


def _load(p, grouping=None):
    try:
        return load_libsvm(p.str("dataset", REQUIRED), m_limit=p.int("m_limit", None), label_grouping=grouping)
    except OSError as exc:
        raise ConfigError(f"[problem].dataset: cannot read {exc.filename}: {exc.strerror} "
                          f"(relative paths resolve against $HEBSG_DATA)") from None


def _with_G(inst: ProblemInstance, G: float) -> ProblemInstance:
    import dataclasses

    return dataclasses.replace(inst, G=G)


def initial_point(cfg: ExperimentConfig, inst: ProblemInstance) -> np.ndarray:
    spec = cfg.x_init.strip()
    n = inst.dim
    if spec == "zero":
        x = np.zeros(n)
    elif spec == "corner":
        x = inst.project(np.full(n, 1e6))
    elif spec == "e1":
        e = np.zeros(n)
        e[0] = 1e6
        x = inst.project(e)
    else:
        try:
            x = np.array([float(v) for v in spec.split(",")])
        except ValueError:
            raise ConfigError(f"[experiment].x_init: expected zero|corner|e1 or a comma list, got {spec!r}") from None
        if x.size != n:
            raise ConfigError(f"[experiment].x_init: has {x.size} entries, problem dimension is {n}")
    return x


def _heb(entry, built: BuiltProblem, c_key="c") -> HebParams:
    prm = entry.params
    G = prm.float("G", built.instance.G)
    theta = prm.float("theta", built.theta)
    try:
        return HebParams(prm.float(c_key, REQUIRED), theta, G)
    except ValueError as exc:
        raise ConfigError(f"{prm.where}: {exc}") from None


def run_entry(entry, built: BuiltProblem, x1, budget: int) -> SolverReport:
    """Construct and run one configured solver."""
    inst, prm, m = built.instance, entry.params, entry.method
    omega = prm.float("Omega", inst.diameter_sq)
    K = prm.int("K", budget)
    try:
        if m == "fixed":
            return solvers.fixed_sg(inst, min(K, budget), prm.float("alpha", REQUIRED), x1)
        if m == "generic":
            return solvers.generic_sg(inst, _schedule(entry, built, omega), min(K, budget), x1, max_evals=budget)
        if m == "shor":
            sched = schedules.shor_geometric(_heb(entry, built), prm.float("d1_bound", omega))
            return solvers.generic_sg(inst, sched, min(K, budget), x1, max_evals=budget)
        if m == "ds_sg":
            heb = _heb(entry, built)
            beta = prm.float("beta", 4.0)
            enforce = prm.bool("enforce", True)
            eps = prm.float("eps", 1e-5)
            stairs = prm.str("stairs", "eps")
            if stairs == "eps":
                cfg = solvers.DsSgConfig.for_target(heb, omega, eps, beta, enforce=enforce)
                if prm.has("M"):
                    cfg = solvers.DsSgConfig(beta, prm.int("M"), omega, heb, eps, enforce)
            elif stairs == "budget":
                probe = solvers.DsSgConfig(beta, 1, omega, heb, None, enforce)
                cfg = solvers.DsSgConfig(beta, stairs_to_fill(probe, budget), omega, heb, None, enforce)
            else:
                raise ConfigError(f"{prm.where}.stairs: expected eps|budget, got {stairs!r}")
            return solvers.ds_sg(inst, cfg, x1, max_evals=budget)
        if m == "ds2_sg":
            G = prm.float("G", inst.G)
            theta = prm.float("theta", built.theta)
            c1 = prm.float("c1", None)
            stopping = prm.str("stopping", "max_outer_loops")
            cfg = solvers.Ds2SgConfig.for_target(
                G, theta, omega, prm.float("eps", 1e-5), prm.float("beta", 4.0), c1=c1,
                stopping=stopping, max_outer_loops=prm.int("max_outer_loops", 200),
                h_lb=prm.float("h_lb", None))
            return solvers.ds2_sg(inst, cfg, x1, max_evals=budget)
        if m == "rsg":
            heb = _heb(entry, built)
            eps0 = prm.float("eps0", inst.oracle(x1)[0])
            base = baselines.rsg_defaults(heb, prm.float("eps", 1e-5), eps0, prm.float("shrink", 2.0))
            cfg = baselines.RsgConfig(prm.int("t", base.t), prm.int("stages", base.stages),
                                      prm.float("eta1", base.eta1), base.shrink)
            return baselines.rsg(inst, cfg, x1, max_evals=budget)
        if m == "r2sg":
            G = prm.float("G", inst.G)
            eps0 = prm.float("eps0", inst.oracle(x1)[0])
            eps = prm.float("eps", 1e-5)
            stages = prm.int("stages", max(1, math.ceil(math.log2(eps0 / eps))))
            cfg = baselines.RsgConfig(prm.int("t1", 100), stages, prm.float("eta1", eps0 / (3 * G ** 2)),
                                      prm.float("shrink", 2.0))
            return baselines.r2sg(inst, cfg, prm.float("theta_hat", REQUIRED), x1,
                                  outer_loops=prm.int("outer_loops", 1000), growth=prm.float("growth", None),
                                  max_evals=budget)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{prm.where}: {exc}") from None
    raise ConfigError(f"{prm.where}.method: unsupported {m!r}")


def _schedule(entry, built: BuiltProblem, omega):
    prm = entry.params
    kind = prm.str("schedule", REQUIRED)
    if kind == "constant":
        return schedules.constant(prm.float("alpha", REQUIRED))
    if kind == "polynomial":
        return schedules.polynomial(prm.float("alpha1", REQUIRED), prm.float("p", REQUIRED))
    if kind == "fixed_eps_constant":
        return schedules.fixed_eps_constant(prm.float("eps", REQUIRED), _heb(entry, built))
    if kind == "optimal_polynomial":
        return schedules.optimal_polynomial(_heb(entry, built))[0]
    if kind == "harmonic_qg":
        return schedules.harmonic_qg(prm.float("alpha1", REQUIRED), _heb(entry, built))
    if kind == "karimi_qg":
        return schedules.karimi_qg(_heb(entry, built))
    if kind == "shor_geometric":
        return schedules.shor_geometric(_heb(entry, built), prm.float("d1_bound", omega))
    raise ConfigError(f"{prm.where}.schedule: unknown schedule {kind!r} (known: {', '.join(schedules.KINDS)})")


def stairs_to_fill(cfg: solvers.DsSgConfig, budget: int) -> int:
    """Smallest number of stairs whose total length reaches ``budget``."""
    total, m = 0, 0
    while total < budget:
        m += 1
        total += cfg.stair_length(m)
    return m


def slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label).strip("_") or "entry"


def _g(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


def summarize(label, method, rep: SolverReport, h_ref) -> dict:
    tr = rep.trace
    row = {
        "label": label,
        "method": method,
        "evals": rep.subgrad_evals,
        "final_obj": _g(tr.obj[-1]),
        "best_obj": _g(rep.best_obj),
        "final_gap": _g(max(tr.obj[-1] - h_ref, 0.0)) if h_ref is not None else "",
        "best_gap": _g(max(rep.best_obj - h_ref, 0.0)) if h_ref is not None else "",
        "final_dist_sq": _g(tr.dist_sq[-1]) if tr.dist_sq is not None else "",
        "slope": "",
    }
    try:
        if tr.dist_sq is not None:
            fit = analysis.fit_rate(tr, k_range=(1000, math.inf))
        elif h_ref is not None:
            fit = analysis.fit_rate(tr, k_range=(1000, math.inf), h_ref=h_ref, square_gap=True)
        else:
            fit = None
        if fit is not None:
            row["slope"] = _g(fit.slope)
    except ValueError:
        pass
    return row


SUMMARY_FIELDS = ("label", "method", "evals", "final_obj", "best_obj", "final_gap", "best_gap",
                  "final_dist_sq", "slope")


def run_experiment(cfg: ExperimentConfig, output_dir=None, use_cache: bool = True,
                   write: bool = True) -> ExperimentResult:
    """Run every entry of ``cfg`` from one shared starting point on one problem instance.

    Writes ``<label>.csv`` per entry, ``summary.csv`` and one SVG per requested
    plot into ``output_dir`` (default ``cfg.output_dir`` or ``out/<name>``).
    The ``slope`` column is the log-log slope of ``e_k`` (instrumented
    problems) or of the squared gap, fitted over ``k >= 1000``.
    """
    built = build_problem(cfg)
    inst = built.instance
    x1 = initial_point(cfg, inst)
    if np.linalg.norm(x1 - inst.project(x1)) > 1e-9 * (1 + np.linalg.norm(x1)):
        raise ConfigError("[experiment].x_init: starting point is not feasible")

    if cfg.reference == "none":
        h_ref = None
    elif cfg.reference == "auto":
        h_ref = reference_optimum(inst, x1, cfg.reference_budget, built.theta,
                                  key=built.key or None, use_cache=use_cache)
    else:
        h_ref = float(cfg.reference)

    reports, summary = {}, []
    for entry in cfg.entries:
        if entry.label in reports:
            raise ConfigError(f"[entry:{entry.label}]: duplicate label")
        rep = run_entry(entry, built, x1, cfg.budget)
        reports[entry.label] = rep
        summary.append(summarize(entry.label, entry.method, rep, h_ref))

    result = ExperimentResult(cfg, inst, x1, h_ref, reports, summary)
    if write:
        out = Path(output_dir or cfg.output_dir or Path("out") / cfg.name)
        out.mkdir(parents=True, exist_ok=True)
        for label, rep in reports.items():
            result.files.append(write_trace_csv(out / f"{slug(label)}.csv", rep.trace, h_ref, cfg.thin))
        spath = out / "summary.csv"
        with open(spath, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(summary)
        result.files.append(spath)
        traces = {label: rep.trace for label, rep in reports.items()}
        for y, x in cfg.plots:
            if y == "gap" and h_ref is None:
                continue
            if y == "dist_sq" and not inst.instrumented:
                continue
            try:
                result.files.append(emit_plot(traces, out / f"{slug(cfg.name)}_{y}_{x}.svg", y=y, x=x,
                                              h_ref=h_ref, best_so_far=cfg.best_so_far, title=cfg.name))
            except ValueError as exc:
                warnings.warn(f"skipped plot {y}:{x}: {exc}", stacklevel=2)
    return result
