"""``hebsg`` command line: ``run``, ``preset``, ``fit`` and ``bounds``."""

from __future__ import annotations

import argparse
import math
import sys

from hebsg import analysis, solvers
from hebsg.bench.config import ConfigError, load_config
from hebsg.bench.presets import PRESETS, get_preset, preset_text
from hebsg.bench.runner import build_problem, run_experiment
from hebsg.bench.traces import read_trace_csv
from hebsg.core import HebParams


def _print_summary(result, out=sys.stdout):
    print(f"# {result.config.name}: h_ref = {result.h_ref!r}", file=out)
    cols = ("label", "evals", "best_obj", "best_gap", "final_gap", "slope")
    print(",".join(cols), file=out)
    for row in result.summary:
        print(",".join(str(row[c]) for c in cols), file=out)
    for f in result.files:
        print(f"wrote {f}", file=out)


def cmd_run(args):
    cfg = load_config(args.config)
    if args.budget:
        cfg.budget = args.budget
    _print_summary(run_experiment(cfg, output_dir=args.out, use_cache=not args.no_cache))


def cmd_preset(args):
    if args.show:
        print(preset_text(args.name), end="")
        return
    cfg = get_preset(args.name)
    if args.budget:
        cfg.budget = args.budget
    _print_summary(run_experiment(cfg, output_dir=args.out or f"out/{args.name}", use_cache=not args.no_cache))


def cmd_fit(args):
    trace, gap = read_trace_csv(args.trace)
    k = trace.k[:-1] if math.isnan(trace.alpha[-1]) else trace.k
    n = len(k)
    if args.quantity == "dist_sq":
        if trace.dist_sq is None:
            raise ConfigError(f"{args.trace}: no dist_sq column values")
        y = trace.dist_sq[:n]
    else:
        if gap is None:
            raise ConfigError(f"{args.trace}: no gap column values")
        y = gap[:n] ** (2 if args.quantity == "gap_sq" else 1)
    lo = args.k_min if args.k_min is not None else k[n - max(1, int(args.tail * n))]
    hi = args.k_max if args.k_max is not None else math.inf
    mask = (k >= lo) & (k <= hi)
    fit = analysis.fit_power_law(k[mask], y[mask])
    print("quantity,k_min,k_max,slope,constant,points")
    print(f"{args.quantity},{lo},{hi},{fit.slope:.17g},{fit.constant:.17g},{fit.n_points}")


def cmd_bounds(args):
    cfg = load_config(args.config)
    built = build_problem(cfg)
    inst = built.instance
    true_c = cfg.true_c if cfg.true_c is not None else (inst.heb.c if inst.heb is not None else None)
    print("label,method,quantity,value")
    for e in cfg.entries:
        prm = e.params
        G = prm.float("G", inst.G)
        theta = prm.float("theta", built.theta)
        omega = prm.float("Omega", inst.diameter_sq)
        eps = prm.float("eps", 1e-5)
        beta = prm.float("beta", 4.0)
        try:
            if e.method == "ds_sg":
                heb = HebParams(prm.float("c"), theta, G)
                dcfg = solvers.DsSgConfig.for_target(heb, omega, eps, beta, enforce=False)
                print(f"{e.label},ds_sg,stairs,{dcfg.M}")
                print(f"{e.label},ds_sg,K1,{dcfg.stair_length(1)}")
                print(f"{e.label},ds_sg,eval_bound,{analysis.dssg_eval_bound(dcfg):.17g}")
            elif e.method == "ds2_sg":
                c2 = solvers.Ds2SgConfig.for_target(G, theta, omega, eps, beta, c1=prm.float("c1", None))
                print(f"{e.label},ds2_sg,c1,{c2.c1:.17g}")
                print(f"{e.label},ds2_sg,stairs_per_loop,{c2.M}")
                if true_c is not None:
                    print(f"{e.label},ds2_sg,loops_needed,{c2.loops_needed(true_c)}")
                    print(f"{e.label},ds2_sg,eval_bound,{analysis.ds2sg_eval_bound(c2, true_c):.17g}")
            elif e.method == "generic" and prm.str("schedule") == "optimal_polynomial":
                heb = HebParams(prm.float("c"), theta, G)
                b = analysis.optimal_decay_bound(heb, omega)
                print(f"{e.label},generic,rate_constant,{b.constants['C']:.17g}")
                print(f"{e.label},generic,rate_exponent,{b.exponent:.17g}")
                print(f"{e.label},generic,k_start,{b.k_start}")
            elif e.method == "generic" and prm.str("schedule") == "polynomial" and inst.heb is not None:
                dc = analysis.decay_constants(prm.float("alpha1"), prm.float("p"), inst.heb)
                for name in ("C1", "C2", "C3", "C4"):
                    v = getattr(dc, name)
                    if v is not None:
                        print(f"{e.label},generic,{name},{v:.17g}")
            elif e.method == "fixed" and inst.heb is not None:
                print(f"{e.label},fixed,e_star,{analysis.fixed_floor(prm.float('alpha'), inst.heb):.17g}")
            else:
                print(f"{e.label},{e.method},note,no closed-form bound for this entry")
        except ValueError as exc:
            print(f"{e.label},{e.method},error,\"{exc}\"")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hebsg", description="Subgradient methods under Hölder growth: benchmark harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--budget", type=int, help="override the evaluation budget")
    p.add_argument("--no-cache", action="store_true", help="recompute the reference optimum")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help=f"run a built-in experiment ({', '.join(PRESETS)})")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", help="output directory (default out/<name>)")
    p.add_argument("--budget", type=int)
    p.add_argument("--show", action="store_true", help="print the preset config instead of running it")
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("fit", help="fit a log-log rate to a trace CSV")
    p.add_argument("trace")
    p.add_argument("--quantity", choices=("dist_sq", "gap", "gap_sq"), default="dist_sq")
    p.add_argument("--tail", type=float, default=0.5, help="fraction of rows used when no k range is given")
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="print closed-form bounds for the entries of a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"hebsg: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
