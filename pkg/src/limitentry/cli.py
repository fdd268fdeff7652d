"""Command-line interface.

Machine output (JSON or CSV) goes to stdout, human summaries to stderr.
Exit codes: 0 ok, 2 invalid input, 3 numeric failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .appendix import run_appendix
from .config import NumericConfig
from .distributions import classify, make_distribution
from .equilibrium import (
    fixed_point_iteration,
    limited_entry_report,
    verify_symmetric_equilibrium,
)
from .errors import InvalidParameter, MarketError, VerificationFailure
from .montecarlo import empirical_revenue_curve, simulate_market
from .policy import MarketInstance, apply_cost, compare_policies, sweep, sweep_csv
from .star import symmetric_star

log = logging.getLogger("limitentry")

CONFIG_FLAGS = {
    "quad_abs_tol": float, "quad_rel_tol": float, "grid_points": int, "eq_tolerance": float,
    "rev_tolerance": float, "fp_tolerance": float, "max_iterations": int, "consistency_band": float,
    "mc_samples": int, "seed": int, "truncation_quantile": float,
}


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n")


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _summary(msg: str) -> None:
    print(msg, file=sys.stderr)


def _config(args) -> NumericConfig:
    base = NumericConfig.from_file(args.config) if args.config else NumericConfig.from_env()
    return base.with_overrides(**{k: getattr(args, k) for k in CONFIG_FLAGS})


def _g12(x) -> str:
    return f"{x:.12g}"


# --- subcommands ---------------------------------------------------------------


def cmd_classify(args, cfg):
    d = make_distribution(args.spec)
    c = classify(d, cfg)
    out = {"distribution": d.spec, **c.to_dict()}
    _emit_json(out)
    _summary(", ".join(f"{k}: {'pass' if v['passed'] else 'fail'}" for k, v in c.to_dict().items()
                       if isinstance(v, dict)))
    return 0


def cmd_equilibrium(args, cfg):
    d = make_distribution(args.spec)
    m = MarketInstance.symmetric(d, args.n, args.cost)
    if args.setting == "limited-entry":
        rep = limited_entry_report(d, args.n)
    else:
        rep = verify_symmetric_equilibrium(d, args.n, cfg)
    rep = apply_cost(m, rep)
    sys.stdout.write(rep.to_json() + "\n")
    price = rep.candidate_prices[0] if rep.candidate_prices else float("nan")
    _summary(f"{rep.setting}: {rep.verdict} at price {price:.10g}")
    return 3 if rep.verdict == "inconclusive" else 0


def cmd_compare(args, cfg):
    d = make_distribution(args.spec)
    base = make_distribution(args.base_value) if args.base_value else None
    comp = compare_policies(MarketInstance.symmetric(d, args.n, args.cost, base), cfg)
    sys.stdout.write(comp.to_json() + "\n")
    better = "limited entry" if comp.utility_difference >= 0 else "free market"
    _summary(f"{better} better by {abs(comp.utility_difference):.10g}; "
             f"condition {'satisfied' if comp.condition_satisfied else 'violated'}")
    return 0


def cmd_star(args, cfg):
    d = make_distribution(args.spec)
    if args.steps < 1:
        raise InvalidParameter("steps must be >= 1")
    s = symmetric_star(d, args.n, args.p, cfg)
    q = np.linspace(args.q_lo, args.q_hi, args.steps)
    c = s.curve(q)
    sys.stdout.write("q,survival,pdf,pdf_prime,hazard,virtual\n")
    for row in c.rows():
        sys.stdout.write(",".join(_g12(x) for x in row) + "\n")
    return 0


def cmd_asym(args, cfg):
    marginals = [make_distribution(s) for s in args.specs]
    prices, trace = fixed_point_iteration(marginals, cfg)
    if args.trace_csv:
        Path(args.trace_csv).write_text(trace.to_csv())
    if args.csv:
        sys.stdout.write(trace.to_csv())
    else:
        _emit_json({
            "distributions": [d.spec for d in marginals], "prices": prices.tolist(), "T": trace.T,
            "converged": trace.converged, "iterations": trace.iterations, "label": trace.label,
            "verified": trace.verified, "mutual_gap": trace.mutual_gap,
        })
    _summary(f"prices {', '.join(f'{p:.10g}' for p in prices)} after {trace.iterations} iterations "
             f"({trace.label})")
    return 0


def cmd_simulate(args, cfg):
    specs = args.specs
    if len(specs) == 1:
        specs = specs * args.n
    if len(specs) != args.n:
        raise InvalidParameter(f"give one spec or exactly n={args.n} specs")
    marginals = tuple(make_distribution(s) for s in specs)
    base = make_distribution(args.base_value) if args.base_value else None
    m = MarketInstance(marginals, args.n, 0.0, base)
    prices = args.prices if args.prices is not None else [0.0] * args.n
    if args.revenue_curve is not None:
        i = args.revenue_curve
        lo, hi, steps = args.q_grid
        curve = empirical_revenue_curve(marginals, i, [p for j, p in enumerate(prices) if j != i],
                                        np.linspace(lo, hi, int(steps)), cfg.mc_samples, cfg.seed, args.workers)
        sys.stdout.write(curve.to_csv())
        _summary(f"empirical best response of provider {i}: {curve.argmax:.10g}")
        return 0
    res = simulate_market(m, prices, args.active, cfg.mc_samples, cfg.seed, cfg, args.workers)
    sys.stdout.write(res.to_json() + "\n")
    _summary(f"shares {', '.join(f'{s:.6f}' for s in res.shares)}; utility {res.utility:.6f}")
    return 0


def cmd_verify_appendix(args, cfg):
    samples = args.n_samples if args.n_samples is not None else cfg.mc_samples
    rep = run_appendix(cfg, args.tolerance_scale, samples)
    sys.stdout.write(rep.to_json() + "\n")
    _summary(rep.table())
    for w in rep.to_dict()["warnings"]:
        log.warning("%s", w)
    if not rep.passed:
        raise VerificationFailure("at least one oracle-backed check failed")
    return 0


def cmd_sweep(args, cfg):
    rows = sweep(args.specs, args.ns, args.costs, cfg, args.workers)
    sys.stdout.write(sweep_csv(rows))
    bad = sum(1 for r in rows if r.get("consistent") is False)
    _summary(f"{len(rows)} cells, {bad} inconsistent")
    return 0


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of numeric settings (flags win)")
    for name, typ in CONFIG_FLAGS.items():
        flags = ["--" + name.replace("_", "-")]
        if name == "mc_samples":
            flags.append("--N")
        common.add_argument(*flags, dest=name, type=typ, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="limitentry", description="Free Market vs Limited Entry analysis")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="shape-class verdicts for a distribution")
    s.add_argument("spec")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("equilibrium", parents=[common], help="symmetric equilibrium report")
    s.add_argument("spec")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--cost", type=float, default=0.0)
    s.add_argument("--setting", choices=["free-market", "limited-entry"], default="free-market")
    s.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("compare", parents=[common], help="consumer utility under both settings")
    s.add_argument("spec")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--cost", type=float, default=0.0)
    s.add_argument("--base-value", help="distribution spec of the common base value")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("star", parents=[common], help="CSV of the starred law against equal peer prices")
    s.add_argument("spec")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--q-lo", type=float, required=True)
    s.add_argument("--q-hi", type=float, required=True)
    s.add_argument("--steps", type=int, default=101)
    s.set_defaults(func=cmd_star)

    s = sub.add_parser("asym", parents=[common], help="best-response iteration for distinct marginals")
    s.add_argument("specs", nargs="+")
    s.add_argument("--csv", action="store_true", help="write the iterate trace as CSV to stdout")
    s.add_argument("--trace-csv", help="also write the trace CSV to this file")
    s.set_defaults(func=cmd_asym)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo market simulation")
    s.add_argument("specs", nargs="+")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--prices", type=float, nargs="+")
    s.add_argument("--active", type=int, nargs="+", help="0-based indices of entered providers")
    s.add_argument("--base-value")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--revenue-curve", type=int, metavar="I",
                   help="emit the empirical revenue curve of provider I instead")
    s.add_argument("--q-grid", type=float, nargs=3, metavar=("LO", "HI", "STEPS"), default=(0.0, 5.0, 501))
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-appendix", parents=[common], help="run the counterexample battery")
    s.add_argument("--n-samples", type=int, help="Monte Carlo sample size for the battery")
    s.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every assertion tolerance (0 forces failure)")
    s.set_defaults(func=cmd_verify_appendix)

    s = sub.add_parser("sweep", parents=[common], help="policy comparison over specs × n × cost")
    s.add_argument("--specs", nargs="+", required=True)
    s.add_argument("--ns", type=int, nargs="+", required=True)
    s.add_argument("--costs", type=float, nargs="+", default=[0.0])
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except MarketError as exc:
        _summary(f"error: {exc}")
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        _summary(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
