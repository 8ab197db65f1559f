"""Command-line entry points.

Subcommands:
  estimate    one method from a spec file, JSON summary to stdout
  experiment  full replicated comparison, rows CSV (+ aggregate CSV)
  scan        equal-budget stage-count scan, same CSV schemas
  oracle      closed-form predictions as JSON
  validate    fast structural self-checks
  drag-demo   the discrete dragging toy: acceptance, TV distance, slow costs
"""

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import harness, oracles
from .errors import ConfigError, ZRatioError


def _load_spec(args):
    spec = harness.load_config(args.spec)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "full", False):
        overrides["replications"] = 2000
    elif getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    return spec.validate()


def _aggregate_path(out_path):
    stem, dot, ext = out_path.rpartition(".")
    if not dot:
        return out_path + "_aggregate.csv"
    return f"{stem}_aggregate.{ext}"


def cmd_estimate(args):
    spec = _load_spec(args)
    if len(spec.methods) != 1:
        raise ConfigError("estimate wants a spec with exactly one method")
    row = harness.run_replication(spec, 0, 0)
    payload = dataclasses.asdict(row)
    payload["true_log_r"] = harness.build_family(spec).true_log_r()
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_experiment(args):
    spec = _load_spec(args)
    started = time.time()
    rows = harness.run_experiment(spec, threads=args.threads)
    harness.write_rows(args.out, rows)
    aggregate = harness.aggregate_rows(rows)
    agg_path = _aggregate_path(args.out)
    harness.write_aggregate(agg_path, aggregate)
    print(f"{len(rows)} rows -> {args.out}; {len(aggregate)} aggregates -> "
          f"{agg_path} ({time.time() - started:.1f}s)")
    return 0


def cmd_scan(args):
    spec = _load_spec(args)
    n_values = None
    if args.n_values:
        n_values = tuple(int(tok) for tok in args.n_values.split(","))
    rows = harness.equal_budget_scan(spec, n_values, threads=args.threads)
    harness.write_rows(args.out, rows)
    aggregate = harness.aggregate_rows(rows)
    agg_path = _aggregate_path(args.out)
    harness.write_aggregate(agg_path, aggregate)
    print(f"{len(rows)} rows -> {args.out}; aggregates -> {agg_path}")
    return 0


def cmd_oracle(args):
    preds = []
    if args.family == "nested":
        if args.s is None:
            raise ConfigError("nested oracle needs --s")
        preds.append(oracles.AnalyticPrediction(
            "OptimalN", float(oracles.nested_optimal_n(args.s)),
            "fixed update budget, independence-style transitions"))
        preds.append(oracles.AnalyticPrediction(
            "ZeroProbAIS", oracles.ais_nested_zero_prob(args.s),
            "independent of the stage count"))
        if args.n is not None and args.m is not None:
            preds.append(oracles.AnalyticPrediction(
                "LogVarLIS", oracles.nested_lis_logvar(args.n, args.m, args.s),
                "large m, independence kernel, all-miss probability negligible"))
    elif args.family == "nonnested":
        if args.t is None or args.n is None:
            raise ConfigError("nonnested oracle needs --t and --n")
        preds.append(oracles.AnalyticPrediction(
            "MeanAIS", oracles.ais_nonnested_mean(args.n, args.t),
            "independence transitions; true ratio is 1"))
        if args.m is not None:
            preds.append(oracles.AnalyticPrediction(
                "LogVarLIS",
                oracles.nonnested_lis_logvar(args.n, args.m, args.t),
                "large m, independence kernel, n > t/2"))
    else:
        raise ConfigError(f"unknown oracle family: {args.family!r}")
    print(json.dumps([dataclasses.asdict(p) for p in preds], indent=2))
    return 0


def cmd_validate(args):
    from .validation import run_all
    results = run_all(args.seed)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
        failed += 0 if ok else 1
    return 1 if failed else 0


def cmd_drag_demo(args):
    from .dragging import (drag_transition_matrix, linked_drag_update,
                           toy_drag_model, toy_joint_probs)
    n_slow = 4
    model = toy_drag_model()
    joint = toy_joint_probs(model, n_slow)
    target = joint.flatten(order="F")
    kernel = drag_transition_matrix(model, n_slow)
    invariance_gap = float(np.abs(target @ kernel - target).max())

    rng = np.random.default_rng(args.seed)
    state = (model.n_fast // 2, 0)
    counts = np.zeros_like(joint)
    accepted = 0
    for _ in range(args.updates):
        state, ok, _ = linked_drag_update(model, state, rng)
        counts[state] += 1
        accepted += ok
    tv = 0.5 * float(np.abs(counts.flatten(order="F") / args.updates
                            - target).sum())
    print(json.dumps({
        "updates": args.updates,
        "acceptance_rate": accepted / args.updates,
        "tv_distance_to_exact": tv,
        "exact_invariance_gap": invariance_gap,
        "slow_energy_evaluations": model.energy.slow_count,
        "fast_energy_evaluations": model.energy.fast_count,
    }, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zratio",
        description="normalizing-constant ratio estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="one method, JSON summary")
    p_est.add_argument("--spec", required=True)
    p_est.add_argument("--out")
    p_est.add_argument("--seed", type=int)
    p_est.set_defaults(func=cmd_estimate)

    p_exp = sub.add_parser("experiment", help="spec file -> rows CSV")
    p_exp.add_argument("--spec", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--seed", type=int)
    p_exp.add_argument("--replications", type=int)
    p_exp.add_argument("--full", action="store_true",
                       help="use 2000 replications")
    p_exp.add_argument("--threads", type=int, default=1)
    p_exp.set_defaults(func=cmd_experiment)

    p_scan = sub.add_parser("scan", help="equal-budget stage-count scan")
    p_scan.add_argument("--spec", required=True)
    p_scan.add_argument("--out", required=True)
    p_scan.add_argument("--n-values", dest="n_values")
    p_scan.add_argument("--seed", type=int)
    p_scan.add_argument("--replications", type=int)
    p_scan.add_argument("--full", action="store_true")
    p_scan.add_argument("--threads", type=int, default=1)
    p_scan.set_defaults(func=cmd_scan)

    p_orc = sub.add_parser("oracle", help="closed-form predictions as JSON")
    p_orc.add_argument("--family", required=True,
                       choices=["nested", "nonnested"])
    p_orc.add_argument("--s", type=float)
    p_orc.add_argument("--t", type=float)
    p_orc.add_argument("--n", type=int)
    p_orc.add_argument("--m", type=int)
    p_orc.set_defaults(func=cmd_oracle)

    p_val = sub.add_parser("validate", help="fast structural self-checks")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.set_defaults(func=cmd_validate)

    p_drag = sub.add_parser("drag-demo", help="discrete dragging toy")
    p_drag.add_argument("--updates", type=int, default=100_000)
    p_drag.add_argument("--seed", type=int, default=0)
    p_drag.set_defaults(func=cmd_drag_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ZRatioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
