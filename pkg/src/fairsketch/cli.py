"""Command-line driver.

Subcommands: ``alloc``, ``gen``, ``run``, ``mc-wl``, ``estimate``.
Exit codes: 0 success, 2 usage error or infeasible input, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .allocation import fair_widths, solve_multi, solve_two_group
from .datagen import (
    DistributionSpec,
    generate_grouped,
    generate_sourced,
    load_dataset,
    parse_genspec,
)
from .errors import FairSketchError, InfeasibleAllocationError
from .experiments import EXPERIMENTS, SWEEPS, RunConfig, run_experiment, write_results
from .montecarlo import McConfig, mc_estimate_wl
from .sketch import CountMinSketch, FairCountMinSketch

SEED_ENV = "FAIR_SKETCH_SEED"


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _dist(text: str) -> DistributionSpec:
    try:
        return DistributionSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_alloc(args) -> int:
    try:
        result = solve_multi(args.sizes, args.w, args.d, args.precision)
    except InfeasibleAllocationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    _emit_json(result.to_dict())
    return 0


def cmd_gen(args) -> int:
    if len(args.dist) == 1:
        if args.sizes:
            raise UsageError("--sizes needs one --dist per group")
        if args.n is None:
            raise UsageError("--n is required with a single --dist")
        ds = generate_grouped(args.dist[0], args.n, args.seed, args.group)
    else:
        if args.group:
            raise UsageError("--group applies to a single --dist only")
        if not args.sizes or len(args.sizes) != len(args.dist):
            raise UsageError("give --sizes with one entry per --dist")
        if args.n is not None and args.n != sum(args.sizes):
            raise UsageError(f"--n {args.n} does not match sum of --sizes {sum(args.sizes)}")
        ds = generate_sourced(args.dist, args.sizes, args.seed)
    ds.write_csv(args.out)
    _emit_json({"out": str(args.out), **ds.summary()})
    return 0


def _resolve_source(text: str):
    if Path(text).exists():
        return load_dataset(text)
    if "=" in text:
        return parse_genspec(text)
    raise UsageError(f"--dataset {text!r} is neither an existing file nor a genspec")


def cmd_run(args) -> int:
    source = _resolve_source(args.dataset)
    cfg = RunConfig(
        experiment=args.experiment,
        sweep=args.sweep,
        values=args.values,
        source=source,
        w=args.w,
        d=args.d,
        trials=args.trials,
        seed=args.seed,
        with_rp=args.with_rp,
        precision=args.precision,
    )
    rows = run_experiment(cfg)
    if args.out == "-":
        write_results(rows, sys.stdout)
    else:
        write_results(rows, args.out)
    return 0


def cmd_mc_wl(args) -> int:
    cfg = McConfig(args.nl, args.nh, args.w, args.d, args.dist_l, args.dist_h, args.trials, args.seed)
    res = mc_estimate_wl(cfg)
    solver_wl, residual = solve_two_group(args.nl, args.nh, args.w, args.d, args.precision)
    _emit_json(
        {
            "avg_wl": res.avg_wl,
            "solver_wl": solver_wl,
            "solver_residual": residual,
            "per_trial": res.per_trial,
        }
    )
    return 0


def cmd_estimate(args) -> int:
    ds = load_dataset(args.dataset)
    oracle = ds.oracle()
    key, _, group_name = args.query.partition(",")
    if not key:
        raise UsageError("--query needs a key")
    out = {"key": key}
    if args.sketch == "cm":
        sk = CountMinSketch(args.w, args.d, args.seed)
        sk.update_many(oracle.keys, oracle.freqs)
        fhat = sk.estimate(key)
    else:
        if not group_name:
            raise UsageError("fcm queries need a group tag: --query key,group")
        if group_name not in ds.group_names:
            raise UsageError(f"unknown group {group_name!r}; known: {', '.join(ds.group_names)}")
        g = ds.group_names.index(group_name)
        widths = fair_widths(oracle.group_sizes(), args.w, args.d, args.precision)
        sk = FairCountMinSketch(widths, args.d, args.seed)
        sk.update_many(oracle.keys, oracle.groups, oracle.freqs)
        fhat = sk.estimate(key, g)
        out["group"] = group_name
        out["widths"] = widths
    out["estimate"] = fhat
    if key in ds.keys:
        f = int(ds.freqs[ds.keys.index(key)])
        out.update({"true": f, "alpha": f / fhat, "additive_error": fhat - f})
    _emit_json(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairsketch", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("alloc", help="per-group column widths")
    a.add_argument("--sizes", type=_int_list, required=True, help="group sizes n1,n2,...")
    a.add_argument("--w", type=int, required=True)
    a.add_argument("--d", type=int, required=True)
    a.add_argument("--precision", choices=("exact", "stirling"), default="exact")
    a.set_defaults(func=cmd_alloc)

    g = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    g.add_argument("--dist", type=_dist, action="append", required=True,
                   help="family:params, e.g. zipf:1.0 or gaussian:100,50 (repeat per group)")
    g.add_argument("--n", type=int)
    g.add_argument("--sizes", type=_int_list, help="per-distribution group sizes")
    g.add_argument("--group", help="threshold:TAU | equiwidth:ELL | rank:N_LOW")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an unfairness / pof / efficiency sweep")
    r.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    r.add_argument("--sweep", choices=SWEEPS, required=True)
    r.add_argument("--values", type=_int_list, required=True)
    r.add_argument("--dataset", required=True, help="dataset CSV path or genspec string")
    r.add_argument("--w", type=int, required=True)
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--trials", type=int, default=5)
    r.add_argument("--seed", type=int)
    r.add_argument("--with-rp", action="store_true", help="include the row-partitioning baseline")
    r.add_argument("--precision", choices=("exact", "stirling"), default="exact")
    r.add_argument("--out", default="-", help="results CSV path ('-' for stdout)")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("mc-wl", help="Monte Carlo estimate of w_l vs the solver")
    m.add_argument("--nl", type=int, required=True)
    m.add_argument("--nh", type=int, required=True)
    m.add_argument("--w", type=int, required=True)
    m.add_argument("--d", type=int, required=True)
    m.add_argument("--dist-l", type=_dist, required=True)
    m.add_argument("--dist-h", type=_dist, required=True)
    m.add_argument("--trials", type=int, default=20)
    m.add_argument("--seed", type=int)
    m.add_argument("--precision", choices=("exact", "stirling"), default="exact")
    m.set_defaults(func=cmd_mc_wl)

    e = sub.add_parser("estimate", help="build a sketch over a dataset and query one key")
    e.add_argument("--dataset", required=True)
    e.add_argument("--sketch", choices=("cm", "fcm"), required=True)
    e.add_argument("--w", type=int, required=True)
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--precision", choices=("exact", "stirling"), default="exact")
    e.add_argument("--query", required=True, help="key, or key,group for fcm")
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except (UsageError, FairSketchError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
