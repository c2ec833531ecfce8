"""Command-line front end.

Subcommands:

``solve``     one instance, one or more seeded runs, per-run and summary lines
``generate``  tighten an instance's time windows into a new benchmark file
``bench``     run a directory of instances across seeds, emit CSV and a table
``oracle``    run the brute-force cross-checks (slow, for CI)
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .energy import load_params, preset
from .errors import GreenRouterError
from .harness import (BksRegistry, aggregate_gap, emit_csv, emit_table,
                      run_bench, run_once)
from .instance import (SET_B_WIDTHS, SET_C_WIDTHS, GeneratorConfig,
                       generate_tight_instance, parse_instance, write_instance)
from .orchestrator import SearchParams


def _add_common_solver_flags(p):
    p.add_argument("--problem", choices=["prp", "fcvrp", "emvrp"], default=None,
                   help="objective family (default: from the instance file)")
    p.add_argument("--format",
                   choices=["canonical-prp", "cvrp-classic", "prplib-uk"],
                   default="canonical-prp")
    p.add_argument("--mode", choices=["dynamic", "static"], default="dynamic")
    p.add_argument("--params", help="objective parameter file (key value lines)")
    p.add_argument("--preset",
                   help="objective preset name (prp-uk-2012, fcvrp-classic, emvrp-classic)")
    p.add_argument("--fleet", type=int, default=None,
                   help="override the vehicle count (cvrp-classic files)")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None,
                   help="wall-clock budget in seconds")


def _load_instance(args):
    problem = args.problem.upper() if args.problem else None
    params = None
    if args.params:
        params = load_params(args.params)
    inst = parse_instance(args.instance, format=args.format,
                          problem_kind=problem, params=params,
                          fleet_size=getattr(args, "fleet", None))
    if args.preset:
        cap = inst.capacity if "emvrp" in args.preset else None
        inst.objective_params = preset(args.preset, capacity=cap)
    return inst


def _search_params(args, kind, seed):
    overrides = {}
    if args.restarts is not None:
        overrides["n_restarts"] = args.restarts
    if args.time_limit is not None:
        overrides["wall_clock_limit"] = args.time_limit
    return SearchParams.for_problem(kind, seed=seed, **overrides)


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    registry = (BksRegistry.from_file(args.bks) if args.bks
                else BksRegistry.bundled())
    name = Path(args.instance).stem
    progress = (lambda ev: print(json.dumps(ev))) if args.verbose else None
    records = []
    for k in range(args.runs):
        seed = args.seed + k
        params = _search_params(args, inst.problem_kind, seed)
        rec = run_once(inst, seed, mode=args.mode, params=params,
                       registry=registry, name=name, progress=progress)
        records.append(rec)
        gap = "-" if rec.gap_percent is None else f"{rec.gap_percent:.2f}%"
        print(f"run seed={seed} cost={rec.cost:.2f} routes={rec.routes} "
              f"cpu={rec.cpu_seconds:.2f}s gap={gap} feasible={rec.feasible}")
    best = min(records, key=lambda r: r.cost)
    avg = sum(r.cost for r in records) / len(records)
    print(f"best cost={best.cost:.2f} routes={best.routes}")
    print(f"avg  cost={avg:.2f} over {len(records)} runs")
    if args.csv:
        with open(args.csv, "w") as fh:
            emit_csv(records, fh)
    return 0


def cmd_generate(args) -> int:
    base = parse_instance(args.base, format=args.format)
    widths = {"B": SET_B_WIDTHS, "C": SET_C_WIDTHS}.get(args.set)
    if args.width_lo is not None or args.width_hi is not None:
        if args.width_lo is None or args.width_hi is None:
            print("error: give both --width-lo and --width-hi", file=sys.stderr)
            return 2
        widths = (args.width_lo, args.width_hi)
    if widths is None:
        print("error: choose --set B|C or explicit widths", file=sys.stderr)
        return 2
    cfg = GeneratorConfig(base=base, horizon=args.horizon, width_range=widths,
                          rng_seed=args.seed)
    inst = generate_tight_instance(cfg)
    write_instance(inst, args.output)
    print(f"wrote {args.output} ({inst.n} customers, widths {widths})")
    return 0


def cmd_bench(args) -> int:
    paths = sorted(Path(args.directory).glob(args.glob))
    if not paths:
        print(f"error: no instances match {args.glob} under {args.directory}",
              file=sys.stderr)
        return 2
    seeds = list(range(args.seed, args.seed + args.runs))
    params_kw = {}
    if args.restarts is not None:
        params_kw["n_restarts"] = args.restarts
    if args.time_limit is not None:
        params_kw["wall_clock_limit"] = args.time_limit
    problem = args.problem.upper() if args.problem else None
    records = run_bench([str(p) for p in paths], args.format, problem,
                        args.mode, seeds, params_kw, fleet=args.fleet,
                        parallel=not args.serial)
    emit_table(records, sys.stdout)
    agg = aggregate_gap(records)
    if agg is not None:
        print(f"aggregate gap: {agg:.2f}%")
    if args.output:
        with open(args.output, "w") as fh:
            emit_csv(records, fh)
        print(f"wrote {args.output}")
    return 0


def cmd_oracle(args) -> int:
    from . import oracle_checks
    failures = oracle_checks.run_all(seed=args.seed, verbose=True)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="greenrouter",
        description="Green vehicle routing solvers and benchmark harness")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    _add_common_solver_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--bks", help="override the best-known registry CSV")
    p.add_argument("--csv", help="write per-run records to this CSV")
    p.add_argument("--verbose", action="store_true",
                   help="stream per-iteration progress as JSON lines")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="tighten time windows into a new instance")
    p.add_argument("--base", required=True, help="base instance file")
    p.add_argument("--format", choices=["canonical-prp", "cvrp-classic"],
                   default="canonical-prp")
    p.add_argument("--set", choices=["B", "C"], help="published width regime")
    p.add_argument("--width-lo", type=float)
    p.add_argument("--width-hi", type=float)
    p.add_argument("--horizon", type=float, default=32400.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="run a directory of instances")
    p.add_argument("directory")
    p.add_argument("--glob", default="*.prp")
    _add_common_solver_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--serial", action="store_true",
                   help="disable the worker pool")
    p.add_argument("-o", "--output", help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="run brute-force verifiers")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GreenRouterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
