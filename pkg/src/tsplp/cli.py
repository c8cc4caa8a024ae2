"""Command line entry point: ``tsplp <command> ...``.

Instances are given either as a path to an instance file or by label:
``atsp7_s3`` / ``stsp7_s3`` regenerate the seeded random instance and
``xtsp71``..``xtsp73`` (optionally ``xtsp71_n6``) the extreme ones.

Exit codes: 0 success, 1 usage error, 2 numerical failure or failed check,
3 enumeration or size guard.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from .decomposition import DEFAULT_EPS, PathExplosion, certificate_json, decompose
from .harness import (CLASSES, default_out_dir, format_table, run_experiment, search_gap,
                      write_records)
from .indexing import UnsupportedSizeError
from .instance import (InvalidInstanceError, InvalidTourError, Tour, format_instance,
                       generate_extreme, generate_random, read_instance, tour_cost)
from .model import build_model, lift_tour, objective_value, residuals
from .mps import export_mps
from .oracle import EnumerationGuardError, all_tours, brute_force_opt
from .simplex import NumericalFailure, SolverOptions, Status, certify_optimality, solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GUARD = 0, 1, 2, 3

_RANDOM = re.compile(r"^(atsp|stsp)(\d+)_s(\d+)$")
_EXTREME = re.compile(r"^xtsp(7[123])(?:_n(\d+))?$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_instance(name: str):
    if Path(name).is_file():
        return read_instance(name)
    m = _RANDOM.match(name)
    if m:
        return generate_random(int(m[2]), int(m[3]), symmetric=m[1] == "stsp")
    m = _EXTREME.match(name)
    if m:
        return generate_extreme("x" + m[1], int(m[2]) if m[2] else 7)
    raise UsageError(f"{name!r} is neither an instance file nor a known instance label")


def _options(args) -> SolverOptions:
    kw = {"form": args.form, "max_iter": args.max_iter,
          "arithmetic": "exact" if getattr(args, "exact", False) else "float"}
    if args.tol is not None:
        kw["feas_tol"] = kw["opt_tol"] = args.tol
    return SolverOptions(**kw)


def _emit(obj, path=None) -> None:
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.extreme:
        inst = generate_extreme(args.extreme, args.n)
    else:
        inst = generate_random(args.n, args.seed, symmetric=args.symmetric)
    text = format_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {inst.label} to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_build(args) -> int:
    model = build_model(resolve_instance(args.instance))
    _emit(model.summary(), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = resolve_instance(args.instance)
    model = build_model(inst)
    sol = solve(model, _options(args))
    out = {
        "instance": inst.label, "form": sol.form, "status": sol.status.value,
        "objective": None if sol.objective is None else float(sol.objective),
        "iterations": sol.iterations, "phase1_iterations": sol.phase1_iterations,
        "tours_examined": sol.tours_examined, "wall_time": round(sol.wall_time, 3),
    }
    if sol.status == Status.OPTIMAL:
        out["certificate"] = certify_optimality(model, sol).as_dict()
    _emit(out, args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = resolve_instance(args.instance)
    res = brute_force_opt(inst, histogram=args.histogram)
    out = {"instance": inst.label, "best_cost": str(res.best_cost), "best_tour": str(res.best_tour),
           "tours_enumerated": res.tours_enumerated, "optimal_tours": len(res.optimal_tours)}
    if res.histogram is not None:
        out["histogram"] = {str(k): v for k, v in sorted(res.histogram.items())}
    _emit(out, args.output)
    return EXIT_OK


def cmd_lift_check(args) -> int:
    inst = resolve_instance(args.instance)
    model = build_model(inst)
    if args.tour:
        tours = [Tour(tuple(int(c) for c in args.tour.split(",")))]
    else:
        tours = all_tours(inst.n)
    checked, bad = 0, []
    for t in tours:
        x = lift_tour(inst.n, t)
        rep = residuals(model, x)
        obj_ok = objective_value(model, x) == tour_cost(inst, t)
        checked += 1
        if not rep.is_zero() or not obj_ok:
            bad.append({"tour": str(t), "residual": str(rep.overall), "objective_ok": obj_ok})
    print(json.dumps({"instance": inst.label, "tours_checked": checked, "failures": bad}, indent=2))
    return EXIT_OK if not bad else EXIT_NUMERIC


def cmd_decompose(args) -> int:
    inst = resolve_instance(args.instance)
    model = build_model(inst)
    sol = solve(model, _options(args))
    if sol.status != Status.OPTIMAL:
        print(f"solve ended with status {sol.status.value}", file=sys.stderr)
        return EXIT_NUMERIC
    dec = decompose(model, sol.x, eps=args.eps, instance_label=inst.label)
    out = {"instance": inst.label, "objective": float(sol.objective), "verdict": dec.verdict,
           "residuals": dec.residuals, "flow_total": dec.flow_total,
           "tours": [{"tour": str(t), "weight": lam, "cost": str(tour_cost(inst, t))}
                     for t, lam in dec.tours]}
    _emit(out)
    if dec.certificate is not None and args.certificate:
        Path(args.certificate).write_text(certificate_json(dec) + "\n")
    return EXIT_OK


def cmd_export_mps(args) -> int:
    inst = resolve_instance(args.instance)
    data = export_mps(build_model(inst))
    if args.output:
        Path(args.output).write_bytes(data)
        print(f"wrote {len(data)} bytes to {args.output}")
    else:
        sys.stdout.write(data.decode("ascii"))
    return EXIT_OK


def cmd_experiment(args) -> int:
    out_dir = Path(args.out) if args.out else default_out_dir()
    records = run_experiment(args.cls, args.n, args.count, args.seed, tuple(args.forms))
    path = write_records(records, out_dir / f"experiment_{args.cls}{args.n}_s{args.seed}.csv")
    print(format_table(records))
    print(f"\nrecords written to {path}")
    return EXIT_OK


def cmd_search(args) -> int:
    rep = search_gap(args.n, args.count, args.seed, args.symmetric, args.form, out_dir=args.out)
    print(json.dumps(rep.summary(), indent=2))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _solver_flags(p) -> None:
    p.add_argument("--form", choices=("primal", "dual"), default="primal")
    p.add_argument("--tol", type=float, default=None, help="feasibility and optimality tolerance")
    p.add_argument("--max-iter", type=int, default=1_000_000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsplp", description="Lifted TSP linear program: build, solve, audit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="solver progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--extreme", choices=("x71", "x72", "x73"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build the LP and print its size summary")
    p.add_argument("instance")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve the LP")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--exact", action="store_true", help="finish in rational arithmetic")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force tour optimum")
    p.add_argument("instance")
    p.add_argument("--histogram", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lift-check", help="exact residuals of lifted tours")
    p.add_argument("instance")
    p.add_argument("--tour", help="comma-separated visiting order of cities 2..n (default: all tours)")
    p.set_defaults(func=cmd_lift_check)

    p = sub.add_parser("decompose", help="solve, then split the optimum into weighted tours")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--certificate", help="where to write a failure certificate")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("export-mps", help="write the LP in MPS format")
    p.add_argument("instance")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("experiment", help="batch of LP vs oracle runs for one instance class")
    p.add_argument("--class", dest="cls", choices=CLASSES, required=True)
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--forms", nargs="+", choices=("primal", "dual"), default=["primal", "dual"])
    p.add_argument("--out", help="output directory (default: $TSPLP_OUT or ./tsplp-out)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("search", help="randomized search for LP/oracle gaps")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--form", choices=("primal", "dual"), default="dual")
    p.add_argument("--out", help="certificate directory (default: $TSPLP_OUT or ./tsplp-out)")
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (EnumerationGuardError, UnsupportedSizeError, PathExplosion) as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, InvalidInstanceError, InvalidTourError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
