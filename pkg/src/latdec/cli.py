"""Command-line front end.

Subcommands:
  sweep CONFIG      run an experiment file, write results.csv /
                    results.json / slopes.json, print a slope table
  validate          run the built-in self-check suites (JSON verdicts)
  dmt-reference     print reference diversity-curve breakpoints

Exit codes: 0 success, 1 experiment-file error, 2 enumeration budget
exceeded, 3 numerical failure, 4 self-check failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys

from . import dmtsim
from .errors import (
    BudgetExceeded,
    EnumerationOverflow,
    InsufficientData,
    IterationOverflow,
    LatdecError,
    NearSingularChannel,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SchemaError,
    SingularInput,
    SingularTriangular,
)
from .experiment import load_experiment
from .validation import SUITES, run_suites

__all__ = ["main", "write_results_csv", "write_results_json", "write_slopes_json"]

CSV_HEADER = "rho_db,rho_linear,r,method,trials,errors,oob,timeouts,p_hat,ci_lo,ci_hi"

_BUDGET_ERRORS = (BudgetExceeded, EnumerationOverflow)
_NUMERICAL_ERRORS = (NotPositiveDefinite, NotSymmetric, RankDeficient,
                     SingularTriangular, SingularInput, IterationOverflow,
                     NearSingularChannel, FloatingPointError, ArithmeticError,
                     AssertionError)


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain digits for ints."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_to_row(rec: dmtsim.ErrorRateRecord) -> str:
    return ",".join([
        _fmt(rec.rho_db), _fmt(rec.rho_linear), _fmt(rec.r), rec.method,
        _fmt(rec.trials), _fmt(rec.errors), _fmt(rec.oob), _fmt(rec.timeouts),
        _fmt(rec.p_hat), _fmt(rec.ci_lo), _fmt(rec.ci_hi),
    ])


def record_to_dict(rec: dmtsim.ErrorRateRecord) -> dict:
    return {
        "rho_db": rec.rho_db, "rho_linear": rec.rho_linear, "r": rec.r,
        "method": rec.method, "trials": rec.trials, "errors": rec.errors,
        "oob": rec.oob, "timeouts": rec.timeouts, "p_hat": rec.p_hat,
        "ci_lo": rec.ci_lo, "ci_hi": rec.ci_hi,
    }


def write_results_csv(path: str, records) -> None:
    lines = [CSV_HEADER] + [record_to_row(rec) for rec in records]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_results_json(path: str, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"records": [record_to_dict(rec) for rec in records]},
                  fh, indent=2)
        fh.write("\n")


def write_slopes_json(path: str, slopes: dict) -> None:
    payload = {}
    for method, est in slopes.items():
        if est is None:
            payload[method] = None
        else:
            payload[method] = {
                "d_hat": est.d_hat, "stderr": est.stderr,
                "n_points": est.n_points,
                "rho_db_used": list(est.rho_db_used),
            }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"slopes": payload}, fh, indent=2)
        fh.write("\n")


def _parallel_cells(workers: int):
    """Cell runner mapping signal levels over a process pool; output
    order follows the grid, so scheduling cannot leak into results."""

    def runner(config: dmtsim.SweepConfig):
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(dmtsim.sweep_cell, config, rho_db)
                       for rho_db in config.rho_db]
            return [f.result() for f in futures]

    return runner


def _cmd_sweep(args) -> int:
    try:
        config = load_experiment(args.config, seed_override=args.seed)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    n_cells = len(config.rho_db) * len(config.methods)
    if args.dry_run:
        print(f"config ok: {n_cells} cells "
              f"({len(config.rho_db)} signal levels x {len(config.methods)} methods)")
        return 0
    runner = _parallel_cells(args.workers) if args.workers > 1 else None
    try:
        result = dmtsim.run_sweep(config, cell_runner=runner)
    except _BUDGET_ERRORS as exc:
        print(f"error: enumeration budget exceeded: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    os.makedirs(args.out, exist_ok=True)
    write_results_csv(os.path.join(args.out, "results.csv"), result.records)
    write_results_json(os.path.join(args.out, "results.json"), result.records)
    write_slopes_json(os.path.join(args.out, "slopes.json"), result.slopes)
    print(f"wrote {n_cells} cells to {args.out}")
    print("method          slope    stderr   points")
    for method in config.methods:
        est = result.slopes[method]
        if est is None:
            print(f"{method:<15} insufficient qualifying cells")
        else:
            print(f"{method:<15} {est.d_hat:8.4f} {est.stderr:8.4f}   "
                  f"{est.n_points}")
    return 0


def _cmd_validate(args) -> int:
    names = args.suite if args.suite else None
    try:
        results = run_suites(names=names, poison=args.poison)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    all_passed = all(res["passed"] for res in results)
    print(json.dumps({"suites": results, "passed": all_passed}, indent=2))
    return 0 if all_passed else 4


def _cmd_dmt_reference(args) -> int:
    try:
        pts = dmtsim.dmt_reference_breakpoints(args.nt, args.nr,
                                               taps=args.taps)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("r,d")
    for k, d in pts:
        print(f"{k},{_fmt(d)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latdec",
        description="Lattice decoding toolkit and diversity-slope harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run an experiment file")
    p_sweep.add_argument("config", help="path to the experiment YAML file")
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="override the experiment seed")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel worker processes over signal levels")
    p_sweep.add_argument("--dry-run", action="store_true",
                         help="validate the file and print the cell count")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="run built-in self-check suites")
    p_val.add_argument("--suite", action="append", choices=sorted(SUITES),
                       help="run only this suite (repeatable)")
    p_val.add_argument("--poison", default=None,
                       help="corrupt one instance inside the named suite "
                            "(accepts a suite name, or 'lll' for "
                            "reduction-bound) to prove detection")
    p_val.set_defaults(func=_cmd_validate)

    p_ref = sub.add_parser("dmt-reference",
                           help="print reference curve breakpoints")
    p_ref.add_argument("nt", type=int)
    p_ref.add_argument("nr", type=int)
    p_ref.add_argument("--taps", type=int, default=None,
                       help="tap count for the frequency-selective variant")
    p_ref.set_defaults(func=_cmd_dmt_reference)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LatdecError as exc:
        # Anything deliberate that escaped the per-command mapping.
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, _BUDGET_ERRORS):
            return 2
        if isinstance(exc, SchemaError) or isinstance(exc, InsufficientData):
            return 1
        return 3


if __name__ == "__main__":
    sys.exit(main())
