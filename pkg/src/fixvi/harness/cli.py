"""Command line: ``fixvi {run,certify,compare,oracle} --scenario PATH``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..iterate import warm_up
from . import runner
from .scenario import ScenarioError, build_config, parse_scenario


def build_parser():
    ap = argparse.ArgumentParser(prog="fixvi", description="Fixed-point iterations for strict pseudocontractions")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "certify, validate and iterate every run in a scenario"),
                        ("certify", "only run the certifiers"),
                        ("compare", "run every entry and tabulate them side by side"),
                        ("oracle", "print the reference solution of each run")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR", default=None, help="output directory (one subdirectory per run)")
        p.add_argument("--max-iter", type=int, default=None, metavar="N")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the problem generator and sampling seeds")
        p.add_argument("--override-validation", action="store_true",
                       help="run even when gains or schedules violate the convergence conditions")
        p.add_argument("--cadence", type=int, default=None, metavar="N", help="trace every N-th iterate")
    return ap


def _print_certs(certs):
    for key, rep in certs.items():
        print(f"  [{'pass' if rep.passed else 'FAIL'}] {key}: worst margin {rep.worst_margin:.3e}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        sf = parse_scenario(args.scenario, override=args.override_validation)
    except ScenarioError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    override = True if args.override_validation else None
    status = 0

    if args.command == "certify":
        for r in sf.runs:
            _, certs, reports = runner.certify_scenario(r, args.seed)
            ok = all(c.passed for c in certs.values())
            print(f"{r.name}: {'all certificates pass' if ok else 'certificate failure'}")
            _print_certs(certs)
            for rep in reports:
                for c in rep.checks:
                    print(f"  [{'ok' if c.ok else 'BAD'}] {rep.subject}: {c.name}")
            status |= 0 if ok else 1
        return status

    if args.command == "oracle":
        for r in sf.runs:
            cfg = build_config(r, seed=args.seed, override=True)
            res = runner.solve_oracle(cfg)
            if res is None:
                print(f"{r.name}: no direct oracle (needs a Hilbert space and a declared fixed set)")
                status = 1
                continue
            print(json.dumps({"run": r.name, **res.as_dict()}))
        return status

    warm_up()
    if args.command == "compare":
        cfgs = {r.name: build_config(r, max_iter=args.max_iter, seed=args.seed, override=override,
                                     cadence=args.cadence) for r in sf.runs}
        try:
            table = runner.compare(cfgs)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(runner.format_table(table))
        return 0 if all(row["status"] == "converged" for row in table["rows"]) else 1

    for r in sf.runs:
        summary, trace = runner.run_scenario(r, args.out, max_iter=args.max_iter, seed=args.seed,
                                             override=override, cadence=args.cadence)
        fin = summary.final
        res = fin["window_residual"] if trace.mode == "cyclic" else fin["fixpoint_residual"]
        line = f"{r.name}: {summary.status} after {summary.iterations} iterations, residual {res:.3e}"
        if summary.dist_to_oracle is not None:
            line += f", distance to oracle {summary.dist_to_oracle:.3e}"
        print(line)
        for v in summary.violations:
            print(f"  violated: {v}")
        bad = [k for k, c in summary.certificates.items() if not c["passed"]]
        if bad:
            print(f"  certificate failures: {', '.join(bad)}")
        status |= summary.exit_code
    return status


if __name__ == "__main__":
    np.seterr(all="ignore")
    raise SystemExit(main())
