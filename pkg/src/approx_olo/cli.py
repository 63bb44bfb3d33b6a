"""Command line: ``run``, ``sweep`` and ``verify``.

Log verbosity comes from the APPROX_OLO_LOG environment variable
(DEBUG, INFO, WARNING, ...; default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .checks import run_checks
from .harness import (load_config, parse_t_grid, run_replications, run_sweep, summarize,
                      write_csv, write_json)

LOG_ENV = "APPROX_OLO_LOG"


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    return replace(cfg, **overrides) if overrides else cfg


def _emit(out: str | None, rows, payload) -> None:
    if out is None:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    elif Path(out).suffix == ".csv":
        write_csv(rows, out)
    elif Path(out).suffix == ".json":
        write_json(payload, out)
    else:
        raise SystemExit(f"--out must end in .csv or .json, got {out}")


def cmd_run(args) -> int:
    cfg = _load(args)
    logs = run_replications(cfg)
    rows = [g.row() for g in logs]
    payload = {"config": cfg.to_dict(), "summary": summarize(logs),
               "runs": [g.to_dict(rounds=args.rounds) for g in logs]}
    _emit(args.out, rows, payload)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    algorithms = args.algorithms.split(",") if args.algorithms else None
    rows, summary = run_sweep(cfg, parse_t_grid(args.t_grid), algorithms)
    _emit(args.out, rows, {"config": cfg.to_dict(), "summary": summary, "rows": rows})
    return 0


def cmd_verify(args) -> int:
    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="game config JSON")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="results.csv or results.json (default: JSON to stdout)")
    common.add_argument("--replications", type=int)
    common.add_argument("--jobs", type=int, help="worker processes")

    parser = argparse.ArgumentParser(prog="approx-olo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="play one configured game")
    run.add_argument("--rounds", action="store_true", help="include per-round records in JSON")
    run.set_defaults(func=cmd_run)
    sweep = sub.add_parser("sweep", parents=[common], help="vary T over a grid")
    sweep.add_argument("--t-grid", required=True, help="comma list, e.g. 1e3,3e3,1e4")
    sweep.add_argument("--algorithms", help="comma list; default: the config's algorithm")
    sweep.set_defaults(func=cmd_sweep)
    verify = sub.add_parser("verify", help="run the quick property checks")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)
