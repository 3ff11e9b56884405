"""Command-line entry point.

Exit codes: 0 success, 1 scenario acceptance failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, default_config, dump_config, load_config
from .scenarios import SCENARIOS, recompute_report, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debrisim",
        description="Deterministic mission simulator for a solar-electric "
                    "multi-debris deorbit module.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and emit CSVs and figures")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config", type=Path, default=None,
                     help="config file (defaults apply when omitted)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the [run] seed")
    run.add_argument("--out", type=Path, default=None,
                     help="output directory (default out/<scenario>)")

    val = sub.add_parser("validate", help="parse and validate a config file")
    val.add_argument("--config", type=Path, required=True)
    val.add_argument("--echo", type=Path, default=None,
                     help="write the effective config to this path")

    rep = sub.add_parser("report", help="re-derive verdicts from an output directory")
    rep.add_argument("out_dir", type=Path)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config) if args.config else default_config()
            out = args.out if args.out is not None else Path("out") / args.scenario
            report = run_scenario(args.scenario, cfg, out, seed=args.seed)
            for line in report.summary_lines():
                print(line)
            print(f"outputs in {out}")
            return 0 if report.passed else 1
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"{args.config}: valid")
            if args.echo:
                dump_config(cfg, args.echo)
                print(f"effective config written to {args.echo}")
            return 0
        if args.command == "report":
            report = recompute_report(args.out_dir)
            for line in report.summary_lines():
                print(line)
            return 0 if report.passed else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
