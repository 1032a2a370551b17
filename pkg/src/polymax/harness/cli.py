"""Command-line entry point.

    polymax run --config cfg.json [--workers N] [--seed U64] [--output DIR]
    polymax summarize results.csv
    polymax list-scenarios
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, ParseError, PolymaxError
from .config import SCENARIOS, load_config
from .runner import run_experiment, summarize


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polymax",
                                     description="Seeded Monte-Carlo experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to a JSON config file")
    run_p.add_argument("--workers", type=int, default=None,
                       help="parallel replicate workers (overrides config)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="base seed override (64-bit)")
    run_p.add_argument("--output", default=None, help="output directory override")

    sum_p = sub.add_parser("summarize", help="print a table for a results.csv file")
    sum_p.add_argument("results", help="path to results.csv")

    sub.add_parser("list-scenarios", help="list available scenario names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name in SCENARIOS:
                print(name)
            return 0
        if args.command == "run":
            config = load_config(args.config)
            if args.workers is not None:
                config.workers = int(args.workers)
            if args.seed is not None:
                config.base_seed = int(args.seed)
            if args.output is not None:
                config.output_dir = args.output
            rows, summary = run_experiment(config)
            print(f"scenario {config.scenario}: {len(rows)} rows, "
                  f"{summary['failed_replicates']} failed replicates")
            if config.output_dir:
                print(f"results written to {config.output_dir}")
            return 0
        if args.command == "summarize":
            print(summarize(args.results), end="")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except PolymaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
