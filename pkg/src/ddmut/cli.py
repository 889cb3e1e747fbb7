"""Command line front end for the benchmark harness.

Exit codes: 0 on success, 1 for configuration errors, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .algorithms import ALGORITHM_KINDS
from .bench import (
    BenchError,
    ConfigError,
    aggregate_dir,
    config_digest,
    expand_config,
    load_config,
    run_bench,
)
from .problems import INTEGER_BASES

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddmut",
        description="Run and summarize distance-driven mutation benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute every cell of an experiment config")
    run.add_argument("--config", required=True, help="YAML experiment file")
    run.add_argument("--output", default=None, help="override the config's output_dir")
    run.add_argument("--workers", type=int, default=None, help="process count (default: DDMUT_WORKERS or 1)")

    agg = sub.add_parser("aggregate", help="summarize a finished results directory")
    agg.add_argument("--results", required=True, help="directory holding traces and manifest.json")
    agg.add_argument("--out", default=None, help="where to write summary tables (default: <results>/aggregate)")

    val = sub.add_parser("validate", help="check a config and report its expansion")
    val.add_argument("--config", required=True, help="YAML experiment file")

    sub.add_parser("list-problems", help="show available problem and algorithm kinds")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    canon = expand_config(load_config(args.config))
    manifest = run_bench(canon, output_dir=args.output, workers=args.workers)
    cells = manifest["cells"]
    failed = [c for c in cells if c["status"] != "ok"]
    out = args.output if args.output is not None else canon["output_dir"]
    print(f"ran {len(cells)} cells into {out} (digest {manifest['config_digest']})")
    for cell in failed:
        print(f"  {cell['run_id']}: {cell['status']}", file=sys.stderr)
    if failed:
        print(f"{len(failed)} of {len(cells)} cells failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_aggregate(args: argparse.Namespace) -> int:
    paths = aggregate_dir(args.results, args.out)
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    canon = expand_config(load_config(args.config))
    cells = sum(alg["repetitions"] for alg in canon["algorithms"]) * len(canon["problems"])
    print(f"config ok: digest {config_digest(canon)}")
    print(f"problems: {', '.join(p['name'] for p in canon['problems'])}")
    print(f"algorithms: {', '.join(a['name'] for a in canon['algorithms'])}")
    print(f"cells: {cells}")
    return EXIT_OK


def _cmd_list_problems() -> int:
    print("problem kinds:")
    print("  onemax      n")
    print("  ruggedness  n, v (or a list of v values)")
    print("  integer     base, n, c, seed, permutation_seed")
    print(f"              bases: {', '.join(sorted(INTEGER_BASES))}")
    print("algorithm kinds:")
    for kind in sorted(ALGORITHM_KINDS):
        print(f"  {kind:28s} {ALGORITHM_KINDS[kind]}")
    return EXIT_OK


def run_main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "aggregate":
            return _cmd_aggregate(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "list-problems":
            return _cmd_list_problems()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    sys.exit(run_main())
