"""Command-line interface: run a config, diff two runs, inspect an archive.

Exit codes: 0 success, 2 configuration error, 3 numerical/convergence
error, 4 resonance error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (ConfigurationError, ConvergenceError, NumericalError,
                     ResonanceError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESONANCE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floqmix",
        description="Floquet-Bloch wave-mixing simulation pipeline")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a TOML run configuration")
    p_run.add_argument("config", help="path to the TOML config file")
    p_run.add_argument("--output", "-o", default=None,
                       help="override the output directory")

    p_diff = sub.add_parser("diff", help="compare artifacts of two runs")
    p_diff.add_argument("dir_a")
    p_diff.add_argument("dir_b")
    p_diff.add_argument("--tolerance", type=float, default=0.0,
                        help="max relative difference treated as equal")

    p_ins = sub.add_parser("inspect", help="summarize a cached Floquet archive")
    p_ins.add_argument("archive", help="path to a cached .npz archive")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            from .config import load_config
            from .pipeline import run
            out = run(load_config(args.config), output_dir=args.output)
            print(f"artifacts written to {out}")
            return EXIT_OK
        if args.verb == "diff":
            from .pipeline import diff_runs
            report = diff_runs(args.dir_a, args.dir_b)
            print(json.dumps(report, sort_keys=True, indent=1))
            worst = report["max_relative_difference"]
            if worst > args.tolerance:
                print(f"runs differ (max relative difference {worst:.3e})",
                      file=sys.stderr)
                return EXIT_NUMERICAL
            return EXIT_OK
        if args.verb == "inspect":
            from .cache import describe_archive
            print(json.dumps(describe_archive(args.archive),
                             sort_keys=True, indent=1))
            return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"resonance error: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except (NumericalError, ConvergenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable verb")


if __name__ == "__main__":
    sys.exit(main())
