"""Command-line entry point.

    darksol <subcommand> --config CONFIG.json [--out DIR] [--override key=value ...]

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure (divergence, non-convergence, unusable fit).
"""
import argparse
import json
import logging
import sys

import numpy as np

from .config import ConfigError, load_config
from .core import ConvergenceError, NumericalError
from .particle import TrajectoryError
from .pipelines import PIPELINES, Fig2cResult, GroundState, MergeResult, SingleResult, SweepResult
from .tracking import FitError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _report(result):
    """Short human-readable summary for stdout."""
    if isinstance(result, float):
        return {"critical_distance_um": round(result, 4)}
    if isinstance(result, GroundState):
        return result.summary()
    if isinstance(result, SingleResult):
        return {"nu_1s_hz": result.nu_1s_hz, "ratio_to_tf1d": result.ratio,
                "mu_hz": result.mu_hz}
    if isinstance(result, SweepResult):
        return {"single_ratio": result.single.ratio,
                "pair": [(r.measured_um, r.ratio, r.status) for r in result.rows]}
    if isinstance(result, Fig2cResult):
        return {"columns": "amplitude, tf1d, single, pair, particle [Hz]",
                "rows": np.round(result.table, 4).tolist()}
    if isinstance(result, MergeResult):
        keys = ("modal_soliton_count", "even_count_fraction", "mean_pair_centre_um",
                "width_over_healing_length", "soliton_pair_formed", "well_distance_um",
                "critical_distance_um", "regime")
        return {k: result.summary[k] for k in keys}
    return {}


def build_parser():
    parser = argparse.ArgumentParser(prog="darksol",
                                     description="Dark-soliton simulations in elongated BECs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None,
                       help="output directory (default: output.directory from the config)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, value parsed as JSON; repeatable")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = args.out or cfg.output.directory
    try:
        result = PIPELINES[args.command](cfg, out_dir, args.config)
    except (NumericalError, ConvergenceError, FitError, TrajectoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(_report(result), indent=2, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
