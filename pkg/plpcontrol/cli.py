"""Command line interface for plpcontrol."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .errors import ConfigError, DivergenceError, ModelMismatchError, ReducibleChainError
from .experiment import (
    PATTERN_COLUMNS,
    SLS_COLUMNS,
    CONTROLLERS,
    build_experiment,
    load_config,
    pattern_stats_cmd,
    run_compare,
    run_single,
    run_sweep,
    sls_check,
    write_csv,
)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def parse_seed_range(text: str) -> List[int]:
    """``"3"`` or an inclusive range ``"0..9"``."""

    start, sep, stop = text.partition("..")
    try:
        first = int(start)
        last = int(stop) if sep else first
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Invalid seed range {text!r}") from exc
    if last < first:
        raise argparse.ArgumentTypeError(f"Empty seed range {text!r}")
    return list(range(first, last + 1))


def parse_int_list(text: str) -> List[int]:
    """Comma-separated positive integers such as ``"1,2,4"``."""

    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Invalid integer list {text!r}") from exc
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"Expected positive integers, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Pattern-learning predictive control experiments on switching networks.")
    parser.add_argument("--log", default="INFO", help="Logging level.")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, type=str, help="Experiment config (JSON).")
        sub.add_argument("--out", type=str, default=None, help="Output directory (defaults to the config's output_dir).")
        sub.add_argument("--true-modes", action="store_true", help="Feed ground-truth modes instead of identifying them.")

    simulate = commands.add_parser("simulate", help="Run one controller on one seed.")
    common(simulate)
    simulate.add_argument("--seed", type=int, default=0, help="Realisation seed.")
    simulate.add_argument("--controller", choices=CONTROLLERS, default="plp", help="Controller to run.")

    compare = commands.add_parser("compare", help="Run every configured controller over the seeds.")
    common(compare)
    compare.add_argument("--seeds", type=parse_seed_range, default=None, help="Seed range such as 0..9.")
    compare.add_argument("--jobs", type=int, default=1, help="Worker processes.")

    stats = commands.add_parser("pattern-stats", help="Closed-form pattern statistics against the Monte Carlo oracle.")
    common(stats)
    stats.add_argument("--oracle-trials", type=int, default=None, help="Oracle trials; 0 prints the closed form only.")
    stats.add_argument("--seed", type=int, default=0, help="Oracle seed.")

    check = commands.add_parser("sls-check", help="Achievability and closed-loop checks for every mode.")
    common(check)
    check.add_argument("--seed", type=int, default=0, help="Closed-loop disturbance seed.")

    sweep = commands.add_parser("sweep", help="PLP prediction accuracy and runtime against pattern-collection size and network scale.")
    common(sweep)
    sweep.add_argument("--pattern-sizes", type=parse_int_list, required=True, help="Pattern-collection sizes such as 1,2,4.")
    sweep.add_argument("--nodes", type=parse_int_list, default=None, help="Network sizes (defaults to the configured one).")
    sweep.add_argument("--pattern-length", type=int, default=2, help="Length of every swept pattern.")
    sweep.add_argument("--seeds", type=parse_seed_range, default=None, help="Seed range such as 0..9.")
    sweep.add_argument("--jobs", type=int, default=1, help="Worker processes.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, ReducibleChainError) as exc:
        LOGGER.error("%s", exc)
        return EXIT_CONFIG
    except (DivergenceError, ModelMismatchError) as exc:
        LOGGER.error("%s", exc)
        return EXIT_DIVERGENCE


def _dispatch(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.true_modes:
        cfg.true_modes = True
    out_dir = Path(args.out) if args.out else Path(cfg.output_dir)

    if args.command == "simulate":
        metrics = run_single(cfg, args.controller, args.seed, out_dir / "runs")
        LOGGER.info("%s seed %d: effort %.4g, peak %.4g, %d syntheses", metrics.controller, metrics.seed, metrics.effort, metrics.peak_state, metrics.synth_count)
    elif args.command == "compare":
        if args.seeds is not None:
            cfg.seeds = args.seeds
        run_compare(cfg, out_dir, jobs=args.jobs, progress=args.jobs > 1)
    elif args.command == "pattern-stats":
        experiment = build_experiment(cfg)
        trials = cfg.oracle_trials if args.oracle_trials is None else args.oracle_trials
        if trials < 0:
            raise ConfigError("--oracle-trials must be non-negative")
        rows = pattern_stats_cmd(experiment.chain, experiment.patterns, trials=trials, seed=args.seed)
        _emit(rows, PATTERN_COLUMNS, out_dir / "pattern_stats.csv")
    elif args.command == "sls-check":
        _emit(sls_check(cfg, seed=args.seed), SLS_COLUMNS, out_dir / "sls_check.csv")
    elif args.command == "sweep":
        if args.seeds is not None:
            cfg.seeds = args.seeds
        nodes = args.nodes or [cfg.network.nodes]
        run_sweep(cfg, nodes, args.pattern_sizes, args.pattern_length, out_dir, jobs=args.jobs, progress=args.jobs > 1)
    return EXIT_OK


def _emit(rows, columns, path: Path) -> None:
    writer = csv.DictWriter(sys.stdout, fieldnames=list(columns))
    writer.writeheader()
    writer.writerows(rows)
    LOGGER.info("Saved to %s", write_csv(path, columns, rows))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
