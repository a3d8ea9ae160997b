"""
Command-line interface: `python run.py <command> [flags]`.

Commands:
    solve        exact trajectories of every case
    regularize   one regularized solve per case at --eps
    criterion    A and A^gamma of every case
    verify       inequality chain; exit status 1 if any check fails
    convergence  error against the epsilon ladder, plus log-log slopes

Flags override values from --config, which override the defaults in
src.config.config.
"""

import argparse
import logging
import os
from typing import List, Optional

from src.config.config import OUTPUT_FORMATS, RESULTS_DIR
from src.config.logging_config import set_console_level
from src.data_utils.loaders import load_config
from src.harness.experiments import (
    CriterionRow,
    ExperimentConfig,
    ResultRow,
    TrajectoryRow,
    VerifyRow,
    emit,
    emit_summaries,
    run_convergence,
    run_criterion,
    run_regularize,
    run_solve,
    run_verify,
)

logger = logging.getLogger(__name__)

COMMANDS = ["solve", "regularize", "criterion", "verify", "convergence"]


def build_parser() -> argparse.ArgumentParser:
    """Argument parser shared by every command."""
    parser = argparse.ArgumentParser(
        prog="run.py",
        description="Kernel-regularized solver for the elliptic Cauchy problem.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="Noise seed")
    parser.add_argument(
        "--out", help="Output file (default results/<command>.<format>)"
    )
    parser.add_argument("--format", dest="file_format", choices=OUTPUT_FORMATS)
    parser.add_argument("--k", type=int, help="Kernel / Sobolev order")
    parser.add_argument("--beta", type=float, help="Fixed regularization parameter")
    parser.add_argument(
        "--beta-rule", help="'prop', 'pow:<theta>' or 'explicit:<beta>'"
    )
    parser.add_argument("--eps", type=float, help="Noise level for 'regularize'")
    parser.add_argument(
        "--case",
        action="append",
        dest="cases",
        help="Restrict to a case id (repeatable)",
    )
    parser.add_argument("--nx", type=int, help="Number of x-intervals")
    parser.add_argument(
        "--debug-scale-ux",
        type=float,
        help="Multiply u_x before 'verify' (mutation check)",
    )
    parser.add_argument(
        "--timing", action="store_true", help="Record wall time in the ms column"
    )
    parser.add_argument("--verbose", action="store_true", help="DEBUG console output")
    return parser


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """
    Builds the experiment from --config and the flag overrides.

    Raises:
        FileNotFoundError: If --config points to a missing file.
        ValueError: If the resulting config is invalid.
    """
    config = ExperimentConfig()
    if args.config:
        directory, filename = os.path.split(args.config)
        config = ExperimentConfig.from_dict(
            load_config([directory] if directory else ["."], filename)
        )
    config = config.with_overrides(
        seed=args.seed,
        out=args.out,
        file_format=args.file_format,
        k=args.k,
        k_values=[args.k] if args.k is not None else None,
        beta=args.beta,
        beta_rule=args.beta_rule,
        eps=args.eps,
        nx=args.nx,
        debug_scale_ux=args.debug_scale_ux,
        record_timing=True if args.timing else None,
    )
    return config.select_cases(args.cases)


def output_path(config: ExperimentConfig, command: str) -> str:
    """--out, or results/<command>.<format>."""
    if config.out:
        return config.out
    return os.path.join(*RESULTS_DIR, f"{command}.{config.file_format}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command.

    Args:
        argv (Optional[List[str]]): Arguments without the program name.

    Returns:
        int: 0 on success, 1 when 'verify' finds a failed check, 2 when
            the experiment is invalid.
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_console_level("DEBUG")

    try:
        config = load_experiment(args)
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"Invalid experiment: {e}")
        return 2

    path = output_path(config, args.command)
    status = 0
    if args.command == "solve":
        emit(run_solve(config), path, config.file_format, TrajectoryRow)
    elif args.command == "regularize":
        emit(run_regularize(config), path, config.file_format, ResultRow)
    elif args.command == "criterion":
        emit(run_criterion(config), path, config.file_format, CriterionRow)
    elif args.command == "verify":
        _, rows = run_verify(config)
        emit(rows, path, config.file_format, VerifyRow)
        failed = [row for row in rows if row.failed]
        if failed:
            asserted = sum(row.asserted for row in rows)
            logger.warning(f"{len(failed)} of {asserted} checks failed")
            status = 1
    else:
        rows, summaries = run_convergence(config)
        emit(rows, path, config.file_format, ResultRow)
        emit_summaries(summaries, path)

    logger.info(f"Wrote {path}")
    return status
