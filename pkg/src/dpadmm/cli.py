"""Command-line entry point.

Subcommands:
    run <config-path>      execute a full experiment grid from a config file
    calibrate ...          print the noise scale and RDP order for a budget
    parse-check <path>     parse a LIBSVM file and report n, d, label counts

Exit codes: 0 success, 1 configuration/validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .accounting import PrivacyBudget, budget_alpha, calibrate_noise
from .datasets import ParseError, load_libsvm
from .experiments import ConfigError, load_config, run_experiment, summary_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpadmm",
        description="Differentially private ADMM experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiment grid described by a config file")
    run_p.add_argument("config", help="path to a flat key = value config file")

    cal_p = sub.add_parser("calibrate", help="print sigma and alpha for a privacy budget")
    cal_p.add_argument("--epsilon", type=float, required=True)
    cal_p.add_argument("--delta", type=float, default=1e-3)
    cal_p.add_argument("--mu", type=float, default=0.5)
    cal_p.add_argument("--iters", type=int, required=True)
    cal_p.add_argument("--samples", type=int, required=True)
    cal_p.add_argument("--clip", type=float, default=1.0)

    chk_p = sub.add_parser("parse-check", help="parse a LIBSVM file and report its shape")
    chk_p.add_argument("path", help="LIBSVM-format text file")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_experiment(config)
    print(f"reference objective: {result.reference_objective!r}")
    print(f"runs completed: {result.run_count}")
    print(f"output directory: {result.output_dir}")
    print(summary_table(result.summary))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    budget = PrivacyBudget(epsilon=args.epsilon, delta=args.delta, mu=args.mu)
    spec = calibrate_noise(budget, args.iters, args.samples, args.clip)
    print(f"sigma = {spec.sigma!r}")
    print(f"alpha = {budget_alpha(budget)!r}")
    return 0


def _cmd_parse_check(args: argparse.Namespace) -> int:
    dataset = load_libsvm(args.path)
    print(f"samples = {dataset.n_samples}")
    print(f"features = {dataset.n_features}")
    negatives = int((dataset.labels == -1).sum())
    positives = int((dataset.labels == 1).sum())
    print(f"labels = -1: {negatives}, +1: {positives}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        # argparse exits 2 on usage errors; those are validation failures here.
        code = exit_request.code or 0
        return 1 if code else 0

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        if args.command == "parse-check":
            return _cmd_parse_check(args)
        raise AssertionError(f"unhandled command {args.command!r}")
    except (ConfigError, ParseError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver divergence, I/O mid-run, ...
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
