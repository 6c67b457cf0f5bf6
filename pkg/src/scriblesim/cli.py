"""Command line interface.

Subcommands:
    run        execute one experiment from a config file
    sweep      run the experiment across a list of epsilon values
    verify     run the property-check suites
    lowerbound run the constant-feedback adversary demonstration
    plot       re-render the figure for an existing artifact directory

Exit codes: 0 success, 1 configuration/input error, 2 verify failure.
The only environment variable honored is SCRIBLESIM_OUT_DIR (default
artifact root when neither --out-dir nor the config gives one).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import ConfigurationError, ScribleSimError
from .harness import (ExperimentConfig, emit_plot, lowerbound_demo,
                      run_experiment, sweep)
from .verify import CHECKS, verify

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scriblesim",
        description="Bandit linear optimization simulator: shrunk-domain "
                    "barrier FTRL vs budgeted adversarial perturbations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master_seed")
    p_run.add_argument("--out-dir", default=None, help="artifact directory")

    p_sweep = sub.add_parser("sweep", help="run the config across epsilon values")
    p_sweep.add_argument("--config", required=True, help="path to a JSON config")
    p_sweep.add_argument("--epsilons", required=True, type=_float_list,
                         help="comma separated epsilon values")
    p_sweep.add_argument("--budgets", type=_float_list, default=None,
                         help="optional per-epsilon budgets C (same length)")
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="override the config's master_seed")
    p_sweep.add_argument("--out-dir", default=None, help="artifact directory")

    p_verify = sub.add_parser("verify", help="run property-check suites")
    p_verify.add_argument("--suite", default=None,
                          help="comma separated subset of: " + ", ".join(CHECKS))

    p_lb = sub.add_parser("lowerbound",
                          help="constant-feedback adversary demonstration")
    p_lb.add_argument("--epsilon", type=float, required=True)
    p_lb.add_argument("--T", type=int, required=True)
    p_lb.add_argument("--seed", type=int, default=0)

    p_plot = sub.add_parser("plot", help="re-render a figure from artifacts")
    p_plot.add_argument("--from", dest="artifacts", required=True,
                        help="artifact directory or summary JSON path")
    p_plot.add_argument("--out", default=None, help="target SVG path")

    return parser


def _cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    artifacts = run_experiment(config, out_dir=args.out_dir)
    print(f"trajectory: {artifacts.trajectory_csv}")
    print(f"summary:    {artifacts.summary_json}")
    print(f"figure:     {artifacts.plot_svg}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    artifacts = sweep(config, args.epsilons, budgets=args.budgets,
                      out_dir=args.out_dir)
    print(f"table:   {artifacts.table_csv}")
    print(f"summary: {artifacts.summary_json}")
    print(f"figure:  {artifacts.plot_svg}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    suite = None
    if args.suite:
        suite = [tok for tok in args.suite.replace(",", " ").split() if tok]
    results = verify(suite)
    for result in results:
        print(result)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_lowerbound(args) -> int:
    report = lowerbound_demo(args.epsilon, args.T, master_seed=args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_plot(args) -> int:
    path = emit_plot(args.artifacts, out_svg=args.out)
    print(f"figure: {path}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "lowerbound": _cmd_lowerbound,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those onto the config code.
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScribleSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
