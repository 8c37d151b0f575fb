#!/usr/bin/env python3
"""
Interleaved training and feedback simulator for multi-antenna links
Main entry point for the application
"""

import argparse
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Ensure src directory is in path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

# Load environment variables
load_dotenv()

from src.components.experiments import (  # noqa: E402
    FIGURES,
    ResultTable,
    SelftestFailure,
    cmd_analytic,
    cmd_figure,
    cmd_selftest,
    cmd_simulate,
    cmd_sweep,
    write_table,
)
from src.utils.config import (  # noqa: E402
    DEFAULT_CONFIG,
    SCHEME_IDS,
    SWEEP_AXES,
    ConfigError,
    ExperimentConfig,
    build_experiment_config,
)
from src.utils.logging import logger, setup_logging  # noqa: E402

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SELFTEST = 3

# Flag destination -> ExperimentConfig field
_FLAG_FIELDS = {
    "t": "t",
    "alpha": "alpha",
    "power": "P",
    "epsilon": "epsilon",
    "group_size": "K",
    "delta": "delta",
    "trials": "trials",
    "seed": "seed",
    "scheme": "schemes",
    "quantizer": "quantizer",
    "out": "out",
    "format": "format",
    "workers": "workers",
    "axis": "axis",
    "values": "values",
}


def parse_values(text: str) -> List[float]:
    """
    Parse an axis value list

    Accepts comma-separated numbers and inclusive ranges ``start:stop[:step]``,
    e.g. ``1:30`` or ``0.5,1,2`` or ``1,2:30:2``.
    """
    values: List[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ":" in item:
                parts = [float(p) for p in item.split(":")]
                if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] <= 0):
                    raise ValueError
                start, stop = parts[0], parts[1]
                step = parts[2] if len(parts) == 3 else 1.0
                n = int((stop - start) / step + 1e-9) + 1
                values.extend(start + i * step for i in range(max(n, 0)))
            else:
                values.append(float(item))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value list entry {item!r}") from None
    return values


def _default(name: str) -> Any:
    return ExperimentConfig.model_fields[name].default


def build_parser() -> argparse.ArgumentParser:
    """Command-line parser with one subcommand per experiment type"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--t", type=int, help=f"Number of transmit antennas (default: {_default('t')})")
    common.add_argument("--alpha", type=float, help=f"Outage threshold alpha (default: {_default('alpha')})")
    common.add_argument("--power", type=float, help=f"Transmit power P (default: {_default('P')})")
    common.add_argument(
        "--epsilon", type=float, help=f"Codeword share lost per training stage (default: {_default('epsilon')})"
    )
    common.add_argument("--group-size", type=int, help=f"Antennas per group K (default: {_default('K')})")
    common.add_argument(
        "--delta", type=int, help=f"Bits per rate-allocation step (default: {DEFAULT_CONFIG['LINK_DELTA']})"
    )
    common.add_argument(
        "--trials", type=int, help=f"Channel states per estimate (default: {DEFAULT_CONFIG['LINK_TRIALS']})"
    )
    common.add_argument("--seed", type=int, help=f"Master seed (default: {DEFAULT_CONFIG['LINK_SEED']})")
    common.add_argument(
        "--scheme",
        action="append",
        choices=SCHEME_IDS,
        help="Scheme id; repeat for several (default: B)",
    )
    common.add_argument(
        "--quantizer", choices=("fixed", "variable"), help="Quantizer for Scheme D (default: fixed)"
    )
    common.add_argument("--axis", choices=SWEEP_AXES, help="Parameter to sweep")
    common.add_argument("--values", type=parse_values, help="Axis values, e.g. 1:30 or 0.5,1,2")
    common.add_argument("--out", type=str, help="Output file (default: stdout)")
    common.add_argument(
        "--format", choices=("csv", "json"), help=f"Output format (default: {DEFAULT_CONFIG['LINK_OUTPUT_FORMAT']})"
    )
    common.add_argument("--config", type=str, help="Config file (key=value or .json)")
    common.add_argument(
        "--workers", type=int, help=f"Worker processes (default: {DEFAULT_CONFIG['LINK_WORKERS']})"
    )
    common.add_argument("--verbose", action="store_true", default=None, help="Enable verbose output")

    parser = argparse.ArgumentParser(
        description="Training length, feedback rate and outage of interleaved training and feedback schemes"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("analytic", parents=[common], help="Closed-form curves")
    commands.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    commands.add_parser("sweep", parents=[common], help="Monte Carlo estimates along --axis")
    figure = commands.add_parser("figure", parents=[common], help="Run a figure preset")
    figure.add_argument("name", choices=sorted(FIGURES, key=lambda n: int(n[3:])))
    commands.add_parser("selftest", parents=[common], help="Run the invariant suite")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {field: getattr(args, flag) for flag, field in _FLAG_FIELDS.items()} | {"verbose": args.verbose}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one command and write its table

    Args:
        argv: Arguments (sys.argv[1:] if None)

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(argv)

    try:
        config = build_experiment_config(_overrides(args), args.config)
        setup_logging(config.verbose)

        if args.command == "selftest":
            report = cmd_selftest(args.trials, args.seed, config.workers)
            write_table(ResultTable("selftest", report.to_frame()), config.out, config.format)
            return EXIT_OK

        if args.command == "analytic":
            table = cmd_analytic(config)
        elif args.command == "simulate":
            table = cmd_simulate(config)
        elif args.command == "sweep":
            table = cmd_sweep(config)
        else:
            table = cmd_figure(args.name, config)
        write_table(table, config.out, config.format)

    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SelftestFailure as e:
        write_table(ResultTable("selftest", e.report.to_frame()), args.out, args.format or "csv")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SELFTEST
    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR

    return EXIT_OK


def main():
    """Main entry point for the application"""
    return run()


if __name__ == "__main__":
    sys.exit(main())
