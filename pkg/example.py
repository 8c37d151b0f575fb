#!/usr/bin/env python3
"""
Example script demonstrating the interleaved training and feedback simulator

Usage: python example.py [PRESET]    (default: fig5)
"""

import sys
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Trials per estimate for the demo; the presets default to LINK_TRIALS
EXAMPLE_TRIALS = 20_000
DEFAULT_PRESET = "fig5"


def main(argv=None):
    """Main entry point for the example"""
    from src.components.experiments import FIGURES, cmd_figure, write_table
    from src.utils.config import build_experiment_config
    from src.utils.logging import setup_logging

    argv = sys.argv[1:] if argv is None else argv
    name = argv[0] if argv else DEFAULT_PRESET

    print("Interleaved Training and Feedback Simulator", file=sys.stderr)
    print("=" * 50, file=sys.stderr)
    print("\nAvailable figure presets:", file=sys.stderr)
    for preset in sorted(FIGURES, key=lambda n: int(n[3:])):
        print(f"  {preset}: {FIGURES[preset].description}", file=sys.stderr)

    if name not in FIGURES:
        print(f"\nUnknown preset {name!r}. Using {DEFAULT_PRESET}.", file=sys.stderr)
        name = DEFAULT_PRESET

    try:
        setup_logging(verbose=False)
        config = build_experiment_config({"trials": EXAMPLE_TRIALS})

        print(f"\nRunning {name} at {EXAMPLE_TRIALS} trials per point", file=sys.stderr)
        print("-" * 50, file=sys.stderr)

        write_table(cmd_figure(name, config))

    except KeyboardInterrupt:
        print("\nRun interrupted by user.", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
