"""
Logging utilities for the interleaved feedback simulator
"""

import logging
import sys
from typing import Mapping, Optional
from colorama import Fore, Style, init

# Initialize colorama
init(autoreset=True)

# Logger instance
logger = logging.getLogger("interleaved_feedback")


def setup_logging(verbose: bool = False) -> None:
    """
    Set up logging configuration

    Args:
        verbose: Whether to enable verbose logging
    """
    # Repeated calls (one per command) must not stack handlers
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    logger.setLevel(logging.DEBUG if verbose else logging.INFO)

    # Prevent propagation to root logger
    logger.propagate = False


def log_stage(stage: str, action: str, details: str, color: Optional[str] = None) -> None:
    """
    Log one stage of an experiment with formatting

    Args:
        stage: What is running (scheme id, figure name, check name)
        action: Action being taken (sample, simulate, analytic, merge, selftest)
        details: Details about the action
        color: Color to use for the action (default: None)
    """
    color_map = {
        "sample": Fore.BLUE,
        "simulate": Fore.GREEN,
        "analytic": Fore.YELLOW,
        "merge": Fore.CYAN,
        "selftest": Fore.MAGENTA,
        "warning": Fore.YELLOW,
        "error": Fore.RED,
    }

    action_color = color or color_map.get(action.lower(), "")
    stage_info = f"[{stage}] {action_color}{action.upper()}{Style.RESET_ALL}"

    level = {"warning": logging.WARNING, "error": logging.ERROR}.get(action.lower(), logging.INFO)
    logger.log(level, f"{stage_info}: {details}")


def log_metrics(name: str, values: Mapping[str, float]) -> None:
    """
    Log accumulator contents (at debug level)

    Args:
        name: Label for the dump
        values: Metric name to value
    """
    if logger.isEnabledFor(logging.DEBUG):
        rendered = ", ".join(f"{key}={value:.6g}" for key, value in values.items())
        logger.debug(f"METRICS {name}: {rendered}")
