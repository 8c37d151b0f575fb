"""
Configuration utilities for the interleaved feedback simulator
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

# Default values
DEFAULT_CONFIG = {
    # Monte Carlo engine
    "LINK_TRIALS": 1_000_000,
    "LINK_SEED": 20240601,
    "LINK_WORKERS": 1,
    "LINK_BLOCK_SIZE": 4096,
    # Share of the trial budget spent building the Huffman code (variable mode)
    "LINK_PASS1_FRACTION": 0.1,
    # Rate-allocation step
    "LINK_DELTA": 1,
    # Output
    "LINK_OUTPUT_FORMAT": "csv",
    # Trials per selftest check
    "LINK_SELFTEST_TRIALS": 100_000,
}

SCHEME_IDS = ("F", "G", "A", "B", "B_unary", "C", "D", "Bprime")
SWEEP_AXES = ("t", "K", "alpha", "P", "epsilon")

# Flat config files may use the command-line names
FLAT_KEY_ALIASES = {"group_size": "K", "power": "P", "scheme": "schemes"}


class ConfigError(ValueError):
    """Raised when an experiment configuration cannot be used"""


def get_config() -> Dict[str, Any]:
    """
    Load configuration from environment variables with defaults

    Returns:
        Dict[str, Any]: Configuration dictionary
    """
    config = DEFAULT_CONFIG.copy()

    # Override with environment variables
    for key in config:
        if key in os.environ:
            # Convert to appropriate type
            env_value = os.environ[key]
            try:
                if isinstance(config[key], bool):
                    config[key] = env_value.lower() in ("true", "1", "yes")
                elif isinstance(config[key], int):
                    config[key] = int(env_value)
                elif isinstance(config[key], float):
                    config[key] = float(env_value)
                else:
                    config[key] = env_value
            except ValueError as exc:
                raise ConfigError(f"{key}={env_value!r}: {exc}") from exc

    return config


class ExperimentConfig(BaseModel):
    """Everything one command needs: system parameters, schemes, sweep and output"""

    model_config = ConfigDict(extra="forbid")

    schemes: List[str] = Field(default_factory=lambda: ["B"])
    t: int = Field(30, ge=1)
    P: float = Field(1.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    epsilon: float = Field(0.0, ge=0)
    K: int = Field(1, ge=1)
    delta: int = Field(1, ge=1)
    trials: int = Field(1_000_000, ge=1)
    seed: int = Field(20240601, ge=-(2**63), lt=2**64)
    workers: int = Field(1, ge=1)
    quantizer: Literal["fixed", "variable"] = "fixed"
    axis: Optional[str] = None
    values: List[float] = Field(default_factory=list)
    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    verbose: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        unknown = [s for s in self.schemes if s not in SCHEME_IDS]
        if unknown:
            raise ValueError(f"unknown scheme(s) {unknown}; choose from {SCHEME_IDS}")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if self.K > self.t and self.axis not in ("t", "K"):
            raise ValueError(f"group size K={self.K} exceeds t={self.t}")
        if self.axis is not None and self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {SWEEP_AXES}")
        if self.axis is not None and not self.values:
            raise ValueError(f"sweep over {self.axis!r} needs at least one value")
        return self

    def system_fields(self) -> Dict[str, Any]:
        """Fields shared with SystemParams"""
        return {
            "t": self.t,
            "P": self.P,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "K": self.K,
            "delta": self.delta,
            "trials": self.trials,
            "seed": self.seed,
        }


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a config file into a raw dictionary

    ``.json`` files hold a document mirroring ExperimentConfig; anything else is
    read as flat ``key=value`` lines whose keys match ExperimentConfig fields
    case-insensitively (``group_size`` and ``power`` also work). List-valued keys
    (``schemes``, ``values``) are comma separated in the flat form.

    Args:
        path: Path to the config file

    Returns:
        Dict[str, Any]: Raw (unvalidated) settings
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {path}")

    if file_path.suffix.lower() == ".json":
        try:
            document = json.loads(file_path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(document, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return document

    fields = {name.lower(): name for name in ExperimentConfig.model_fields}
    fields.update(FLAT_KEY_ALIASES)

    raw: Dict[str, Any] = {}
    for key, value in dotenv_values(file_path).items():
        if value is None:
            continue
        key = key.strip().lower().replace("-", "_")
        key = fields.get(key, key)
        if key in ("schemes", "values"):
            raw[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            raw[key] = value
    return raw


def build_experiment_config(
    overrides: Optional[Dict[str, Any]] = None, config_file: Optional[str] = None
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig from every source

    Precedence: explicit overrides (CLI flags) > config file > environment > defaults.

    Args:
        overrides: Values set on the command line (None entries are ignored)
        config_file: Optional config file path

    Returns:
        ExperimentConfig: Validated configuration
    """
    env = get_config()
    merged: Dict[str, Any] = {
        "trials": env["LINK_TRIALS"],
        "seed": env["LINK_SEED"],
        "workers": env["LINK_WORKERS"],
        "delta": env["LINK_DELTA"],
        "format": env["LINK_OUTPUT_FORMAT"],
    }
    if config_file:
        merged.update(load_config_file(config_file))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    try:
        return ExperimentConfig(**merged)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
