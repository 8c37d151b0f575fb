"""
Command implementations behind main.py

Every command returns a ResultTable (a pandas DataFrame plus the metadata that
goes into the output header); write_table renders it as CSV or JSON.
"""

import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.components.analytics import (
    Rate,
    RateValue,
    analytic_Bprime,
    analytic_report,
    appendixB_training_length,
    full_csi_sandwich,
)
from src.components.channel_model import ChannelState, SystemParams, gamma_tail, sample_channel
from src.components.montecarlo import (
    EstimateTriple,
    block_stream,
    build_resolution_code,
    derive_seed,
    estimate,
    sweep,
)
from src.components.quantizer import (
    BitString,
    QuantizedBeamformer,
    array_gain_of,
    decode_beamformer,
    deadzone_vector,
    encode_beamformer,
    fixed_rate_cost,
)
from src.components.schemes import run_B, run_Ck, run_D
from src.utils.config import ConfigError, ExperimentConfig, get_config
from src.utils.logging import log_stage

FLOAT_FORMAT = "%.10g"

ANALYTIC_COLUMNS = ["scheme", "t", "K", "alpha", "P", "epsilon", "outage", "tl", "fr", "validity"]
SIMULATE_COLUMNS = [
    "scheme", "quantizer", "axis", "value", "t", "K", "alpha", "P", "epsilon",
    "outage_est", "outage_se", "tl_est", "tl_se", "fr_est", "fr_se", "fr_per_antenna",
    "analytic_outage", "analytic_tl", "analytic_fr", "trials", "seed",
]


class SelftestFailure(RuntimeError):
    """Raised when any selftest check fails"""

    def __init__(self, report: "SelftestReport"):
        failed = ", ".join(check.name for check in report.checks if not check.passed)
        super().__init__(f"selftest failed: {failed}")
        self.report = report


@dataclass
class ResultTable:
    """Rows of one command and the metadata that reproduces them"""

    command: str
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)


# Parameter handling


def _base_params(config: ExperimentConfig) -> SystemParams:
    fields = config.system_fields()
    # A sweep over t or K may start from a base point where K > t
    if config.axis == "K":
        fields["K"] = min(fields["K"], fields["t"])
    elif config.axis == "t":
        fields["t"] = max(fields["t"], fields["K"])
    try:
        return SystemParams(**fields)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _axis_points(config: ExperimentConfig, base: SystemParams) -> List[Tuple[Optional[float], SystemParams]]:
    if config.axis is None:
        return [(None, base)]
    points = []
    for value in config.values:
        typed = int(value) if config.axis in ("t", "K") else float(value)
        try:
            points.append((typed, base.replace(**{config.axis: typed})))
        except ValidationError as exc:
            raise ConfigError(f"{config.axis}={value}: {exc}") from exc
    return points


def _warn_group_size(schemes: Sequence[str], params: SystemParams) -> None:
    if "Bprime" in schemes and params.t % params.K:
        log_stage(
            "Bprime",
            "warning",
            f"K={params.K} does not divide t={params.t}; the closed forms are approximate",
        )


def _rate_cell(value: Optional[RateValue]) -> Any:
    if value is None:
        return math.nan
    if isinstance(value, Rate):
        return str(value)
    return float(value)


def _param_cells(params: SystemParams) -> Dict[str, Any]:
    return {
        "t": params.t,
        "K": params.K,
        "alpha": params.alpha,
        "P": params.P,
        "epsilon": params.epsilon,
    }


# Row builders


def analytic_row(scheme_id: str, params: SystemParams) -> Optional[Dict[str, Any]]:
    """One closed-form row, or None for schemes without a closed form"""
    report = analytic_report(scheme_id, params)
    if report is None:
        return None
    return {
        "scheme": scheme_id,
        **_param_cells(params),
        "outage": report.outage,
        "tl": report.tl,
        "fr": _rate_cell(report.fr),
        "validity": report.validity.value,
    }


def simulate_row(
    result: EstimateTriple,
    params: SystemParams,
    quantizer_mode: str,
    axis: Optional[str] = None,
    value: Optional[float] = None,
) -> Dict[str, Any]:
    """One Monte Carlo row with its analytic companion columns"""
    report = analytic_report(result.scheme, params)
    if isinstance(result.fr_mean, Rate):
        per_antenna: Any = str(result.fr_mean)
    else:
        per_antenna = result.fr_mean / params.t
    return {
        "scheme": result.scheme,
        "quantizer": quantizer_mode if result.scheme == "D" else "",
        "axis": axis or "",
        "value": math.nan if value is None else value,
        **_param_cells(params),
        "outage_est": result.outage_mean,
        "outage_se": result.outage_se,
        "tl_est": result.tl_mean,
        "tl_se": result.tl_se,
        "fr_est": _rate_cell(result.fr_mean),
        "fr_se": result.fr_se,
        "fr_per_antenna": per_antenna,
        "analytic_outage": report.outage if report else math.nan,
        "analytic_tl": report.tl if report else math.nan,
        "analytic_fr": _rate_cell(report.fr) if report else math.nan,
        "trials": result.trials,
        "seed": result.seed,
    }


# Commands


def cmd_analytic(config: ExperimentConfig) -> ResultTable:
    """
    Closed-form outage, training length and feedback rate

    Args:
        config: Validated experiment configuration

    Returns:
        ResultTable: One row per axis value per scheme
    """
    base = _base_params(config)
    rows = []
    for _, params in _axis_points(config, base):
        _warn_group_size(config.schemes, params)
        for scheme_id in config.schemes:
            row = analytic_row(scheme_id, params)
            if row is None:
                log_stage(scheme_id, "warning", "no closed form; skipped")
                continue
            rows.append(row)
    log_stage("analytic", "analytic", f"{len(rows)} rows for schemes {config.schemes}")
    return ResultTable("analytic", pd.DataFrame(rows, columns=ANALYTIC_COLUMNS), _metadata(config))


def cmd_simulate(config: ExperimentConfig) -> ResultTable:
    """
    Monte Carlo estimates for every scheme, at one point or along the sweep axis

    Args:
        config: Validated experiment configuration

    Returns:
        ResultTable: One row per axis value per scheme, in axis order
    """
    base = _base_params(config)
    points = _axis_points(config, base)
    for _, params in points:
        _warn_group_size(config.schemes, params)

    rows = []
    for scheme_id in config.schemes:
        if config.axis is None:
            result = estimate(
                scheme_id, base, config.trials, config.seed, config.quantizer, config.workers
            )
            rows.append(simulate_row(result, base, config.quantizer))
            continue
        swept = sweep(
            scheme_id,
            config.axis,
            config.values,
            base,
            config.trials,
            config.seed,
            config.quantizer,
            config.workers,
        )
        for (value, result), (_, params) in zip(swept, points):
            rows.append(simulate_row(result, params, config.quantizer, config.axis, value))
    return ResultTable("simulate", pd.DataFrame(rows, columns=SIMULATE_COLUMNS), _metadata(config))


def cmd_sweep(config: ExperimentConfig) -> ResultTable:
    """cmd_simulate along a required sweep axis"""
    if config.axis is None:
        raise ConfigError("sweep needs --axis and --values")
    table = cmd_simulate(config)
    table.command = "sweep"
    return table


# Figure presets


@dataclass(frozen=True)
class FigurePreset:
    """
    Parameter grid of one figure

    Every combination of ``grid`` values is crossed with every series (scheme id
    and Scheme D quantizer mode) and swept along ``axis``.
    """

    name: str
    description: str
    command: str
    series: Tuple[Tuple[str, str], ...]
    axis: str
    values: Tuple[float, ...]
    grid: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    fixed: Dict[str, float] = field(default_factory=dict)


_T_30 = tuple(range(1, 31))
_T_EVEN = (1,) + tuple(range(2, 31, 2))
_INTERLEAVED_BEAMFORMING = (("D", "fixed"), ("D", "variable"))
_GROUPED = dict(
    command="simulate",
    series=(("Bprime", "fixed"),),
    axis="K",
    values=_T_30,
    grid={"epsilon": (0.01, 0.02)},
    fixed={"t": 30, "alpha": 1.0, "P": 1.0},
)

FIGURES: Dict[str, FigurePreset] = {
    preset.name: preset
    for preset in (
        FigurePreset(
            "fig2",
            "Outage of full CSI, open loop and antenna selection against t",
            "analytic",
            (("F", "fixed"), ("G", "fixed"), ("A", "fixed")),
            "t",
            tuple(range(1, 101)),
            grid={"alpha": (0.5, 2.0)},
        ),
        FigurePreset(
            "fig5",
            "Training length against t",
            "simulate",
            (("F", "fixed"), ("G", "fixed"), ("A", "fixed"), ("B", "fixed")),
            "t",
            _T_30,
            fixed={"alpha": 1.0},
        ),
        FigurePreset(
            "fig6",
            "Feedback rate against t",
            "simulate",
            (("F", "fixed"), ("A", "fixed"), ("B", "fixed"), ("B_unary", "fixed")),
            "t",
            _T_30,
            fixed={"alpha": 1.0},
        ),
        FigurePreset(
            "fig7",
            "Outage of interleaved beamforming against t",
            "simulate",
            _INTERLEAVED_BEAMFORMING + (("F", "fixed"), ("A", "fixed"), ("B", "fixed")),
            "t",
            _T_EVEN,
            grid={"alpha": (0.5, 1.0)},
        ),
        FigurePreset(
            "fig8",
            "Feedback rate of fixed and variable deadzone quantizers against t",
            "simulate",
            _INTERLEAVED_BEAMFORMING,
            "t",
            _T_EVEN,
            grid={"alpha": (0.5, 1.0)},
        ),
        FigurePreset(
            "fig9",
            "Feedback rate per antenna of fixed and variable deadzone quantizers",
            "simulate",
            _INTERLEAVED_BEAMFORMING,
            "t",
            _T_EVEN,
            grid={"alpha": (0.5, 1.0)},
        ),
        FigurePreset("fig10", "Outage of grouped antenna selection against K", **_GROUPED),
        FigurePreset("fig11", "Training length of grouped antenna selection against K", **_GROUPED),
        FigurePreset("fig12", "Feedback rate of grouped antenna selection against K", **_GROUPED),
    )
}


def _grid_points(grid: Dict[str, Tuple[float, ...]]) -> List[Dict[str, float]]:
    points: List[Dict[str, float]] = [{}]
    for key, options in grid.items():
        points = [{**point, key: option} for point in points for option in options]
    return points


def cmd_figure(name: str, config: ExperimentConfig) -> ResultTable:
    """
    Run a figure preset

    Trials, seed and workers come from config; the parameter grid comes from the
    preset. Simulated figures carry the analytic companion columns, so each
    output holds both the Monte Carlo and the closed-form curves.

    Args:
        name: Preset name (fig2, fig5 ... fig12)
        config: Validated experiment configuration

    Returns:
        ResultTable: Rows in grid order, then series order, then axis order
    """
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    preset = FIGURES[name]
    log_stage(name, "simulate" if preset.command == "simulate" else "analytic", preset.description)

    frames = []
    for point in _grid_points(preset.grid):
        overrides = {
            "K": 1,
            "P": 1.0,
            "epsilon": 0.0,
            **preset.fixed,
            **point,
            "schemes": [scheme for scheme, _ in preset.series],
            "axis": preset.axis,
            "values": list(preset.values),
        }
        base = config.model_copy(update=overrides)
        if preset.command == "analytic":
            frames.append(cmd_analytic(base).frame)
            continue
        for scheme_id, mode in preset.series:
            series = base.model_copy(update={"schemes": [scheme_id], "quantizer": mode})
            frames.append(cmd_simulate(series).frame)

    frame = pd.concat(frames, ignore_index=True)
    metadata = {**_metadata(config), "figure": name}
    return ResultTable(f"figure {name}", frame, metadata)


# Selftest


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class SelftestReport:
    """Outcome of every selftest check"""

    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"check": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            columns=["check", "passed", "detail"],
        )


Encoder = Callable[[QuantizedBeamformer, int], BitString]

# Standard errors of slack allowed between a Monte Carlo mean and its oracle
ORACLE_TOLERANCE_SE = 4.5


def _agrees(estimate_mean: float, oracle: float, se: float, trials: int) -> bool:
    # 1/N absorbs the lattice of a mean over N trials when the oracle is tiny
    return abs(estimate_mean - oracle) <= ORACLE_TOLERANCE_SE * se + 1.0 / trials


def _binomial_se(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)


def _check_codec(rng: np.random.Generator, pairs: int, encoder: Encoder) -> CheckResult:
    mismatches = 0
    for _ in range(pairs):
        dim = int(rng.integers(1, 17))
        ell = int(rng.integers(0, 13))
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        x *= rng.uniform(0.0, 1.0) / np.linalg.norm(x)
        q = deadzone_vector(x, ell)
        bits = encoder(q, ell)
        try:
            decoded = decode_beamformer(bits, dim, ell)
        except ValueError:
            mismatches += 1
            continue
        if len(bits) != fixed_rate_cost(dim, ell) or not np.array_equal(decoded.vector, q.vector):
            mismatches += 1
    return CheckResult("codec_round_trip", mismatches == 0, f"{mismatches}/{pairs} mismatches")


def _check_sufficient_resolution(rng: np.random.Generator, draws: int) -> CheckResult:
    violations = 0
    tested = 0
    for _ in range(draws):
        k = int(rng.integers(1, 31))
        alpha = float(rng.uniform(0.05, 4.0))
        h_k = ChannelState((rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2.0))
        if h_k.norm_sq() <= alpha:
            continue
        tested += 1
        _, q = run_Ck(h_k, alpha)
        if array_gain_of(q.vector, h_k.coeffs) <= alpha:
            violations += 1
    return CheckResult(
        "sufficient_resolution_guarantee",
        violations == 0,
        f"{violations} violations over {tested} states",
    )


def _check_oracles(trials: int, seed: int, workers: int) -> List[CheckResult]:
    checks = []
    params = SystemParams(t=30, alpha=1.0)
    b = estimate("B", params, trials, derive_seed(seed, 1), workers=workers)
    oracle = analytic_report("B", params)
    ok = (
        _agrees(b.outage_mean, oracle.outage, _binomial_se(oracle.outage, trials), trials)
        and _agrees(b.tl_mean, oracle.tl, b.tl_se, trials)
        and _agrees(b.fr_mean, oracle.fr, b.fr_se, trials)
        and oracle.tl < math.e
        and b.tl_mean < math.e + ORACLE_TOLERANCE_SE * b.tl_se
    )
    checks.append(
        CheckResult("interleaved_selection_oracle", ok, f"tl={b.tl_mean:.4f} fr={b.fr_mean:.4f} vs {oracle.tl:.4f}")
    )

    params = SystemParams(t=5, alpha=1.0)
    f = estimate("F", params, trials, derive_seed(seed, 2), workers=workers)
    expected = gamma_tail(5, 1.0)
    ok = _agrees(f.outage_mean, expected, _binomial_se(expected, trials), trials)
    checks.append(CheckResult("full_csi_oracle", ok, f"outage={f.outage_mean:.6f} vs {expected:.6f}"))

    for alpha in (0.5, 1.0, 2.0):
        params = SystemParams(t=30, alpha=alpha)
        d = estimate("D", params, trials, derive_seed(seed, 3, int(alpha * 10)), workers=workers)
        out_d = gamma_tail(30, alpha)
        tl_d = appendixB_training_length(30, alpha)
        ok = (
            _agrees(d.outage_mean, out_d, _binomial_se(out_d, trials), trials)
            and _agrees(d.tl_mean, tl_d, d.tl_se, trials)
            and d.tl_mean <= 1 + alpha + ORACLE_TOLERANCE_SE * d.tl_se
            and d.fr_mean <= 92 * (1 + alpha**3)
        )
        checks.append(
            CheckResult(
                f"interleaved_beamforming_alpha_{alpha:g}",
                ok,
                f"tl={d.tl_mean:.4f} (exact {tl_d:.4f}) fr={d.fr_mean:.2f}",
            )
        )
    return checks


def _check_dominance(trials: int, seed: int) -> CheckResult:
    params = SystemParams(t=30, alpha=1.0)
    rng = block_stream(derive_seed(seed, 4), 0)
    violations = 0
    for _ in range(trials):
        h = sample_channel(params, rng)
        if run_D(h, params).antennas_trained > run_B(h, params).antennas_trained:
            violations += 1
    return CheckResult("training_dominance", violations == 0, f"{violations}/{trials} states")


def _check_variable_rate(trials: int, seed: int) -> CheckResult:
    failures = []
    for t in (4, 8, 16):
        params = SystemParams(t=t, alpha=1.0)
        code, _ = build_resolution_code(params, max(1, trials // 10), derive_seed(seed, 5, t))
        rng = block_stream(derive_seed(seed, 6, t), 0)
        fixed_total = variable_total = 0
        for _ in range(trials):
            h = sample_channel(params, rng)
            fixed = run_D(h, params, "fixed")
            variable = run_D(h, params, "variable", code)
            # Stopping states carry one extra mode bit in variable mode
            mode_bit = 0 if fixed.outage else 1
            if variable.feedback_bits > fixed.feedback_bits + mode_bit or variable.outage != fixed.outage:
                failures.append(f"t={t}: per-state cost or outage")
                break
            fixed_total += fixed.feedback_bits
            variable_total += variable.feedback_bits
        if variable_total >= fixed_total:
            failures.append(f"t={t}: mean {variable_total / trials:.2f} >= {fixed_total / trials:.2f}")
    return CheckResult("variable_rate_quantizer", not failures, "; ".join(failures) or "ok")


def _check_sandwich() -> CheckResult:
    violations = []
    for alpha in (0.5, 1.0, 2.0):
        for t in range(1, 31):
            lower, upper = full_csi_sandwich(t, alpha)
            value = gamma_tail(t, alpha)
            if not lower * (1 - 1e-12) <= value <= upper * (1 + 1e-12):
                violations.append(f"t={t},alpha={alpha}")
    return CheckResult("outage_sandwich", not violations, ", ".join(violations) or "ok")


def _check_grouping_optimum() -> CheckResult:
    expected = {0.01: (2, 3), 0.02: (3, 6)}
    divisors = [k for k in range(1, 31) if 30 % k == 0]
    found = {}
    for epsilon in expected:
        reports = {k: analytic_Bprime(30, 1.0, 1.0, epsilon, k) for k in divisors}
        found[epsilon] = (
            min(divisors, key=lambda k: reports[k].tl),
            min(divisors, key=lambda k: reports[k].fr),
        )
    return CheckResult("grouping_optimum", found == expected, f"argmin (tl, fr) by epsilon: {found}")


def cmd_selftest(
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    workers: int = 1,
    encoder: Encoder = encode_beamformer,
) -> SelftestReport:
    """
    Run the invariant suite at reduced trial counts

    Args:
        trials: Trials per Monte Carlo check (LINK_SELFTEST_TRIALS if None)
        seed: Master seed (LINK_SEED if None)
        workers: Worker processes for the Monte Carlo checks
        encoder: Fixed-rate encoder under test

    Returns:
        SelftestReport: Every check; raises SelftestFailure if any failed
    """
    config = get_config()
    trials = trials or config["LINK_SELFTEST_TRIALS"]
    seed = config["LINK_SEED"] if seed is None else seed
    rng = block_stream(derive_seed(seed, 0), 0)

    report = SelftestReport()
    report.checks.append(_check_codec(rng, max(1, trials // 10), encoder))
    report.checks.append(_check_sufficient_resolution(rng, max(1, trials // 10)))
    report.checks.extend(_check_oracles(trials, seed, workers))
    report.checks.append(_check_dominance(trials, seed))
    report.checks.append(_check_variable_rate(max(1, trials // 10), seed))
    report.checks.append(_check_sandwich())
    report.checks.append(_check_grouping_optimum())

    for check in report.checks:
        log_stage(check.name, "selftest" if check.passed else "error", check.detail)
    if not report.passed:
        raise SelftestFailure(report)
    return report


# Output


def _metadata(config: ExperimentConfig) -> Dict[str, Any]:
    return {"seed": config.seed, "config": config.model_dump(exclude={"out", "verbose", "workers"})}


def _format_cell(value: Any) -> Any:
    if isinstance(value, float) and not math.isnan(value):
        return FLOAT_FORMAT % value
    return value


def render_table(table: ResultTable, output_format: str = "csv") -> str:
    """
    Serialize a result table

    CSV output starts with ``#`` comment lines carrying the command, seed and
    full configuration; JSON output holds the same metadata next to the rows.

    Args:
        table: Result table
        output_format: "csv" or "json"

    Returns:
        str: The rendered document
    """
    frame = table.frame
    if output_format == "json":
        rows = json.loads(frame.to_json(orient="records", double_precision=10))
        document = {"command": table.command, **table.metadata, "rows": rows}
        return json.dumps(document, indent=2, sort_keys=True) + "\n"
    if output_format != "csv":
        raise ConfigError(f"unknown output format {output_format!r}")

    # Columns mixing "inf" with numbers are object dtype and miss float_format
    frame = frame.copy()
    for column in frame.columns:
        if frame[column].dtype == object:
            frame[column] = frame[column].map(_format_cell)

    header = [f"# command: {table.command}"]
    header.extend(
        f"# {key}: {json.dumps(value, sort_keys=True)}" for key, value in sorted(table.metadata.items())
    )
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return "\n".join(header) + "\n" + body


def write_table(
    table: ResultTable,
    out: Optional[str] = None,
    output_format: str = "csv",
    stream: Optional[TextIO] = None,
) -> None:
    """Write a result table to a file, or to stream (stdout) when out is None or '-'"""
    text = render_table(table, output_format)
    if out in (None, "-"):
        (stream or sys.stdout).write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    log_stage(table.command, "merge", f"{len(table.frame)} rows written to {out}")
