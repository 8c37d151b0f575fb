"""
Monte Carlo trial engine

Trials are cut into fixed-size blocks. Block b draws its channel states from
``default_rng(SeedSequence(seed, spawn_key=(b,)))`` one state after another, so
a trial's channel depends only on (seed, block size, trial index), never on how
many workers run the blocks. Block accumulators are merged in block order.
"""

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.components.analytics import Rate, RateValue
from src.components.channel_model import SystemParams, sample_channel
from src.components.huffman import HuffmanCode, huffman_build, merge_histograms
from src.components.schemes import SCHEMES, QuantizerMode, run_scheme, stopping_resolutions
from src.utils.config import get_config
from src.utils.logging import log_metrics, log_stage

# Spawn key reserved for the histogram pass of variable-rate runs
_HISTOGRAM_PASS_KEY = 0x48554646


@dataclass
class Accumulator:
    """Running (count, sum, sum of squares) for outage, training and feedback"""

    count: int = 0
    sums: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    squares: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    fr_infinite: bool = False

    def add(self, outage: bool, trained: int, bits: Optional[int]) -> None:
        self.count += 1
        if bits is None:
            self.fr_infinite = True
            bits = 0
        for index, value in enumerate((float(outage), float(trained), float(bits))):
            self.sums[index] += value
            self.squares[index] += value * value

    def merge(self, other: "Accumulator") -> "Accumulator":
        return Accumulator(
            count=self.count + other.count,
            sums=[a + b for a, b in zip(self.sums, other.sums)],
            squares=[a + b for a, b in zip(self.squares, other.squares)],
            fr_infinite=self.fr_infinite or other.fr_infinite,
        )

    def mean(self, index: int) -> float:
        return self.sums[index] / self.count

    def standard_error(self, index: int) -> float:
        """sqrt(sample variance / N); NaN for a single trial"""
        if self.count < 2:
            return math.nan
        mean = self.mean(index)
        variance = (self.squares[index] - self.count * mean * mean) / (self.count - 1)
        return math.sqrt(max(variance, 0.0) / self.count)


@dataclass(frozen=True)
class EstimateTriple:
    """Monte Carlo outage, training length and feedback rate with standard errors"""

    scheme: str
    outage_mean: float
    outage_se: float
    tl_mean: float
    tl_se: float
    fr_mean: RateValue
    fr_se: float
    trials: int
    seed: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_accumulator(
        cls, scheme: str, acc: Accumulator, seed: int, metadata: Optional[Dict[str, Any]] = None
    ) -> "EstimateTriple":
        if acc.fr_infinite:
            fr_mean, fr_se = Rate.INFINITE, math.nan
        else:
            fr_mean, fr_se = acc.mean(2), acc.standard_error(2)
        return cls(
            scheme=scheme,
            outage_mean=acc.mean(0),
            outage_se=acc.standard_error(0),
            tl_mean=acc.mean(1),
            tl_se=acc.standard_error(1),
            fr_mean=fr_mean,
            fr_se=fr_se,
            trials=acc.count,
            seed=seed,
            metadata=dict(metadata or {}),
        )


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a sub-experiment (sweep point, pass)"""
    sequence = np.random.SeedSequence(seed % 2**64, spawn_key=tuple(keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def block_stream(seed: int, block: int) -> np.random.Generator:
    """Random stream feeding block b of a run"""
    return np.random.default_rng(np.random.SeedSequence(seed % 2**64, spawn_key=(block,)))


def _blocks(trials: int, block_size: int) -> List[Tuple[int, int]]:
    return [(b, min(block_size, trials - start)) for b, start in enumerate(range(0, trials, block_size))]


def _run_block(job: Tuple[str, SystemParams, int, int, int, str, Optional[HuffmanCode]]) -> Accumulator:
    scheme_id, params, seed, block, size, mode, code = job
    rng = block_stream(seed, block)
    acc = Accumulator()
    for _ in range(size):
        outcome = run_scheme(scheme_id, sample_channel(params, rng), params, mode, code)
        acc.add(outcome.outage, outcome.antennas_trained, outcome.feedback_bits)
    return acc


def _histogram_block(job: Tuple[SystemParams, int, int, int]) -> Counter:
    params, seed, block, size = job
    rng = block_stream(seed, block)
    histogram: Counter = Counter()
    for _ in range(size):
        histogram.update(stopping_resolutions(sample_channel(params, rng), params))
    return histogram


def _map(function, jobs: Sequence, workers: int) -> List:
    if workers <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, jobs))


def build_resolution_code(
    params: SystemParams, trials: int, seed: int, workers: int = 1, block_size: Optional[int] = None
) -> Tuple[HuffmanCode, Counter]:
    """
    Histogram pass: run the greedy allocation at Scheme D's stopping stage and freeze a code

    Args:
        params: System parameters
        trials: Channel states in the pass
        seed: Seed of the pass
        workers: Worker processes
        block_size: Trials per block (config default if None)

    Returns:
        Tuple[HuffmanCode, Counter]: The shared code and the histogram it came from
    """
    block_size = block_size or get_config()["LINK_BLOCK_SIZE"]
    jobs = [(params, seed, b, size) for b, size in _blocks(trials, block_size)]
    histogram = merge_histograms(*_map(_histogram_block, jobs, workers))
    if not histogram:
        # No state stopped; any single-symbol code will do
        histogram = Counter({0: 1})
    log_stage("D", "sample", f"resolution histogram over {trials} states: {dict(sorted(histogram.items()))}")
    return huffman_build(histogram), histogram


def estimate(
    scheme_id: str,
    params: SystemParams,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    quantizer_mode: QuantizerMode = "fixed",
    workers: int = 1,
    block_size: Optional[int] = None,
    code: Optional[HuffmanCode] = None,
) -> EstimateTriple:
    """
    Estimate outage, training length and feedback rate of a scheme

    Args:
        scheme_id: Scheme id
        params: System parameters (trials and seed are taken from here when not given)
        trials: Number of channel states
        seed: Master seed
        quantizer_mode: Quantizer for Scheme D
        workers: Worker processes; results do not depend on it
        block_size: Trials per block (config default if None)
        code: Pre-built resolution code; variable mode builds one when missing

    Returns:
        EstimateTriple: Means and standard errors
    """
    if scheme_id not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme_id!r}; choose from {sorted(SCHEMES)}")
    trials = params.trials if trials is None else trials
    seed = params.seed if seed is None else seed
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    config = get_config()
    block_size = block_size or config["LINK_BLOCK_SIZE"]

    metadata: Dict[str, Any] = {"block_size": block_size}
    if scheme_id == "D":
        metadata["quantizer"] = quantizer_mode
    if scheme_id == "D" and quantizer_mode == "variable" and code is None:
        pass1_trials = max(1, int(trials * config["LINK_PASS1_FRACTION"]))
        pass1_seed = derive_seed(seed, _HISTOGRAM_PASS_KEY)
        code, _ = build_resolution_code(params, pass1_trials, pass1_seed, workers, block_size)
        metadata.update({"huffman_pass1_trials": pass1_trials, "huffman_pass1_seed": pass1_seed})

    log_stage(scheme_id, "simulate", f"t={params.t} alpha={params.alpha} K={params.K} trials={trials}")
    jobs = [
        (scheme_id, params, seed, b, size, quantizer_mode, code)
        for b, size in _blocks(trials, block_size)
    ]
    total = Accumulator()
    for acc in _map(_run_block, jobs, workers):
        total = total.merge(acc)

    log_metrics(scheme_id, {"outage": total.mean(0), "tl": total.mean(1), "fr": total.mean(2)})
    return EstimateTriple.from_accumulator(scheme_id, total, seed, metadata)


def sweep(
    scheme_id: str,
    axis: str,
    values: Iterable[float],
    params: SystemParams,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    quantizer_mode: QuantizerMode = "fixed",
    workers: int = 1,
    block_size: Optional[int] = None,
) -> List[Tuple[float, EstimateTriple]]:
    """
    One estimate per axis value, in axis order

    Point n runs on derive_seed(seed, n), so points are decorrelated and a rerun
    with the same seed repeats every row.

    Args:
        scheme_id: Scheme id
        axis: SystemParams field to vary (t, K, alpha, P, epsilon)
        values: Axis values
        params: Base parameters
        trials: Trials per point
        seed: Master seed
        quantizer_mode: Quantizer for Scheme D
        workers: Worker processes
        block_size: Trials per block

    Returns:
        List[Tuple[float, EstimateTriple]]: (axis value, estimate) rows
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one axis value")
    if axis not in ("t", "K", "alpha", "P", "epsilon"):
        raise ValueError(f"cannot sweep over {axis!r}")
    seed = params.seed if seed is None else seed

    rows = []
    for index, value in enumerate(values):
        typed = int(value) if axis in ("t", "K") else float(value)
        point = params.replace(**{axis: typed})
        result = estimate(
            scheme_id,
            point,
            trials,
            derive_seed(seed, index),
            quantizer_mode,
            workers,
            block_size,
        )
        rows.append((typed, result))
    return rows
