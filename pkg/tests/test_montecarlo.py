import math

import numpy as np
import pytest

from src.components.analytics import Rate, analytic_A_B, analytic_Bprime, analytic_G, appendixB_training_length
from src.components.channel_model import SystemParams, gamma_tail, sample_channel
from src.components.montecarlo import (
    Accumulator,
    EstimateTriple,
    block_stream,
    build_resolution_code,
    derive_seed,
    estimate,
    sweep,
)
from src.components.schemes import run_B

MC_TRIALS = 20_000
MC_TOLERANCE = 5.0


def _close(mean, oracle, se):
    return abs(mean - oracle) <= MC_TOLERANCE * se


def _binomial_se(p, n):
    # Floor keeps the check meaningful when the oracle is tiny
    return max(math.sqrt(p * (1 - p) / n), 1.0 / n)


def test_accumulator_merge_matches_serial(rng):
    outcomes = [(bool(rng.random() < 0.2), int(rng.integers(1, 9)), int(rng.integers(0, 50))) for _ in range(999)]
    serial = Accumulator()
    for outcome in outcomes:
        serial.add(*outcome)

    parts = [Accumulator(), Accumulator(), Accumulator()]
    for index, outcome in enumerate(outcomes):
        parts[index % 3].add(*outcome)
    merged = parts[2].merge(parts[0]).merge(parts[1])

    assert merged.count == serial.count
    for index in range(3):
        assert merged.mean(index) == pytest.approx(serial.mean(index), abs=1e-12)
        assert merged.standard_error(index) == pytest.approx(serial.standard_error(index), abs=1e-12)


def test_single_trial_matches_direct_run():
    params = SystemParams(t=10, alpha=1.0)
    result = estimate("B", params, trials=1, seed=77)
    direct = run_B(sample_channel(params, block_stream(77, 0)), params)
    assert result.tl_mean == direct.antennas_trained
    assert result.fr_mean == direct.feedback_bits
    assert result.outage_mean == float(direct.outage)
    assert math.isnan(result.tl_se)
    assert result.trials == 1 and result.seed == 77


def test_estimate_rejects_bad_arguments():
    params = SystemParams(t=4)
    with pytest.raises(ValueError):
        estimate("B", params, trials=0)
    with pytest.raises(ValueError):
        estimate("Z", params, trials=10)


def test_results_do_not_depend_on_worker_count():
    params = SystemParams(t=12, alpha=1.0)
    serial = estimate("D", params, trials=600, seed=5, workers=1, block_size=64)
    parallel = estimate("D", params, trials=600, seed=5, workers=3, block_size=64)
    assert serial == parallel


def test_derive_seed():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    assert derive_seed(1, 0) != derive_seed(1, 1)
    assert derive_seed(1, 0) != derive_seed(2, 0)
    assert 0 <= derive_seed(-5, 3) < 2**64


def test_interleaved_selection_oracle():
    params = SystemParams(t=30, alpha=1.0)
    oracle = analytic_A_B(30, 1.0)["B"]
    result = estimate("B", params, MC_TRIALS, seed=11)
    assert _close(result.tl_mean, oracle.tl, result.tl_se)
    assert _close(result.fr_mean, oracle.fr, result.fr_se)
    assert _close(result.outage_mean, oracle.outage, _binomial_se(oracle.outage, MC_TRIALS))


def test_conventional_selection_oracle():
    params = SystemParams(t=4, alpha=1.0)
    expected = (1 - math.exp(-1)) ** 4
    result = estimate("A", params, MC_TRIALS, seed=12)
    assert expected == pytest.approx(0.1597, abs=1e-4)
    assert _close(result.outage_mean, expected, _binomial_se(expected, MC_TRIALS))
    assert result.tl_mean == 4 and result.fr_mean == 2


def test_full_csi_oracle():
    params = SystemParams(t=5, alpha=1.0)
    expected = gamma_tail(5, 1.0)
    result = estimate("F", params, MC_TRIALS, seed=13)
    assert _close(result.outage_mean, expected, _binomial_se(expected, MC_TRIALS))
    assert result.fr_mean is Rate.INFINITE
    assert math.isnan(result.fr_se)


def test_open_loop_oracle():
    params = SystemParams(t=10, alpha=0.5)
    oracle = analytic_G(10, 0.5)
    result = estimate("G", params, MC_TRIALS, seed=14)
    assert _close(result.outage_mean, oracle.outage, _binomial_se(oracle.outage, MC_TRIALS))
    assert result.fr_mean == 0.0


def test_unary_feedback_oracle():
    params = SystemParams(t=6, alpha=1.0)
    oracle = analytic_A_B(6, 1.0)["B_unary"]
    result = estimate("B_unary", params, MC_TRIALS, seed=15)
    assert _close(result.fr_mean, oracle.fr, result.fr_se)
    assert result.tl_mean == 6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_interleaved_beamforming_oracle(alpha):
    params = SystemParams(t=30, alpha=alpha)
    result = estimate("D", params, MC_TRIALS // 2, seed=16)
    exact_tl = appendixB_training_length(30, alpha)
    assert _close(result.tl_mean, exact_tl, result.tl_se)
    assert _close(result.outage_mean, gamma_tail(30, alpha), _binomial_se(gamma_tail(30, alpha), MC_TRIALS // 2))
    assert result.fr_mean <= 92 * (1 + alpha**3)


@pytest.mark.parametrize("epsilon, K", [(0.01, 2), (0.02, 3), (0.02, 6)])
def test_grouped_selection_oracle(epsilon, K):
    params = SystemParams(t=30, alpha=1.0, P=1.0, epsilon=epsilon, K=K)
    oracle = analytic_Bprime(30, 1.0, 1.0, epsilon, K)
    result = estimate("Bprime", params, MC_TRIALS, seed=17)
    assert _close(result.tl_mean, oracle.tl, result.tl_se)
    assert _close(result.fr_mean, oracle.fr, result.fr_se)
    assert _close(result.outage_mean, oracle.outage, _binomial_se(oracle.outage, MC_TRIALS))


def test_variable_mode_is_cheaper_with_same_outage():
    params = SystemParams(t=8, alpha=1.0)
    fixed = estimate("D", params, 3000, seed=18, quantizer_mode="fixed")
    variable = estimate("D", params, 3000, seed=18, quantizer_mode="variable")
    assert variable.outage_mean == fixed.outage_mean
    assert variable.tl_mean == fixed.tl_mean
    assert variable.fr_mean < fixed.fr_mean
    assert variable.metadata["huffman_pass1_trials"] == 300
    assert variable.metadata["quantizer"] == "variable"


def test_build_resolution_code():
    params = SystemParams(t=4, alpha=1.0)
    code, histogram = build_resolution_code(params, 200, seed=3)
    assert sum(histogram.values()) > 0
    assert set(histogram) <= set(code.lengths)
    assert code.kraft_sum() <= 1.0


def test_sweep_orders_and_repeats():
    params = SystemParams(t=2, alpha=1.0)
    rows = sweep("B", "t", [1, 3, 5], params, trials=200, seed=21)
    assert [value for value, _ in rows] == [1, 3, 5]
    assert all(isinstance(result, EstimateTriple) for _, result in rows)
    assert rows[0][1].tl_mean == 1.0
    assert len({result.seed for _, result in rows}) == 3
    assert rows == sweep("B", "t", [1, 3, 5], params, trials=200, seed=21)


def test_sweep_over_group_size():
    params = SystemParams(t=30, alpha=1.0, epsilon=0.01)
    rows = sweep("Bprime", "K", [1, 2, 3], params, trials=100, seed=22)
    assert [result.trials for _, result in rows] == [100, 100, 100]


def test_sweep_rejects_bad_input():
    params = SystemParams(t=4)
    with pytest.raises(ValueError):
        sweep("B", "t", [], params, trials=10)
    with pytest.raises(ValueError):
        sweep("B", "delta", [1], params, trials=10)


def test_block_stream_independent_of_other_blocks():
    first = block_stream(9, 3).standard_normal(4)
    block_stream(9, 2).standard_normal(100)
    np.testing.assert_array_equal(first, block_stream(9, 3).standard_normal(4))
