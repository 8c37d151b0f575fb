import math

import numpy as np
import pytest

from src.components.channel_model import ChannelState
from src.components.quantizer import (
    BitString,
    QuantizedBeamformer,
    array_gain_of,
    ceil_log2,
    deadzone_scalar,
    deadzone_vector,
    decode_beamformer,
    encode_beamformer,
    fixed_rate_cost,
    quantize_parts,
    sufficient_resolution,
    variable_rate_quantize,
)


@pytest.mark.parametrize(
    "x, ell, expected",
    [(0.625, 1, 0.5), (-0.625, 1, -0.5), (0.0, 3, 0.0), (-0.3, 0, 0.0), (1.0, 0, 1.0), (-1.0, 2, -1.0)],
)
def test_deadzone_scalar_examples(x, ell, expected):
    assert deadzone_scalar(x, ell) == expected


def test_deadzone_scalar_zero_is_positive():
    assert math.copysign(1.0, deadzone_scalar(-0.1, 0)) == 1.0


def test_deadzone_scalar_rejects_out_of_range():
    with pytest.raises(ValueError):
        deadzone_scalar(1.5, 2)
    with pytest.raises(ValueError):
        deadzone_scalar(0.5, -1)


def test_deadzone_refinement(rng):
    for x in rng.uniform(-1, 1, size=500):
        errors = [abs(x - deadzone_scalar(float(x), ell)) for ell in range(12)]
        assert all(later <= earlier for earlier, later in zip(errors, errors[1:]))
        assert all(error < 2.0 ** -(ell + 1) for ell, error in enumerate(errors))


def test_deadzone_vector_basis_and_scalar():
    e1 = np.array([1.0, 0.0, 0.0])
    q = deadzone_vector(e1, 0)
    np.testing.assert_array_equal(q.vector, e1)
    assert q.bit_cost == 2 * 3 * 3

    q = deadzone_vector([0.625 + 0j], 1)
    assert q.vector[0] == 0.5
    assert q.bit_cost == 8


def test_deadzone_vector_rejects_long_vector():
    with pytest.raises(ValueError):
        deadzone_vector([0.8, 0.8], 3)


def test_quantize_parts_stays_feasible(rng):
    for _ in range(200):
        dim = int(rng.integers(1, 10))
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        x /= np.linalg.norm(x)
        ell = rng.integers(0, 8, size=(dim, 2))
        assert np.linalg.norm(quantize_parts(x, ell)) <= 1.0 + 1e-12


def test_ceil_log2():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 16, 17)] == [0, 1, 2, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        ceil_log2(0)


def test_sufficient_resolution_examples():
    assert sufficient_resolution(ChannelState(np.array([1 + 1j])), 1.0) == 2
    assert sufficient_resolution(ChannelState(np.array([1000.0])), 1.0) == 2
    assert sufficient_resolution(ChannelState(np.array([1.0, 0.25, 0.0, 0.0])), 1.0) == 8


def test_sufficient_resolution_requires_margin():
    with pytest.raises(ValueError):
        sufficient_resolution(ChannelState(np.array([0.5, 0.5])), 1.0)


def test_sufficient_resolution_avoids_outage(rng):
    for _ in range(2000):
        k = int(rng.integers(1, 20))
        alpha = float(rng.uniform(0.1, 3.0))
        h = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2)
        norm_sq = float(np.vdot(h, h).real)
        if norm_sq <= alpha:
            continue
        q = deadzone_vector(h / math.sqrt(norm_sq), sufficient_resolution(h, alpha))
        assert array_gain_of(q.vector, h) > alpha


def test_encode_examples():
    zero = QuantizedBeamformer(np.zeros(1, dtype=complex), bit_cost=6)
    assert str(encode_beamformer(zero, 0)) == "000000"

    half = deadzone_vector([0.5 + 0j], 1)
    assert str(encode_beamformer(half, 1)) == "0100" + "0000"

    unit = deadzone_vector([-1.0 + 0j], 2)
    assert str(encode_beamformer(unit, 2)) == "11111" + "00000"


def test_codec_round_trip(rng):
    for _ in range(300):
        dim = int(rng.integers(1, 12))
        ell = int(rng.integers(0, 10))
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        x *= rng.uniform(0.1, 1.0) / np.linalg.norm(x)
        q = deadzone_vector(x, ell)
        bits = encode_beamformer(q, ell)
        assert len(bits) == fixed_rate_cost(dim, ell)
        np.testing.assert_array_equal(decode_beamformer(bits, dim, ell).vector, q.vector)


def test_decode_rejects_wrong_length():
    with pytest.raises(ValueError):
        decode_beamformer(BitString.from_str("0000"), 1, 0)


def test_decode_rejects_nonzero_last_digit():
    with pytest.raises(ValueError):
        decode_beamformer(BitString.from_str("001" + "000"), 1, 0)


def test_bitstring_rejects_non_binary():
    with pytest.raises(ValueError):
        BitString((0, 2))
    assert str(BitString.from_str("10") + BitString.from_str("1")) == "101"


def test_variable_rate_single_antenna():
    h = np.array([2.0 + 0j])
    q, ell = variable_rate_quantize(h, 1.0)
    budget = fixed_rate_cost(1, sufficient_resolution(h, 1.0))
    assert array_gain_of(q.vector, h) >= 1.0
    assert int(ell.sum()) <= budget
    assert q.bit_cost == int(ell.sum()) + 6


def test_variable_rate_stops_at_target_or_budget(rng):
    stalled = reached = 0
    for _ in range(600):
        k = int(rng.integers(1, 9))
        h = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2)
        alpha = 1.0
        if float(np.vdot(h, h).real) <= alpha:
            continue
        q, ell = variable_rate_quantize(h, alpha)
        budget = fixed_rate_cost(k, sufficient_resolution(h, alpha))
        assert ell.shape == (k, 2)
        assert np.linalg.norm(q.vector) <= 1.0 + 1e-12
        assert q.bit_cost == int(ell.sum()) + 6 * k
        if array_gain_of(q.vector, h) >= alpha:
            reached += 1
            assert int(ell.sum()) <= budget
        else:
            # Stalled: with delta = 1 the loop only exits by spending the whole budget
            stalled += 1
            assert int(ell.sum()) == budget
            assert q.bit_cost > budget
    assert reached > stalled > 0


def test_variable_rate_ties_go_to_imaginary_part():
    # Raising the real part from 0 to 1 never changes it, so every step is a
    # tie or an imaginary win and the loop runs to the 2(L+3) = 16 budget
    h = np.array([1.0 + 1.0j]) * math.sqrt(0.6)
    q, ell = variable_rate_quantize(h, 1.0)
    np.testing.assert_array_equal(ell, [[0, 16]])
    assert array_gain_of(q.vector, h) < 1.0


def test_variable_rate_rejects_weak_channel():
    with pytest.raises(ValueError):
        variable_rate_quantize(np.array([0.5 + 0j]), 1.0)
    with pytest.raises(ValueError):
        variable_rate_quantize(np.array([3.0 + 0j]), 1.0, delta=0)
