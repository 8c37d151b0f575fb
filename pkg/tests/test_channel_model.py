import math

import numpy as np
import pytest
from scipy import special, stats

from src.components.channel_model import (
    ChannelState,
    SystemParams,
    gamma_tail,
    kappa,
    poisson_pmf,
    sample_channel,
)


def test_sample_channel_is_reproducible():
    params = SystemParams(t=6)
    first = sample_channel(params, np.random.default_rng(7))
    second = sample_channel(params, np.random.default_rng(7))
    np.testing.assert_array_equal(first.coeffs, second.coeffs)
    assert first.t == 6


def test_sample_channel_consumes_documented_stream():
    params = SystemParams(t=3)
    h = sample_channel(params, np.random.default_rng(99))
    parts = np.random.default_rng(99).standard_normal((3, 2)) / math.sqrt(2.0)
    np.testing.assert_array_equal(h.coeffs, parts[:, 0] + 1j * parts[:, 1])


def test_sample_channel_unit_variance(rng):
    params = SystemParams(t=4)
    gains = np.concatenate([sample_channel(params, rng).gains() for _ in range(50_000)])
    assert gains.mean() == pytest.approx(1.0, abs=0.01)
    assert np.mean(gains <= 1.0) == pytest.approx(1 - math.exp(-1), abs=0.004)


def test_channel_state_validation():
    with pytest.raises(ValueError):
        ChannelState(np.array([], dtype=complex))
    with pytest.raises(ValueError):
        ChannelState(np.array([1.0, np.nan]))
    h = ChannelState(np.array([1 + 1j, 2.0, 0.5j]))
    assert h.prefix(2).norm_sq() == pytest.approx(6.0)
    with pytest.raises(ValueError):
        h.prefix(4)


def test_system_params_rules():
    with pytest.raises(ValueError):
        SystemParams(t=4, K=5)
    with pytest.raises(ValueError):
        SystemParams(t=0)
    params = SystemParams(t=4, alpha=3.0, P=1.0)
    assert params.rho == pytest.approx(2.0)
    assert params.replace(K=4).K == 4
    with pytest.raises(ValueError):
        params.replace(t=2, K=3)


@pytest.mark.parametrize(
    "k, x, expected",
    [(1, 1.0, 1 - math.exp(-1)), (2, 1.0, 1 - 2 * math.exp(-1)), (3, 0.0, 0.0)],
)
def test_gamma_tail_examples(k, x, expected):
    assert gamma_tail(k, x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5, 10, 30, 60])
@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 2.0, 7.5, 40.0])
def test_gamma_tail_matches_scipy(k, x):
    expected = special.gammainc(k, x)
    assert gamma_tail(k, x) == pytest.approx(expected, rel=1e-9, abs=1e-300)
    assert gamma_tail(k, x) == pytest.approx(stats.poisson.sf(k - 1, x), rel=1e-9, abs=1e-300)


def test_gamma_tail_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gamma_tail(0, 1.0)
    with pytest.raises(ValueError):
        gamma_tail(2, -0.1)


def test_poisson_pmf_matches_scipy():
    for i in range(0, 20):
        assert poisson_pmf(i, 3.5) == pytest.approx(stats.poisson.pmf(i, 3.5), rel=1e-12)
    assert poisson_pmf(0, 0.0) == 1.0


def test_kappa_single_antenna():
    assert kappa(1, 0.3) == 1
    assert kappa(1, 4.0) == 1


def test_kappa_matches_brute_force():
    probabilities = [gamma_tail(k, 0.5 * k) for k in range(1, 21)]
    assert kappa(20, 0.5) == int(np.argmin(probabilities)) + 1


def test_kappa_large_alpha_uses_one_antenna():
    assert kappa(40, 2.0) == 1
