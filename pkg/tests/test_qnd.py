import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzqkd.errors import InvalidArgument
from ghzqkd.qnd import (
    decode,
    decode_with_prior,
    hoeffding_error,
    qnd_anomaly,
    qnd_estimate,
    qnd_sample,
    required_shots,
)
from ghzqkd.statevec import QuantumState, QubitId, labels, two_term_amplitudes

B = QubitId("bob1", 0)


def _linear_search_shots(alpha_sq, target):
    n = 1
    while math.exp(-2 * n * (alpha_sq - 0.5) ** 2) > target:
        n += 1
    return n


def _binomial_error(shots, p):
    """P(estimate <= 0.5) when the true population is p > 0.5."""
    return sum(math.comb(shots, k) * p**k * (1 - p) ** (shots - k) for k in range(shots + 1) if 2 * k <= shots)


def test_required_shots_frozen():
    assert required_shots(0.8, 1e-6) == 77
    assert required_shots(0.99, 1e-6) == 29


@settings(max_examples=100, deadline=None)
@given(st.floats(0.52, 0.99), st.floats(1e-9, 0.5))
def test_required_shots_is_minimal(alpha_sq, target):
    assert required_shots(alpha_sq, target) == _linear_search_shots(alpha_sq, target)


def test_required_shots_rejects_tiny_margin():
    with pytest.raises(InvalidArgument):
        required_shots(0.505, 1e-3)
    with pytest.raises(InvalidArgument):
        required_shots(0.8, 0.0)


def test_exact_decode_error_below_hoeffding():
    exact = _binomial_error(77, 0.8)
    assert exact < hoeffding_error(0.8, 77) <= 1e-6
    # frozen from the exact tail sum
    assert exact == pytest.approx(2.0284e-9, rel=1e-4)


def test_decode_ties_go_to_one():
    assert decode(0.5) == 1
    assert decode(0.5000001) == 0
    assert decode(0.2) == 1


def test_estimate_is_non_demolition():
    amps = two_term_amplitudes(3, math.sqrt(0.8), math.sqrt(0.2))
    s = QuantumState(amps, labels("alice", 2) + [B])
    before = s.amplitudes.copy()
    est = qnd_estimate(s, B, 10_000, np.random.default_rng(0))
    assert np.array_equal(s.amplitudes, before)
    assert est.decoded_bit == 0 and est.margin == pytest.approx(abs(est.p0_hat - 0.5))
    with pytest.raises(InvalidArgument):
        qnd_estimate(s, B, 0, np.random.default_rng(0))


def test_sample_matches_binomial_moments():
    s = QuantumState([math.sqrt(0.2), math.sqrt(0.8)], [B])
    draws = qnd_sample(s, B, 100, np.random.default_rng(4), 20_000)
    assert draws.mean() == pytest.approx(0.2, abs=0.002)
    assert draws.var() == pytest.approx(0.2 * 0.8 / 100, rel=0.05)


def test_prior_decoding_handles_asymmetric_hypotheses():
    # biased register: bit 0 -> 0.99, bit 1 -> 0.9
    assert decode_with_prior(0.985, 10_000, 0.99, 0.9) == 0
    assert decode_with_prior(0.905, 10_000, 0.99, 0.9) == 1
    # plain decoding would call both of these 0
    assert decode(0.905) == 0


def test_anomaly_detector():
    honest = [[{"p0_hat": 0.803, "expected": [0.8, 0.2]}, {"p0_hat": 0.197, "expected": [0.8, 0.2]}]]
    collapsed = [[{"p0_hat": 1.0, "expected": [0.8, 0.2]}]]
    mixed = [[{"p0_hat": 0.5, "expected": [0.8, 0.2]}]]
    assert not qnd_anomaly(honest, 10_000)
    assert qnd_anomaly(collapsed, 10_000)
    assert qnd_anomaly(mixed, 10_000)
    assert not qnd_anomaly([[]], 10_000)
