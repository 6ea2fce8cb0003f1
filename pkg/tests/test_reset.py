import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzqkd import oracle
from ghzqkd.errors import InvalidArgument, InvalidState, ResetFailed
from ghzqkd.reset import (
    attempt_schedule,
    register_coefficients,
    reset_adaptive,
    reset_attempt,
    reset_baseline,
    squared_drift,
    success_ceiling,
    total_success_probability,
    verify_uniform_ghz,
)
from ghzqkd.statevec import QuantumState, QubitId, labels, prepare_ghz, two_term_amplitudes

A = labels("alice", 5)
ANC = QubitId("anc", 0)


def biased(n, alpha_sq, phase=0.0):
    amps = two_term_amplitudes(n, math.sqrt(alpha_sq), math.sqrt(1 - alpha_sq) * np.exp(1j * phase))
    return QuantumState(amps, A[:n])


def _exact_total(alpha_sq: Fraction, steps: int) -> Fraction:
    m, total, reach = alpha_sq, Fraction(0), Fraction(1)
    for _ in range(steps):
        s = 2 * m * (1 - m)
        total += reach * s
        reach *= 1 - s
        m = m * m / (m * m + (1 - m) ** 2)
    return total


def test_coefficients_read_back():
    a, b = register_coefficients(biased(3, 0.7, 0.4), A[:3])
    assert a == pytest.approx(math.sqrt(0.7))
    assert b == pytest.approx(math.sqrt(0.3) * np.exp(0.4j))


def test_coefficients_reject_leakage_and_small_registers():
    s = prepare_ghz(3, A[:3])
    with pytest.raises(InvalidState):
        register_coefficients(s, A[:1])
    s.amplitudes[:] = 0
    s.amplitudes[1] = 1.0
    with pytest.raises(InvalidState):
        register_coefficients(s, A[:3])


def test_coefficients_reject_entanglement_outside_register():
    s = prepare_ghz(3, A[:3])
    with pytest.raises(InvalidState):
        register_coefficients(s, A[:2])


@pytest.mark.parametrize("alpha_sq", [0.6, 0.8, 0.9])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_attempt_matches_brute_force(alpha_sq, n):
    """Ancilla, CNOT and measurement replayed with explicit matrices."""
    a, b = math.sqrt(alpha_sq), math.sqrt(1 - alpha_sq)
    start = two_term_amplitudes(n, a, b)
    for outcome in (0, 1):
        s = QuantumState(start, A[:n])
        reg = list(A[:n])
        att = reset_attempt(s, reg, ANC, (a, b), None, force=outcome)
        vec = np.kron(start, [b, a])
        lab = list(A[:n]) + [ANC]
        prog = [("CNOT", ANC, A[0]), ("MEASURE", A[0], 0.0, outcome), ("REMOVE", A[0], outcome)]
        if outcome:
            prog.append(("X", ANC))
        vec, lab, probs = oracle.run_program(vec, lab, prog)
        assert s.labels == lab
        assert np.allclose(s.amplitudes, vec, atol=1e-12)
        expected_p = 2 * alpha_sq * (1 - alpha_sq)
        assert probs[0] == pytest.approx(expected_p if outcome == 0 else 1 - expected_p)
        assert att.success_probability == pytest.approx(expected_p)
        if outcome == 0:
            assert verify_uniform_ghz(s) > 1 - 1e-12
        else:
            post = abs(att.post_coeffs[0]) ** 2
            assert post == pytest.approx(squared_drift(alpha_sq))
        assert reg[0] == ANC


def test_success_fixes_relative_phase():
    s = biased(3, 0.8, phase=1.1)
    reset_attempt(s, list(A[:3]), ANC, register_coefficients(s, A[:3]), None, force=0)
    assert verify_uniform_ghz(s) > 1 - 1e-12


def test_squared_drift_frozen():
    assert squared_drift(0.8) == pytest.approx(16 / 17, abs=1e-15)
    assert squared_drift(0.5) == 0.5


@pytest.mark.parametrize("alpha_sq", [Fraction(3, 5), Fraction(4, 5), Fraction(9, 10)])
def test_total_success_hits_local_ceiling(alpha_sq):
    # exact rational recurrence, independent of the float schedule
    exact = float(_exact_total(alpha_sq, 12))
    ceiling = float(2 * min(alpha_sq, 1 - alpha_sq))
    assert exact == pytest.approx(ceiling, abs=1e-12)
    assert total_success_probability(float(alpha_sq)) == pytest.approx(exact, abs=1e-12)
    assert success_ceiling(float(alpha_sq)) == pytest.approx(ceiling)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.51, 0.99), st.integers(1, 64))
def test_bob_population_is_a_martingale(alpha_sq, bound):
    """Averaged over outcomes, reset leaves Bob's P(0) where it was."""
    m, avg, reach = alpha_sq, 0.0, 1.0
    for s in attempt_schedule(alpha_sq, bound):
        avg += reach * s * 0.5
        reach *= 1 - s
        m = squared_drift(m)
    avg += reach * m
    assert avg == pytest.approx(alpha_sq, abs=1e-9)
    assert total_success_probability(alpha_sq, bound) <= success_ceiling(alpha_sq) + 1e-12


def test_baseline_reports_failure_without_raising():
    s = biased(4, 0.9)
    rng = np.random.default_rng(5)
    attempts, ok = reset_baseline(s, list(A[:4]), rng, max_retries=1)
    assert len(attempts) == 1
    if not ok:
        assert abs(attempts[0].post_coeffs[0]) ** 2 == pytest.approx(squared_drift(0.9))


def test_baseline_rejects_bad_bound_and_product_state():
    with pytest.raises(InvalidArgument):
        reset_baseline(biased(3, 0.8), list(A[:3]), None, max_retries=0)
    product = QuantumState(two_term_amplitudes(3, 1.0, 0.0), A[:3])
    with pytest.raises(InvalidState):
        reset_baseline(product, list(A[:3]), np.random.default_rng(0))


def test_adaptive_raises_when_bound_spent():
    rng = np.random.default_rng(0)
    failures = 0
    for _ in range(50):
        try:
            reset_adaptive(biased(3, 0.8), list(A[:3]), rng, bound=1)
        except ResetFailed as exc:
            failures += 1
            assert len(exc.attempts) == 1
    assert 20 < failures < 48


def test_adaptive_success_yields_uniform_ghz():
    rng = np.random.default_rng(1)
    for _ in range(30):
        s = biased(4, 0.6)
        reg = list(A[:4])
        try:
            attempts, ok = reset_adaptive(s, reg, rng)
        except ResetFailed:
            continue
        assert ok and verify_uniform_ghz(s) > 1 - 1e-9
        assert s.n == 4 and reg[0].owner == "ancilla"
        assert reg[0] in s


def test_first_attempt_frequency():
    rng = np.random.default_rng(2024)
    trials, alpha_sq = 4000, 0.8
    wins = 0
    for _ in range(trials):
        s = biased(3, alpha_sq)
        reg = list(A[:3])
        wins += reset_attempt(s, reg, ANC, register_coefficients(s, reg), rng).outcome == 0
    p = 2 * alpha_sq * (1 - alpha_sq)
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(wins / trials - p) < 4 * sigma
