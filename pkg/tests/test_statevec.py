import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzqkd import oracle
from ghzqkd.errors import InvalidArgument, PreconditionViolation, QubitNotFound
from ghzqkd.statevec import (
    Gate,
    QuantumState,
    QubitId,
    apply_gate,
    bsm,
    fidelity,
    ghz_amplitudes,
    labels,
    marginal_prob0,
    measure,
    prepare_ghz,
    random_state,
    remove_qubit,
    two_term_amplitudes,
)

from helpers import programs_agree

Q = labels("q", 6)


def test_qubit_id_str():
    assert str(QubitId("alice", 3)) == "alice[3]"


def test_rejects_bad_construction():
    with pytest.raises(InvalidArgument):
        QuantumState([1, 0, 0], Q[:2])
    with pytest.raises(InvalidArgument):
        QuantumState([1, 0, 0, 0], [Q[0], Q[0]])
    with pytest.raises(InvalidArgument):
        QuantumState([1, 1, 0, 0], Q[:2])
    s = QuantumState([1, 1, 0, 0], Q[:2], normalize=True)
    assert s.norm() == pytest.approx(1.0)


def test_unknown_qubit():
    s = QuantumState.zeros(Q[:2])
    with pytest.raises(QubitNotFound):
        s.position(QubitId("bob", 0))
    with pytest.raises(QubitNotFound):
        apply_gate(s, Gate.H, QubitId("bob", 0))


def test_first_label_is_most_significant():
    s = QuantumState.zeros(Q[:3])
    apply_gate(s, Gate.X, Q[0])
    assert np.argmax(np.abs(s.amplitudes)) == 0b100


@pytest.mark.parametrize("n", range(1, 8))
def test_prepare_ghz_matches_circuit_oracle(n):
    s = prepare_ghz(n, Q[:n] if n <= 6 else labels("q", n))
    assert np.allclose(s.amplitudes, oracle.ghz_by_circuit(n), atol=1e-12)
    assert fidelity(s, ghz_amplitudes(n)) == pytest.approx(1.0, abs=1e-12)


def test_prepare_ghz_rejects_empty():
    with pytest.raises(InvalidArgument):
        prepare_ghz(0, [])


def test_bsm_needs_distinct_qubits():
    s = prepare_ghz(3, Q[:3])
    with pytest.raises(InvalidArgument):
        bsm(s, Q[0], Q[0], np.random.default_rng(0))


def test_forced_impossible_outcome():
    s = QuantumState.zeros(Q[:1])
    with pytest.raises(PreconditionViolation):
        measure(s, Q[0], None, "Z", force=1)


def test_measure_needs_rng_unless_forced():
    s = prepare_ghz(2, Q[:2])
    with pytest.raises(InvalidArgument):
        measure(s, Q[0], None)


def test_remove_requires_definite_value():
    s = prepare_ghz(2, Q[:2])
    with pytest.raises(PreconditionViolation):
        remove_qubit(s, Q[0])


def test_x_basis_measurement_of_plus_state():
    s = QuantumState.single(Q[0], 1 / math.sqrt(2), 1 / math.sqrt(2))
    for seed in range(20):
        rec = measure(s.copy(), Q[0], np.random.default_rng(seed), "X")
        assert rec.outcome == 0 and rec.probability == pytest.approx(1.0)


def test_ghz_z_measurement_collapses_everything():
    s = prepare_ghz(4, Q[:4])
    rec = measure(s, Q[2], np.random.default_rng(7))
    expected = np.zeros(16)
    expected[0 if rec.outcome == 0 else 15] = 1.0
    assert fidelity(s, expected) == pytest.approx(1.0)


def test_bsm_branch_probabilities_sum_to_one():
    rng = np.random.default_rng(3)
    base = random_state(Q[:4], rng)
    total = 0.0
    for outcome in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        total += bsm(base.copy(), Q[1], Q[3], None, force=outcome).probability
    assert total == pytest.approx(1.0, abs=1e-12)


def test_bsm_bell_state_names():
    rng = np.random.default_rng(0)
    names = {(0, 0): "Phi+", (1, 0): "Phi-", (0, 1): "Psi+", (1, 1): "Psi-"}
    for (phase, parity), vec in oracle.BELL_VECTORS.items():
        s = QuantumState(np.kron(vec, [1, 0]), Q[:3])
        out = bsm(s, Q[0], Q[1], rng)
        assert out.bits == (phase, parity)
        assert out.bell_state == names[out.bits]
        assert s.labels == [Q[2]]


def test_append_and_extend_match_kron():
    rng = np.random.default_rng(11)
    a = random_state(Q[:2], rng)
    b = random_state(Q[2:4], rng)
    joined = a.copy()
    joined.extend(b)
    assert np.allclose(joined.amplitudes, np.kron(a.amplitudes, b.amplitudes))
    a.append(Q[5], 0.6, 0.8j)
    assert np.allclose(a.amplitudes[1::2] / a.amplitudes[0::2], 0.8j / 0.6)


def test_relabel_and_reorder():
    rng = np.random.default_rng(2)
    s = random_state(Q[:3], rng)
    t = QuantumState(s.reordered([Q[2], Q[0], Q[1]]), [Q[2], Q[0], Q[1]])
    assert fidelity(s, t) == pytest.approx(1.0)
    s.relabel(Q[0], QubitId("x", 0))
    assert QubitId("x", 0) in s and Q[0] not in s


def test_two_term_marginals():
    s = QuantumState(two_term_amplitudes(3, math.sqrt(0.8), math.sqrt(0.2)), Q[:3])
    for q in Q[:3]:
        assert marginal_prob0(s, q) == pytest.approx(0.8)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_programs_match_matrix_oracle(seed):
    ok, err = programs_agree(np.random.default_rng(seed))
    assert ok, err


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(list(Gate)))
def test_gates_preserve_norm(n, seed, gate):
    rng = np.random.default_rng(seed)
    s = random_state(Q[:n], rng)
    if gate is Gate.CNOT:
        if n < 2:
            return
        c, t = rng.choice(n, size=2, replace=False)
        apply_gate(s, gate, (Q[c], Q[t]))
    else:
        apply_gate(s, gate, Q[int(rng.integers(n))])
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi))
def test_measurement_statistics_match_projector(seed, theta):
    rng = np.random.default_rng(seed)
    s = random_state(Q[:3], rng)
    p_or = oracle.run_program(s.amplitudes, Q[:3], [("MEASURE", Q[1], theta, 0)])[2][0]
    with np.errstate(all="ignore"):
        rec = measure(s.copy(), Q[1], None, theta, force=0 if p_or > 1e-9 else 1)
    expected = p_or if rec.outcome == 0 else 1 - p_or
    assert rec.probability == pytest.approx(expected, abs=1e-12)
