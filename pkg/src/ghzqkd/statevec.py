"""Dense state-vector engine.

Qubit order convention: the first label in ``QuantumState.labels`` is the
most significant bit of the amplitude index.  ``|q0 q1 ... q_{n-1}>`` is stored
at index ``q0 * 2**(n-1) + ... + q_{n-1}``.

Every stochastic operation takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, QubitNotFound

NORM_TOL = 1e-10
SQRT1_2 = 1.0 / math.sqrt(2.0)


class QubitId(NamedTuple):
    owner: str
    index: int

    def __str__(self) -> str:
        return f"{self.owner}[{self.index}]"


class Gate(str, Enum):
    H = "H"
    X = "X"
    Z = "Z"
    CNOT = "CNOT"


GATE_MATRICES = {
    Gate.H: np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2,
    Gate.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    Gate.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

Basis = Union[str, float]


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def basis_angle(basis: Basis) -> float:
    """Angle of the measured observable ``cos(t) Z + sin(t) X``."""
    if isinstance(basis, str):
        if basis == "Z":
            return 0.0
        if basis == "X":
            return math.pi / 2
        raise InvalidArgument(f"unknown basis {basis!r}")
    return float(basis)


@dataclass(frozen=True)
class MeasurementRecord:
    qubit: QubitId
    basis: Basis
    outcome: int
    probability: float


class QuantumState:
    """Amplitude vector over an ordered list of labelled qubits."""

    def __init__(self, amplitudes, labels: Sequence[QubitId], *, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        labels = [QubitId(*q) for q in labels]
        if len(set(labels)) != len(labels):
            raise InvalidArgument(f"duplicate qubit labels: {labels}")
        if amps.size != 2 ** len(labels):
            raise InvalidArgument(
                f"{amps.size} amplitudes do not match {len(labels)} qubits"
            )
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise InvalidArgument("zero vector cannot be normalized")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise InvalidArgument(f"amplitudes have norm {norm}, expected 1")
        self.amplitudes = amps.copy()
        self.labels = labels

    @classmethod
    def zeros(cls, labels: Sequence[QubitId]) -> "QuantumState":
        amps = np.zeros(2 ** len(labels), dtype=complex)
        amps[0] = 1.0
        return cls(amps, labels)

    @classmethod
    def single(cls, label: QubitId, alpha: complex, beta: complex) -> "QuantumState":
        return cls([alpha, beta], [label], normalize=True)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __contains__(self, qubit) -> bool:
        return qubit in self.labels

    def __repr__(self) -> str:
        names = ", ".join(map(str, self.labels))
        return f"QuantumState([{names}])"

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes, self.labels)

    def position(self, qubit: QubitId) -> int:
        try:
            return self.labels.index(qubit)
        except ValueError:
            raise QubitNotFound(qubit) from None

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def append(self, label: QubitId, alpha: complex = 1.0, beta: complex = 0.0) -> None:
        """Append a fresh qubit ``alpha|0> + beta|1>`` as least significant bit."""
        single = np.array([alpha, beta], dtype=complex)
        single /= np.linalg.norm(single)
        self.extend(QuantumState(single, [label]))

    def extend(self, other: "QuantumState") -> None:
        """Replace this state by ``self (x) other``."""
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise InvalidArgument(f"labels already present: {sorted(map(str, clash))}")
        self.amplitudes = np.kron(self.amplitudes, other.amplitudes)
        self.labels = self.labels + list(other.labels)

    def relabel(self, old: QubitId, new: QubitId) -> None:
        pos = self.position(old)
        if new in self.labels:
            raise InvalidArgument(f"label {new} already present")
        self.labels[pos] = QubitId(*new)

    def reordered(self, labels: Sequence[QubitId]) -> np.ndarray:
        """Amplitudes permuted to the given label order."""
        if set(labels) != set(self.labels) or len(labels) != self.n:
            raise InvalidArgument("label sets differ")
        perm = [self.position(q) for q in labels]
        return np.transpose(self.tensor(), perm).reshape(-1)

    def apply_unitary(self, matrix: np.ndarray, qubits: Sequence[QubitId]) -> None:
        axes = [self.position(q) for q in qubits]
        if len(set(axes)) != len(axes):
            raise InvalidArgument("repeated target qubit")
        k = len(axes)
        gate = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
        out = np.tensordot(gate, self.tensor(), axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
        self.amplitudes = np.ascontiguousarray(out).reshape(-1)


def _as_targets(targets) -> list[QubitId]:
    if isinstance(targets, QubitId):
        return [targets]
    if isinstance(targets, tuple) and len(targets) == 2 and isinstance(targets[0], str):
        return [QubitId(*targets)]
    return [QubitId(*t) for t in targets]


def apply_gate(state: QuantumState, gate: Gate | str, targets) -> None:
    """Apply H, X, Z to one qubit or CNOT to ``(control, target)``."""
    gate = Gate(gate)
    qubits = _as_targets(targets)
    expected = 2 if gate is Gate.CNOT else 1
    if len(qubits) != expected:
        raise InvalidArgument(f"{gate.value} takes {expected} qubit(s), got {len(qubits)}")
    state.apply_unitary(GATE_MATRICES[gate], qubits)


def ghz_amplitudes(n: int) -> np.ndarray:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = SQRT1_2
    return amps


def prepare_ghz(count: int, owners: Sequence[QubitId]) -> QuantumState:
    """H on the first qubit then a CNOT chain ``q_i -> q_{i+1}``."""
    if count < 1:
        raise InvalidArgument("GHZ state needs at least one qubit")
    if len(owners) != count:
        raise InvalidArgument(f"count={count} but {len(owners)} labels given")
    state = QuantumState.zeros(owners)
    apply_gate(state, Gate.H, state.labels[0])
    for ctrl, tgt in zip(state.labels, state.labels[1:]):
        apply_gate(state, Gate.CNOT, (ctrl, tgt))
    return state


def marginal_prob0(state: QuantumState, qubit: QubitId) -> float:
    """Probability that ``qubit`` reads 0; the state is left untouched."""
    axis = state.position(qubit)
    slab = np.take(state.tensor(), 0, axis=axis)
    return float(np.vdot(slab, slab).real)


def _project_z(state: QuantumState, axis: int, outcome: int, prob: float) -> None:
    psi = state.tensor().copy()
    index = [slice(None)] * state.n
    index[axis] = 1 - outcome
    psi[tuple(index)] = 0.0
    state.amplitudes = psi.reshape(-1) / math.sqrt(prob)


def measure(
    state: QuantumState,
    qubit: QubitId,
    rng: np.random.Generator | None,
    basis: Basis = "Z",
    force: int | None = None,
) -> MeasurementRecord:
    """Projective measurement of ``cos(t) Z + sin(t) X``; outcome 0 is eigenvalue +1.

    The measured qubit stays in the register.  ``force`` post-selects an
    outcome instead of sampling (used by oracles and branch enumeration).
    """
    theta = basis_angle(basis)
    if theta != 0.0:
        state.apply_unitary(ry(-theta), [qubit])
    axis = state.position(qubit)
    p0 = marginal_prob0(state, qubit)
    p0 = min(max(p0, 0.0), 1.0)
    if force is None:
        if rng is None:
            raise InvalidArgument("rng required when outcome is not forced")
        outcome = 0 if rng.random() < p0 else 1
    else:
        outcome = int(force)
    prob = p0 if outcome == 0 else 1.0 - p0
    if prob <= 1e-15:
        raise PreconditionViolation(f"outcome {outcome} on {qubit} has zero probability")
    _project_z(state, axis, outcome, prob)
    if theta != 0.0:
        state.apply_unitary(ry(theta), [qubit])
    return MeasurementRecord(QubitId(*qubit), basis, outcome, prob)


def measure_z(state: QuantumState, qubit: QubitId, rng, force: int | None = None) -> MeasurementRecord:
    return measure(state, qubit, rng, "Z", force)


@dataclass(frozen=True)
class BsmOutcome:
    """Bell measurement result; ``(phase, parity)`` indexes Phi+, Phi-, Psi+, Psi-."""

    bit_phase: int
    bit_parity: int
    probability: float = field(default=1.0, compare=False)

    @property
    def bell_state(self) -> str:
        return {(0, 0): "Phi+", (1, 0): "Phi-", (0, 1): "Psi+", (1, 1): "Psi-"}[
            (self.bit_phase, self.bit_parity)
        ]

    @property
    def bits(self) -> tuple[int, int]:
        return (self.bit_phase, self.bit_parity)


def remove_qubit(state: QuantumState, qubit: QubitId) -> None:
    """Drop a qubit whose Z value is already definite."""
    axis = state.position(qubit)
    p0 = marginal_prob0(state, qubit)
    if p0 >= 1.0 - NORM_TOL:
        keep = 0
    elif p0 <= NORM_TOL:
        keep = 1
    else:
        raise PreconditionViolation(
            f"{qubit} is not in a definite Z state (P0={p0:.3g}); measure it first"
        )
    slab = np.take(state.tensor(), keep, axis=axis).reshape(-1)
    state.amplitudes = slab / np.linalg.norm(slab)
    del state.labels[axis]


def bsm(
    state: QuantumState,
    qubit_a: QubitId,
    qubit_b: QubitId,
    rng,
    force: tuple[int, int] | None = None,
) -> BsmOutcome:
    """Bell-basis measurement of ``(qubit_a, qubit_b)``; both qubits are removed."""
    if QubitId(*qubit_a) == QubitId(*qubit_b):
        raise InvalidArgument("Bell measurement needs two distinct qubits")
    state.position(qubit_a), state.position(qubit_b)
    apply_gate(state, Gate.CNOT, (qubit_a, qubit_b))
    apply_gate(state, Gate.H, qubit_a)
    fa, fb = (None, None) if force is None else force
    phase = measure(state, qubit_a, rng, "Z", fa)
    parity = measure(state, qubit_b, rng, "Z", fb)
    remove_qubit(state, qubit_a)
    remove_qubit(state, qubit_b)
    return BsmOutcome(phase.outcome, parity.outcome, phase.probability * parity.probability)


def fidelity(state: QuantumState, other: QuantumState | np.ndarray) -> float:
    """``|<other|state>|^2``; a bare array is taken in ``state``'s label order."""
    if isinstance(other, QuantumState):
        vec = other.reordered(state.labels)
    else:
        vec = np.asarray(other, dtype=complex).reshape(-1)
    return float(abs(np.vdot(vec, state.amplitudes)) ** 2)


def two_term_amplitudes(n: int, alpha: complex, beta: complex) -> np.ndarray:
    """``alpha|0...0> + beta|1...1>`` over ``n`` qubits."""
    amps = np.zeros(2**n, dtype=complex)
    amps[0], amps[-1] = alpha, beta
    return amps


def owned_by(state: QuantumState, prefix: str) -> list[QubitId]:
    return [q for q in state.labels if q.owner.startswith(prefix)]


def labels(owner: str, count: int, start: int = 0) -> list[QubitId]:
    return [QubitId(owner, i) for i in range(start, start + count)]


def random_state(labels_: Iterable[QubitId], rng: np.random.Generator) -> QuantumState:
    labels_ = list(labels_)
    dim = 2 ** len(labels_)
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState(vec, labels_, normalize=True)
