"""Alice/Bob key exchange over one shared GHZ register.

Per key bit: Alice teleports an encoded ancilla through her next GHZ qubit,
broadcasts the two BSM bits, both sides apply the Pauli correction, every Bob
reads his qubit non-destructively, and Alice resets the surviving register.
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .adversary import EveModel, attack_on_transit, eve_eavesdrop_classical
from .errors import (
    ChannelAbort,
    GhzQkdError,
    InvalidArgument,
    InvalidState,
    ProtocolExhausted,
    ResetFailed,
)
from .qnd import decode_with_prior, qnd_anomaly, qnd_estimate
from .report import RunReport, count_shared_bits
from .reset import reset_adaptive, reset_baseline, squared_drift
from .statevec import (
    Gate,
    QuantumState,
    QubitId,
    apply_gate,
    bsm,
    measure,
    owned_by,
    prepare_ghz,
    remove_qubit,
)

MAX_QUBITS = 20


class ResetStrategy(str, Enum):
    BASELINE = "baseline"
    ADAPTIVE = "adaptive"


class ResetFallback(str, Enum):
    """What the exchange does when a reset leaves the register non-uniform."""

    REGENERATE = "regenerate"  # rebuild the GHZ register and resend Bob's qubit
    CARRY = "carry"  # keep the biased register, decode against the known bias
    ABORT = "abort"


@dataclass(frozen=True)
class ProtocolConfig:
    key_length: int
    alpha0_sq: float = 0.8
    qnd_shots: int = 10_000
    channel_loss_p: float = 0.0
    reset_strategy: ResetStrategy = ResetStrategy.ADAPTIVE
    receivers: int = 1
    seed: int = 0
    max_transmissions: int = 1000
    reset_bound: int = 64
    reset_fallback: ResetFallback = ResetFallback.REGENERATE

    def __post_init__(self):
        try:
            object.__setattr__(self, "reset_strategy", ResetStrategy(self.reset_strategy))
            object.__setattr__(self, "reset_fallback", ResetFallback(self.reset_fallback))
        except ValueError as exc:
            raise InvalidArgument(str(exc)) from None
        for name in ("key_length", "qnd_shots", "receivers", "max_transmissions", "reset_bound", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidArgument(f"{name} must be an integer, got {value!r}")
        if self.key_length < 1:
            raise InvalidArgument("key_length must be >= 1")
        if self.receivers < 1:
            raise InvalidArgument("receivers must be >= 1")
        if self.key_length + self.receivers > MAX_QUBITS:
            raise InvalidArgument(
                f"key_length + receivers = {self.key_length + self.receivers} exceeds {MAX_QUBITS} qubits"
            )
        if not 0.5 < self.alpha0_sq < 1.0:
            raise InvalidArgument("alpha0_sq must lie strictly between 0.5 and 1")
        if self.qnd_shots < 1:
            raise InvalidArgument("qnd_shots must be >= 1")
        if not 0.0 <= self.channel_loss_p < 1.0:
            raise InvalidArgument("channel_loss_p must lie in [0, 1)")
        if self.max_transmissions < 1 or self.reset_bound < 1:
            raise InvalidArgument("max_transmissions and reset_bound must be >= 1")

    def amplitudes(self, bit: int) -> tuple[float, float]:
        """Real ``(alpha, beta)`` for the ancilla carrying ``bit``."""
        if bit not in (0, 1):
            raise InvalidArgument(f"key bits must be 0 or 1, got {bit!r}")
        a_sq = self.alpha0_sq if bit == 0 else 1.0 - self.alpha0_sq
        return math.sqrt(a_sq), math.sqrt(1.0 - a_sq)

    def echo(self) -> dict:
        data = asdict(self)
        data["reset_strategy"] = self.reset_strategy.value
        data["reset_fallback"] = self.reset_fallback.value
        return data


class MessageKind(str, Enum):
    BSM_RESULT = "BsmResult"
    RESET_NOTICE = "ResetNotice"
    CHSH_REQUEST = "ChshRequest"
    CHSH_SETTINGS = "ChshSettings"
    CHSH_OUTCOME = "ChshOutcome"
    DONE = "Done"


@dataclass(frozen=True)
class ClassicalMessage:
    kind: MessageKind
    round: int
    payload: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", MessageKind(self.kind))
        object.__setattr__(self, "payload", tuple(self.payload))
        if self.kind is MessageKind.BSM_RESULT:
            if len(self.payload) != 2 or any(b not in (0, 1) for b in self.payload):
                raise InvalidArgument(f"BsmResult payload must be two bits, got {self.payload}")

    @property
    def bits(self) -> int:
        """Classical cost of one copy of the message."""
        if self.kind is MessageKind.DONE:
            return 0
        return len(self.payload)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "round": self.round, "payload": list(self.payload)}

    @classmethod
    def from_dict(cls, data: dict) -> "ClassicalMessage":
        return cls(data["kind"], int(data["round"]), tuple(data["payload"]))


def write_transcript(messages: Iterable[ClassicalMessage], path) -> None:
    """One JSON object per line with fields kind, round, payload."""
    with open(path, "w", encoding="utf-8") as fh:
        for msg in messages:
            fh.write(json.dumps(msg.to_dict(), sort_keys=True) + "\n")


def read_transcript(path) -> list[ClassicalMessage]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ClassicalMessage.from_dict(json.loads(line)) for line in lines if line.strip()]


@dataclass
class PartyState:
    role: str
    held_qubits: list = field(default_factory=list)
    pending_key_bits: list = field(default_factory=list)
    recovered_bits: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    qnd_records: list = field(default_factory=list)
    # weight of |0...0> in the register as this party currently believes it
    prior: float = 0.5


class IdAllocator:
    """Hands out ``QubitId``s that are never reused within one simulation."""

    def __init__(self):
        self._next: Counter = Counter()

    def __call__(self, owner: str) -> QubitId:
        idx = self._next[owner]
        self._next[owner] += 1
        return QubitId(owner, idx)


def encode_ancilla(bit: int, config: ProtocolConfig, label: QubitId = QubitId("alice_anc", 0)) -> QuantumState:
    alpha, beta = config.amplitudes(bit)
    return QuantumState([alpha, beta], [label])


def expected_p0(alpha0_sq: float, prior: float, parity: int) -> tuple[float, float]:
    """Bob's post-correction ``P(0)`` for key bit 0 and key bit 1.

    ``prior`` is the weight of ``|0...0>`` in the register before the
    teleportation; it is 0.5 whenever the register was uniform.
    """
    out = []
    for h in (alpha0_sq, 1.0 - alpha0_sq):
        if parity == 0:
            num, other = h * prior, (1.0 - h) * (1.0 - prior)
        else:
            num, other = h * (1.0 - prior), (1.0 - h) * prior
        out.append(num / (num + other))
    return out[0], out[1]


def distribute(
    state: QuantumState,
    config: ProtocolConfig,
    rng: np.random.Generator,
    eve: EveModel | None = None,
    alloc=None,
) -> int:
    """Send every Bob-owned qubit across a lossy channel; returns channel uses.

    Loss is heralded: the lost qubit is measured out in the X basis, a
    ``-`` outcome is fixed with Z on Alice's first qubit, and a fresh qubit
    is CNOT-entangled from that qubit and sent again.
    """
    alloc = alloc or IdAllocator()
    eve = eve or EveModel()
    alice = _held_by(state, "alice")
    if not alice:
        raise InvalidState("Alice holds no qubit to re-entangle from")
    anchor = alice[0]
    bobs = sorted({q.owner for q in owned_by(state, "bob")})
    used = 0
    for owner in bobs:
        qubit = _held_by(state, owner)[0]
        tries = 0
        while True:
            if tries >= config.max_transmissions:
                raise ChannelAbort(
                    f"{owner}: no delivery after {tries} transmissions", used + tries
                )
            tries += 1
            if config.channel_loss_p > 0.0 and rng.random() < config.channel_loss_p:
                record = measure(state, qubit, rng, "X")
                apply_gate(state, Gate.H, qubit)
                remove_qubit(state, qubit)
                if record.outcome:
                    apply_gate(state, Gate.Z, anchor)
                qubit = alloc(owner)
                state.append(qubit)
                apply_gate(state, Gate.CNOT, (anchor, qubit))
                continue
            break
        used += tries
        attack_on_transit(eve, state, qubit, rng, alloc=alloc)
    return used


def teleport(
    state: QuantumState,
    amplitudes: tuple[complex, complex],
    ancilla: QubitId,
    target: QubitId,
    alice_rest: Sequence[QubitId],
    bob_qubits: Sequence[QubitId],
    rng,
    force: tuple[int, int] | None = None,
):
    """Bell-measure a fresh ancilla against ``target`` and apply corrections.

    Afterwards ``alice_rest + bob_qubits`` hold ``a|0...0> + b|1...1>``.  Every
    Bob applies the textbook Pauli fix; Alice flips her own qubits on odd
    parity and, when the receiver count is even, adds the Z that makes the
    total number of phase flips odd.
    """
    state.append(ancilla, *amplitudes)
    outcome = bsm(state, ancilla, target, rng, force)
    phase, parity = outcome.bits
    for q in bob_qubits:
        if parity:
            apply_gate(state, Gate.X, q)
        if phase:
            apply_gate(state, Gate.Z, q)
    if parity:
        for q in alice_rest:
            apply_gate(state, Gate.X, q)
    if phase and len(bob_qubits) % 2 == 0:
        # on the final bit Alice has nothing left, so the first Bob takes it
        apply_gate(state, Gate.Z, alice_rest[0] if alice_rest else bob_qubits[0])
    return outcome


def _held_by(state: QuantumState, owner: str) -> list[QubitId]:
    return [q for q in state.labels if q.owner == owner]


class _Abort(GhzQkdError):
    pass


class KeyExchange:
    """One run of the protocol between Alice and ``config.receivers`` Bobs."""

    def __init__(
        self,
        config: ProtocolConfig,
        key: Sequence[int] | None = None,
        eve: EveModel | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        if key is None:
            key = self.rng.integers(0, 2, size=config.key_length).tolist()
        key = [int(b) for b in key]
        if len(key) != config.key_length or any(b not in (0, 1) for b in key):
            raise InvalidArgument(f"key must be {config.key_length} bits, got {key}")
        self.key = key
        self.eve = eve if eve is not None else EveModel()
        self.ids = IdAllocator()
        self.alice = PartyState("alice", pending_key_bits=list(key))
        self.bobs = [PartyState(f"bob{k + 1}") for k in range(config.receivers)]
        self.state: QuantumState | None = None
        self.transcript: list[ClassicalMessage] = []
        self.q_t = 0
        self.classical_bits = 0
        self.reset_histogram: Counter = Counter()
        self.reset_failures = 0
        self.regenerations = 0

    # -- steps ---------------------------------------------------------
    def prepare(self, alice_count: int | None = None) -> None:
        count = self.config.key_length if alice_count is None else alice_count
        alice_ids = [self.ids("alice") for _ in range(count)]
        bob_ids = [self.ids(bob.role) for bob in self.bobs]
        self.state = prepare_ghz(count + len(bob_ids), alice_ids + bob_ids)
        self.alice.held_qubits = alice_ids
        for bob, q in zip(self.bobs, bob_ids):
            bob.held_qubits = [q]
            bob.prior = 0.5

    def distribute(self) -> int:
        try:
            used = distribute(self.state, self.config, self.rng, self.eve, self.ids)
        except ChannelAbort as exc:
            self.q_t += exc.transmissions
            raise
        self.q_t += used
        for bob in self.bobs:
            bob.held_qubits = _held_by(self.state, bob.role)
        return used

    def send(self, kind: MessageKind, rnd: int, payload=()) -> ClassicalMessage:
        msg = ClassicalMessage(kind, rnd, payload)
        self.transcript.append(msg)
        self.classical_bits += msg.bits * len(self.bobs)
        for bob in self.bobs:
            bob.transcript.append(msg)
        eve_eavesdrop_classical(self.eve, msg, self.state, self.config.qnd_shots, self.rng)
        return msg

    def teleport_bit(self, rnd: int, bit: int, force=None):
        if not self.alice.held_qubits:
            raise ProtocolExhausted("Alice has no GHZ qubit left")
        ancilla = self.ids("alice_anc")
        target = self.alice.held_qubits.pop(0)
        outcome = teleport(
            self.state,
            self.config.amplitudes(bit),
            ancilla,
            target,
            self.alice.held_qubits,
            [bob.held_qubits[0] for bob in self.bobs],
            self.rng,
            force,
        )
        self.alice.pending_key_bits.pop(0)
        self.send(MessageKind.BSM_RESULT, rnd, outcome.bits)
        return outcome

    def decode(self, rnd: int, outcome) -> list[int]:
        parity = outcome.bit_parity
        shots = self.config.qnd_shots
        bits = []
        for bob in self.bobs:
            est = qnd_estimate(self.state, bob.held_qubits[0], shots, self.rng)
            p_if0, p_if1 = expected_p0(self.config.alpha0_sq, bob.prior, parity)
            if bob.prior == 0.5:
                bit = est.decoded_bit
            else:
                bit = decode_with_prior(est.p0_hat, shots, p_if0, p_if1)
            bob.recovered_bits.append(bit)
            bob.qnd_records.append(
                {"round": rnd, "p0_hat": est.p0_hat, "expected": [p_if0, p_if1], "decoded": bit}
            )
            bob.prior = p_if0 if bit == 0 else p_if1
            bits.append(bit)
        return bits

    def register(self) -> list[QubitId]:
        """Alice's qubits first, then every other qubit tied to the GHZ block."""
        held = list(self.alice.held_qubits)
        private = set(self.eve.private_qubits)
        rest = [q for q in self.state.labels if q not in held and q not in private]
        return held + rest

    def reset(self, rnd: int) -> bool:
        register = self.register()
        n_alice = len(self.alice.held_qubits)
        alloc = lambda: self.ids("alice")  # noqa: E731
        reason = None
        try:
            if self.config.reset_strategy is ResetStrategy.BASELINE:
                attempts, ok = reset_baseline(
                    self.state, register, self.rng, self.config.reset_bound, alloc=alloc
                )
                if not ok:
                    reason = f"baseline reset gave up after {len(attempts)} attempts"
            else:
                attempts, ok = reset_adaptive(
                    self.state, register, self.rng, self.config.reset_bound, alloc=alloc
                )
        except ResetFailed as exc:
            attempts, ok, reason = exc.attempts, False, str(exc)
        except InvalidState as exc:
            attempts, ok, reason = [], False, f"invalid-state: {exc}"
        self.alice.held_qubits = register[:n_alice]
        self.reset_histogram[len(attempts)] += 1
        outcomes = tuple(a.outcome for a in attempts)
        self.send(MessageKind.RESET_NOTICE, rnd, (int(ok),) + outcomes)
        for bob in self.bobs:
            if ok:
                bob.prior = 0.5
            else:
                for _ in outcomes:
                    bob.prior = squared_drift(bob.prior)
        if ok:
            return True
        self.reset_failures += 1
        fallback = self.config.reset_fallback
        if fallback is ResetFallback.ABORT:
            raise _Abort(f"reset-failed in round {rnd}: {reason}")
        if fallback is ResetFallback.REGENERATE:
            self.regenerate()
        return False

    def regenerate(self) -> None:
        """Discard the register and share a fresh GHZ state of the same size."""
        self.regenerations += 1
        self.eve.drop_quantum_resources()
        self.prepare(len(self.alice.held_qubits))
        self.distribute()

    # -- driver --------------------------------------------------------
    def run(self) -> RunReport:
        start = time.perf_counter()
        abort = None
        try:
            self.prepare()
            self.distribute()
            for rnd, bit in enumerate(self.key):
                outcome = self.teleport_bit(rnd, bit)
                self.decode(rnd, outcome)
                if self.alice.held_qubits:
                    self.reset(rnd)
            self.send(MessageKind.DONE, len(self.key))
        except ChannelAbort as exc:
            abort = f"channel-abort: {exc}"
        except _Abort as exc:
            abort = str(exc)
        except ProtocolExhausted as exc:
            abort = f"protocol-exhausted: {exc}"
        return self._report(abort, start)

    def _report(self, abort: str | None, start: float) -> RunReport:
        recovered = [list(bob.recovered_bits) for bob in self.bobs]
        errors = [
            [i for i, bit in enumerate(self.key) if i >= len(rec) or rec[i] != bit]
            for rec in recovered
        ]
        b_s = count_shared_bits(self.key, recovered)
        records = [list(bob.qnd_records) for bob in self.bobs]
        return RunReport(
            config_echo=self.config.echo(),
            seed=int(self.config.seed),
            sent_key=list(self.key),
            recovered_keys=recovered,
            bit_errors=errors,
            q_t=self.q_t,
            classical_bits=self.classical_bits,
            b_s=b_s,
            eta=b_s / self.q_t if self.q_t else None,
            delivered_bits_total=sum(len(self.key) - len(e) for e in errors),
            reset_strategy=self.config.reset_strategy.value,
            reset_attempt_histogram=dict(self.reset_histogram),
            reset_failures=self.reset_failures,
            regenerations=self.regenerations,
            qnd_records=records,
            eve_summary=self.eve.summary(self.key) if self.eve.active else None,
            qnd_anomaly=qnd_anomaly(records, self.config.qnd_shots),
            abort_reason=abort,
            wall_time_ms=int(round((time.perf_counter() - start) * 1000)),
        )


def run_key_exchange(
    config: ProtocolConfig,
    key: Sequence[int] | None = None,
    eve: EveModel | None = None,
    rng: np.random.Generator | None = None,
) -> RunReport:
    return KeyExchange(config, key, eve, rng).run()
