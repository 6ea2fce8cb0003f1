"""Eavesdropper strategies acting on the quantum channel and the classical log."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import InvalidArgument, InvalidSequence
from .qnd import qnd_estimate
from .statevec import (
    Gate,
    QuantumState,
    QubitId,
    apply_gate,
    measure,
    prepare_ghz,
)


class EveKind(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    ENTANGLE_ANCILLA = "entangle_ancilla"
    INTERCEPT_ENTANGLE_RESEND = "intercept_entangle_resend"


@dataclass
class EveModel:
    """Eve's strategy plus the quantum and classical resources she holds.

    ``block_qubits`` are Eve qubits that belong to Alice's GHZ register
    (the CNOT copy, or Bob's withheld original).  ``private_qubits`` are the
    members of Eve's own entangled system, including the half handed to Bob.
    """

    kind: EveKind = EveKind.NONE
    basis: str = "Z"
    system_size: int = 2
    eve_qubits: list = field(default_factory=list)
    eve_decoded_bits: list = field(default_factory=list)
    block_qubits: list = field(default_factory=list)
    private_qubits: list = field(default_factory=list)
    intercepted: set = field(default_factory=set)
    log: list = field(default_factory=list)
    known_value: int | None = None
    seen_messages: int = 0

    def __post_init__(self):
        self.kind = EveKind(self.kind)
        if self.basis not in ("Z", "X"):
            raise InvalidArgument(f"Eve basis must be Z or X, got {self.basis!r}")
        if self.system_size < 2:
            raise InvalidArgument("Eve's substitute system needs at least 2 qubits")

    @property
    def active(self) -> bool:
        return self.kind is not EveKind.NONE

    def fresh(self) -> "EveModel":
        """Same strategy, no resources; used for independent test rounds."""
        return EveModel(self.kind, self.basis, self.system_size)

    def drop_quantum_resources(self) -> None:
        """Forget qubits when Alice discards the register they were tied to."""
        self.block_qubits.clear()
        self.private_qubits.clear()
        self.known_value = None

    def extra_qubits_per_transit(self) -> int:
        if self.kind is EveKind.ENTANGLE_ANCILLA:
            return 1
        if self.kind is EveKind.INTERCEPT_ENTANGLE_RESEND:
            return self.system_size
        return 0

    def summary(self, key) -> dict:
        bits = list(self.eve_decoded_bits)
        paired = list(zip(bits, key))
        rate = sum(a == b for a, b in paired) / len(paired) if paired else None
        return {
            "kind": self.kind.value,
            "eve_decoded_bits": bits,
            "agreement_rate": rate,
            "interceptions": len(self.log),
        }


class _StateAlloc:
    """Fresh ids past every index seen in the state or issued so far."""

    def __init__(self, state: QuantumState, *seen: QubitId):
        self.top: dict[str, int] = {}
        for q in list(state.labels) + list(seen):
            self.top[q.owner] = max(self.top.get(q.owner, -1), q.index)

    def __call__(self, owner: str) -> QubitId:
        self.top[owner] = self.top.get(owner, -1) + 1
        return QubitId(owner, self.top[owner])


def attack_on_transit(
    eve: EveModel,
    state: QuantumState,
    bob_qubit: QubitId,
    rng: np.random.Generator,
    alloc: Callable[[str], QubitId] | None = None,
) -> QubitId:
    """Let Eve act on a qubit crossing the channel; returns what Bob receives."""
    if not eve.active:
        return bob_qubit
    bob_qubit = QubitId(*bob_qubit)
    if bob_qubit in eve.intercepted:
        raise InvalidSequence(f"transit of {bob_qubit} already intercepted")
    eve.intercepted.add(bob_qubit)
    alloc = alloc or _StateAlloc(state, bob_qubit)

    if eve.kind is EveKind.INTERCEPT_RESEND:
        record = measure(state, bob_qubit, rng, eve.basis)
        eve.known_value = record.outcome if eve.basis == "Z" else None
        eve.log.append({"transit": str(bob_qubit), "action": "measure", "basis": eve.basis,
                        "outcome": record.outcome})
        return bob_qubit

    if eve.kind is EveKind.ENTANGLE_ANCILLA:
        mine = alloc("eve")
        state.append(mine)
        apply_gate(state, Gate.CNOT, (bob_qubit, mine))
        eve.eve_qubits.append(mine)
        eve.block_qubits.append(mine)
        eve.log.append({"transit": str(bob_qubit), "action": "entangle", "eve_qubit": str(mine)})
        return bob_qubit

    # intercept, entangle and resend: withhold the original, hand Bob a substitute
    kept = alloc("eve")
    state.relabel(bob_qubit, kept)
    eve.eve_qubits.append(kept)
    eve.block_qubits.append(kept)
    own = [alloc("eve") for _ in range(eve.system_size - 1)]
    substitute = alloc(bob_qubit.owner)
    system = prepare_ghz(eve.system_size, own + [substitute])
    state.extend(system)
    eve.eve_qubits.extend(own)
    eve.private_qubits.extend(own + [substitute])
    eve.log.append({"transit": str(bob_qubit), "action": "withhold", "kept": str(kept),
                    "substitute": str(substitute)})
    return substitute


def eve_eavesdrop_classical(
    eve: EveModel,
    message,
    state: QuantumState | None = None,
    shots: int = 1,
    rng: np.random.Generator | None = None,
) -> None:
    """Eve reads a classical message and, for BSM results, decodes the bit."""
    if not eve.active:
        return
    eve.seen_messages += 1
    if message.kind.value != "BsmResult":
        return
    _, parity = message.payload
    if eve.kind is EveKind.INTERCEPT_RESEND:
        if eve.known_value is None:
            # X-basis intercept leaves Eve without a Z record to track
            eve.eve_decoded_bits.append(int(rng.integers(2)))
        else:
            eve.known_value ^= parity
            eve.eve_decoded_bits.append(eve.known_value)
        return
    mine = [q for q in eve.block_qubits if state is not None and q in state]
    if not mine:
        return
    if parity:
        for q in mine:
            apply_gate(state, Gate.X, q)
    est = qnd_estimate(state, mine[0], shots, rng)
    eve.eve_decoded_bits.append(est.decoded_bit)
