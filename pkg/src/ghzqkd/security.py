"""CHSH test rounds that check whether Bob's qubit is still entangled with Alice.

A sacrificial GHZ copy is reduced to one Alice qubit and Bob's qubit: every
other Alice-side qubit is measured in the X basis and an odd number of ``-``
outcomes is undone with Z on the kept qubit.  The pair is then measured with
the usual two-party settings A0=Z, A1=X, B0=(Z+X)/sqrt2, B1=(Z-X)/sqrt2.

Two engines produce the same statistics.  ``per_round`` simulates each
repetition literally.  ``sampled`` computes the exact outcome distribution of
one repetition once and draws all rounds from it, which is what the literal
loop converges to because every round starts from an identical fresh state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .adversary import EveKind, EveModel, attack_on_transit
from .errors import InvalidArgument, InvalidState
from .qnd import qnd_anomaly
from .statevec import (
    Gate,
    QuantumState,
    QubitId,
    apply_gate,
    measure,
    prepare_ghz,
    remove_qubit,
    ry,
)

__all__ = [
    "ChshRound",
    "ChshVerdict",
    "chsh_trial",
    "correlator",
    "exact_distributions",
    "ghz_to_bell_reduction",
    "outcome_distribution",
    "qnd_anomaly",
    "run_chsh_test",
    "s_statistic",
]

ALICE_ANGLES = (0.0, math.pi / 2)  # A0 = Z, A1 = X
BOB_ANGLES = (math.pi / 4, -math.pi / 4)  # B0 = (Z+X)/sqrt2, B1 = (Z-X)/sqrt2
SETTING_NAMES = ("A0B0", "A0B1", "A1B0", "A1B1")
DEFAULT_THRESHOLD = 2.5
MIN_ROUNDS = 100


@dataclass(frozen=True)
class ChshRound:
    alice_setting: int
    bob_setting: int
    alice_outcome: int
    bob_outcome: int
    parity_corrections: tuple = ()


@dataclass
class ChshVerdict:
    s_value: float
    rounds: int
    threshold: float
    eve_detected: bool
    std_error: float
    correlators: dict = field(default_factory=dict)
    method: str = "sampled"

    def to_dict(self) -> dict:
        return asdict(self)


def _sign(bit: int) -> int:
    return 1 - 2 * bit


def ghz_to_bell_reduction(
    state: QuantumState,
    alice_keep: QubitId,
    bob_qubit: QubitId,
    rng: np.random.Generator | None = None,
    measure_out: Sequence[QubitId] | None = None,
    force: Sequence[int] | None = None,
) -> tuple[QubitId, QubitId, int]:
    """Reduce a GHZ block to an Alice-Bob pair; returns ``(alice, bob, parity)``.

    ``measure_out`` defaults to every Alice-owned qubit except ``alice_keep``.
    ``parity`` is 1 when the product of the X outcomes is -1.  ``force`` fixes
    the outcomes, for exhaustive branch checks.
    """
    if state.n < 2:
        raise InvalidState("reduction needs at least two qubits")
    if alice_keep == bob_qubit:
        raise InvalidArgument("Alice's kept qubit and Bob's qubit must differ")
    if measure_out is None:
        measure_out = [q for q in state.labels if q.owner == "alice" and q != alice_keep]
    if force is not None and len(force) != len(measure_out):
        raise InvalidArgument("force needs one outcome per measured qubit")
    parity = 0
    for i, q in enumerate(measure_out):
        outcome = None if force is None else force[i]
        record = measure(state, q, rng, "X", force=outcome)
        apply_gate(state, Gate.H, q)
        remove_qubit(state, q)
        parity ^= record.outcome
    if parity:
        apply_gate(state, Gate.Z, alice_keep)
    return alice_keep, bob_qubit, parity


def chsh_trial(
    pair_state: QuantumState,
    settings: tuple[int, int],
    rng: np.random.Generator,
    alice: QubitId | None = None,
    bob: QubitId | None = None,
) -> tuple[int, int]:
    """Measure one pair with setting indices ``(x, y)``; outcomes are +-1."""
    if alice is None or bob is None:
        if pair_state.n != 2:
            raise InvalidState("name the pair qubits when the state has more than two")
        alice, bob = pair_state.labels
    x, y = settings
    a = measure(pair_state, alice, rng, ALICE_ANGLES[x]).outcome
    b = measure(pair_state, bob, rng, BOB_ANGLES[y]).outcome
    return _sign(a), _sign(b)


def _rotated_probs(state: QuantumState, angles: dict) -> np.ndarray:
    """Z-basis probabilities after rotating the given qubits into their bases."""
    work = state.copy()
    for q, theta in angles.items():
        work.apply_unitary(ry(-theta), [q])
    return np.abs(work.tensor()) ** 2


def outcome_distribution(
    state: QuantumState,
    alice: QubitId,
    bob: QubitId,
    x: int,
    y: int,
    flip_on: Sequence[QubitId] = (),
) -> np.ndarray:
    """Exact ``P(a, b)`` as a 2x2 array, bits 0 meaning +1.

    ``flip_on`` are qubits measured in the X basis whose outcome parity is
    corrected by Z on ``alice`` before she measures; that Z flips an X-setting
    outcome and leaves a Z-setting outcome alone.
    """
    angles = {q: math.pi / 2 for q in flip_on}
    angles[alice] = ALICE_ANGLES[x]
    angles[bob] = BOB_ANGLES[y]
    probs = _rotated_probs(state, angles)
    pos_a, pos_b = state.position(alice), state.position(bob)
    pos_f = [state.position(q) for q in flip_on]
    others = [p for p in range(state.n) if p not in pos_f and p not in (pos_a, pos_b)]
    t = np.transpose(probs, [pos_a, pos_b] + pos_f + others).reshape(2, 2, 2 ** len(pos_f), -1)
    t = t.sum(axis=3)
    idx = np.arange(2 ** len(pos_f))
    par = np.array([bin(i).count("1") & 1 for i in idx])
    out = np.zeros((2, 2))
    for p in (0, 1):
        block = t[:, :, par == p].sum(axis=2)
        if p and x == 1:
            block = block[::-1, :]
        out += block
    return out


def correlator(dist: np.ndarray) -> float:
    return float(dist[0, 0] + dist[1, 1] - dist[0, 1] - dist[1, 0])


def _sacrificial_copy(block: int, eve: EveModel, rng) -> tuple[QuantumState, list, QubitId]:
    alice = [QubitId("alice", i) for i in range(block)]
    bob = QubitId("bob1", 0)
    state = prepare_ghz(block + 1, alice + [bob])
    delivered = attack_on_transit(eve, state, bob, rng)
    return state, alice, delivered


def exact_distributions(block: int, eve: EveModel | None = None) -> dict:
    """``{(x, y): P(a, b)}`` for one sacrificial round, Eve branches averaged.

    The only random step before Alice and Bob measure is Eve's intercept
    measurement; both of its branches are enumerated with their weights.
    """
    eve = eve or EveModel()
    branches = []
    if eve.kind is EveKind.INTERCEPT_RESEND:
        for outcome in (0, 1):
            state, alice, bob = _sacrificial_copy(block, EveModel(), None)
            p = _branch_prob(state, bob, eve.basis, outcome)
            if p <= 1e-15:
                continue
            measure(state, bob, None, eve.basis, force=outcome)
            branches.append((p, state, alice, bob))
    else:
        state, alice, bob = _sacrificial_copy(block, eve.fresh(), np.random.default_rng(0))
        branches.append((1.0, state, alice, bob))
    dists = {}
    for x in (0, 1):
        for y in (0, 1):
            total = np.zeros((2, 2))
            for p, state, alice, bob in branches:
                total += p * outcome_distribution(state, alice[0], bob, x, y, alice[1:])
            dists[(x, y)] = total
    return dists


def _branch_prob(state: QuantumState, qubit: QubitId, basis: str, outcome: int) -> float:
    probs = _rotated_probs(state, {qubit: math.pi / 2 if basis == "X" else 0.0})
    pos = state.position(qubit)
    return float(np.take(probs, outcome, axis=pos).sum())


def s_statistic(correlators: dict) -> float:
    return (
        correlators["A0B0"] + correlators["A0B1"] + correlators["A1B0"] - correlators["A1B1"]
    )


def _verdict(counts: np.ndarray, rounds: int, threshold: float, method: str) -> ChshVerdict:
    """``counts[x, y, a, b]`` -> verdict with binomial error propagation."""
    corr, var = {}, 0.0
    for x in (0, 1):
        for y in (0, 1):
            c = counts[x, y]
            total = int(c.sum())
            name = f"A{x}B{y}"
            if total == 0:
                corr[name] = 0.0
                var += 1.0
                continue
            e = float((c[0, 0] + c[1, 1] - c[0, 1] - c[1, 0]) / total)
            corr[name] = e
            var += (1.0 - e * e) / total
    s = s_statistic(corr)
    return ChshVerdict(
        s_value=s,
        rounds=rounds,
        threshold=threshold,
        eve_detected=bool(s < threshold),
        std_error=math.sqrt(var),
        correlators=corr,
        method=method,
    )


def sample_rounds(dists: dict, rounds: int, rng: np.random.Generator) -> np.ndarray:
    settings = rng.integers(0, 2, size=(rounds, 2))
    cell = np.bincount(settings[:, 0] * 2 + settings[:, 1], minlength=4)
    counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    for k, n in enumerate(cell):
        x, y = divmod(k, 2)
        p = np.clip(dists[(x, y)].ravel(), 0.0, None)
        counts[x, y] = rng.multinomial(int(n), p / p.sum()).reshape(2, 2)
    return counts


def run_rounds(block: int, eve: EveModel, rounds: int, rng: np.random.Generator) -> list[ChshRound]:
    """Literal repetitions: fresh GHZ copy, Eve, reduction, measurement."""
    out = []
    for _ in range(rounds):
        x, y = (int(v) for v in rng.integers(0, 2, size=2))
        state, alice, bob = _sacrificial_copy(block, eve.fresh(), rng)
        measured = alice[1:]
        corrections = []
        for q in measured:
            rec = measure(state, q, rng, "X")
            apply_gate(state, Gate.H, q)
            remove_qubit(state, q)
            corrections.append(rec.outcome)
        if sum(corrections) & 1:
            apply_gate(state, Gate.Z, alice[0])
        a, b = chsh_trial(state, (x, y), rng, alice[0], bob)
        out.append(ChshRound(x, y, a, b, tuple(corrections)))
    return out


def run_chsh_test(
    config,
    eve: EveModel | None = None,
    rounds: int = 10_000,
    rng: np.random.Generator | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    method: str = "sampled",
    block: int | None = None,
) -> ChshVerdict:
    """Estimate S over ``rounds`` sacrificial copies of Alice's GHZ block."""
    if rounds < MIN_ROUNDS:
        raise InvalidArgument(f"CHSH test needs at least {MIN_ROUNDS} rounds")
    eve = eve or EveModel()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    block = block or config.key_length
    if method == "sampled":
        counts = sample_rounds(exact_distributions(block, eve), rounds, rng)
    elif method == "per_round":
        counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
        for r in run_rounds(block, eve, rounds, rng):
            a, b = (1 - r.alice_outcome) // 2, (1 - r.bob_outcome) // 2
            counts[r.alice_setting, r.bob_setting, a, b] += 1
    else:
        raise InvalidArgument(f"unknown CHSH method {method!r}")
    return _verdict(counts, rounds, threshold, method)
