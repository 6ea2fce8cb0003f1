"""Restore ``a|0...0> + b|1...1>`` to the uniform GHZ state.

One attempt: append an ancilla ``b|0> + a|1>``, CNOT from the ancilla onto
the register's first qubit, measure that qubit and drop it; the ancilla takes
its place.  Outcome 0 leaves the uniform GHZ state.  Outcome 1 (after an X on
the ancilla) leaves ``a^2|0...0> + b^2|1...1>`` up to normalisation, so the
imbalance squares with every failure.

Everything here acts on Alice's side only, so Bob's population of ``|0>`` is
a martingale under it.  No strategy of this kind can succeed with total
probability above ``2 * min(|a|^2, |b|^2)``; see ``success_ceiling``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgument, InvalidState, ResetFailed
from .statevec import (
    Gate,
    QuantumState,
    QubitId,
    apply_gate,
    fidelity,
    ghz_amplitudes,
    measure_z,
    remove_qubit,
)

STRUCTURE_TOL = 1e-9
DEGENERATE_TOL = 1e-12
DEFAULT_BOUND = 64


@dataclass(frozen=True)
class ResetAttempt:
    ancilla_p: complex
    ancilla_q: complex
    outcome: int
    pre_coeffs: tuple[complex, complex]
    post_coeffs: tuple[complex, complex]
    success_probability: float


class ResetOutcome(NamedTuple):
    attempts: list
    success: bool


def register_coefficients(state: QuantumState, register: Sequence[QubitId]) -> tuple[complex, complex]:
    """Return ``(a, b)`` with ``state = (a|0..0> + b|1..1>)_register (x) |rest>``.

    ``a`` is real and non-negative; ``b`` carries the relative phase.
    Raises ``InvalidState`` if the state does not factor that way.
    """
    if len(register) < 2:
        raise InvalidState("reset needs a register of at least two qubits")
    reg_pos = [state.position(q) for q in register]
    rest = [p for p in range(state.n) if p not in reg_pos]
    k = len(reg_pos)
    mat = np.transpose(state.tensor(), reg_pos + rest).reshape(2**k, -1)
    row0, row1 = mat[0], mat[-1]
    leak = float(np.linalg.norm(mat[1:-1])) if k > 1 else 0.0
    if leak > STRUCTURE_TOL:
        raise InvalidState(f"register is not a two-term superposition (leakage {leak:.2e})")
    a = float(np.linalg.norm(row0))
    b_abs = float(np.linalg.norm(row1))
    overlap = np.vdot(row0, row1)
    if a > DEGENERATE_TOL and b_abs > DEGENERATE_TOL:
        if abs(abs(overlap) - a * b_abs) > STRUCTURE_TOL:
            raise InvalidState("register is entangled with qubits outside it")
        b = overlap / a
    else:
        b = complex(b_abs)
    return a, complex(b)


def _normalized(a: complex, b: complex) -> tuple[complex, complex]:
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return a / norm, b / norm


def _is_degenerate(coeffs) -> bool:
    return min(abs(coeffs[0]), abs(coeffs[1])) < DEGENERATE_TOL


def _default_alloc(state: QuantumState, owner: str = "ancilla") -> Callable[[], QubitId]:
    used = [q.index for q in state.labels if q.owner == owner]
    counter = itertools.count(max(used) + 1 if used else 0)
    return lambda: QubitId(owner, next(counter))


def reset_attempt(
    state: QuantumState,
    register: list[QubitId],
    ancilla: QubitId,
    coeffs: tuple[complex, complex],
    rng,
    force: int | None = None,
) -> ResetAttempt:
    """One ancilla-CNOT-measure step; ``register[0]`` is replaced by ``ancilla``."""
    alpha, beta = _normalized(*coeffs)
    pre = register_coefficients(state, register)
    p, q = beta, alpha
    first = register[0]
    state.append(ancilla, p, q)
    apply_gate(state, Gate.CNOT, (ancilla, first))
    success_p = abs(p * pre[0]) ** 2 + abs(q * pre[1]) ** 2
    record = measure_z(state, first, rng, force)
    remove_qubit(state, first)
    if record.outcome == 1:
        apply_gate(state, Gate.X, ancilla)
    register[0] = ancilla
    post = register_coefficients(state, register)
    return ResetAttempt(p, q, record.outcome, pre, post, float(success_p))


def _checked_start(state: QuantumState, register: Sequence[QubitId]) -> tuple[complex, complex]:
    coeffs = register_coefficients(state, register)
    if _is_degenerate(coeffs):
        raise InvalidState("register is a product state |b...b>; nothing to reset")
    return coeffs


def reset_baseline(
    state: QuantumState,
    register: list[QubitId],
    rng,
    max_retries: int = DEFAULT_BOUND,
    coeffs: tuple[complex, complex] | None = None,
    alloc: Callable[[], QubitId] | None = None,
) -> ResetOutcome:
    """Retry until outcome 0 or ``max_retries`` attempts.

    The ancilla for each retry is built from Alice's classical bookkeeping:
    the starting coefficients (``coeffs``, read from the state when omitted)
    squared once per failure.  Returns ``success=False`` instead of raising.
    """
    if max_retries < 1:
        raise InvalidArgument("max_retries must be >= 1")
    start = _checked_start(state, register)
    current = _normalized(*(coeffs if coeffs is not None else start))
    alloc = alloc or _default_alloc(state)
    attempts = []
    for _ in range(max_retries):
        attempt = reset_attempt(state, register, alloc(), current, rng)
        attempts.append(attempt)
        if attempt.outcome == 0:
            return ResetOutcome(attempts, True)
        current = _normalized(current[0] ** 2, current[1] ** 2)
        if _is_degenerate(current):
            break
    return ResetOutcome(attempts, False)


def reset_adaptive(
    state: QuantumState,
    register: list[QubitId],
    rng,
    bound: int = DEFAULT_BOUND,
    alloc: Callable[[], QubitId] | None = None,
) -> ResetOutcome:
    """Re-read the register coefficients before every attempt.

    Raises ``ResetFailed`` once ``bound`` attempts are spent, or earlier if the
    register has lost all coherence.  Success is never guaranteed.
    """
    if bound < 1:
        raise InvalidArgument("bound must be >= 1")
    _checked_start(state, register)
    alloc = alloc or _default_alloc(state)
    attempts = []
    for _ in range(bound):
        current = register_coefficients(state, register)
        if _is_degenerate(current):
            raise ResetFailed(
                f"register coherence exhausted after {len(attempts)} attempts", attempts
            )
        attempt = reset_attempt(state, register, alloc(), current, rng)
        attempts.append(attempt)
        if attempt.outcome == 0:
            return ResetOutcome(attempts, True)
    raise ResetFailed(f"no success within {bound} attempts", attempts)


def verify_uniform_ghz(state: QuantumState) -> float:
    return fidelity(state, ghz_amplitudes(state.n))


def squared_drift(alpha_sq: float) -> float:
    """|a|^2 after one failed attempt that started from |a|^2 = alpha_sq."""
    return alpha_sq**2 / (alpha_sq**2 + (1.0 - alpha_sq) ** 2)


def attempt_schedule(alpha_sq: float, bound: int = DEFAULT_BOUND) -> list[float]:
    """Per-attempt success probabilities along the failure path.

    Mirrors the stopping rule of ``reset_adaptive``: the schedule ends when the
    bound is reached or the smaller coefficient underflows the coherence floor.
    """
    probs = []
    m = alpha_sq
    for _ in range(bound):
        if min(m, 1.0 - m) < DEGENERATE_TOL**2:
            break
        probs.append(2.0 * m * (1.0 - m))
        m = squared_drift(m)
    return probs


def expected_attempts(alpha_sq: float, bound: int = DEFAULT_BOUND) -> float:
    total, reach = 0.0, 1.0
    for s in attempt_schedule(alpha_sq, bound):
        total += reach
        reach *= 1.0 - s
    return total


def total_success_probability(alpha_sq: float, bound: int = DEFAULT_BOUND) -> float:
    fail = 1.0
    for s in attempt_schedule(alpha_sq, bound):
        fail *= 1.0 - s
    return 1.0 - fail


def success_ceiling(alpha_sq: float) -> float:
    """Upper bound on any Alice-local reset: ``2 * min(a^2, b^2)``."""
    return 2.0 * min(alpha_sq, 1.0 - alpha_sq)
