"""Brute-force reference for small registers.

Everything here builds explicit ``2**n x 2**n`` matrices or loops over basis
indices with integer bit arithmetic.  It shares no code path with
``statevec`` beyond the gate constants, so the two can check each other.
Keep ``n`` at 10 or below.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .statevec import GATE_MATRICES, Gate, ry

BELL_VECTORS = {
    (0, 0): np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),  # Phi+
    (1, 0): np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),  # Phi-
    (0, 1): np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2),  # Psi+
    (1, 1): np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2),  # Psi-
}


def bit(index: int, pos: int, n: int) -> int:
    """Value of qubit ``pos`` (0 = most significant) in basis index."""
    return (index >> (n - 1 - pos)) & 1


def single_qubit_matrix(u: np.ndarray, pos: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**pos), u), np.eye(2 ** (n - pos - 1)))


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        j = i ^ (1 << (n - 1 - target)) if bit(i, control, n) else i
        m[j, i] = 1.0
    return m


def gate_matrix(name: str, positions: Sequence[int], n: int) -> np.ndarray:
    gate = Gate(name)
    if gate is Gate.CNOT:
        return cnot_matrix(positions[0], positions[1], n)
    return single_qubit_matrix(GATE_MATRICES[gate], positions[0], n)


def projector(pos: int, outcome: int, n: int, theta: float = 0.0) -> np.ndarray:
    """Projector on eigenvalue ``(-1)**outcome`` of ``cos(t) Z + sin(t) X``."""
    ket = ry(theta) @ np.eye(2)[outcome]
    return single_qubit_matrix(np.outer(ket, ket.conj()), pos, n)


def contract(vec: np.ndarray, positions: Sequence[int], bra: np.ndarray, n: int) -> np.ndarray:
    """``(<bra| (x) I) vec`` where ``bra`` lives on ``positions`` (in that order)."""
    k = len(positions)
    rest = [p for p in range(n) if p not in positions]
    out = np.zeros(2 ** (n - k), dtype=complex)
    for i in range(2**n):
        sub = 0
        for p in positions:
            sub = (sub << 1) | bit(i, p, n)
        r = 0
        for p in rest:
            r = (r << 1) | bit(i, p, n)
        out[r] += np.conj(bra[sub]) * vec[i]
    return out


def run_program(vec: np.ndarray, labels: list, program: Sequence[tuple]) -> tuple[np.ndarray, list, list]:
    """Execute a program with explicit matrices.

    Ops: ``("H"|"X"|"Z", q)``, ``("CNOT", c, t)``,
    ``("MEASURE", q, theta, outcome)``, ``("REMOVE", q, value)``,
    ``("BSM", a, b, (phase, parity))``.  Stochastic ops are post-selected on
    the given outcome.  Returns ``(vector, labels, probabilities)``.
    """
    vec = np.asarray(vec, dtype=complex).copy()
    labels = list(labels)
    probs = []
    for op in program:
        n = len(labels)
        kind = op[0]
        if kind in ("H", "X", "Z"):
            vec = gate_matrix(kind, [labels.index(op[1])], n) @ vec
        elif kind == "CNOT":
            vec = gate_matrix(kind, [labels.index(op[1]), labels.index(op[2])], n) @ vec
        elif kind == "MEASURE":
            _, q, theta, outcome = op
            projected = projector(labels.index(q), outcome, n, theta) @ vec
            p = float(np.vdot(projected, projected).real)
            probs.append(p)
            vec = projected / math.sqrt(p)
        elif kind == "REMOVE":
            _, q, value = op
            vec = contract(vec, [labels.index(q)], np.eye(2)[value], n)
            vec = vec / np.linalg.norm(vec)
            labels.remove(q)
        elif kind == "BSM":
            _, a, b, outcome = op
            out = contract(vec, [labels.index(a), labels.index(b)], BELL_VECTORS[tuple(outcome)], n)
            p = float(np.vdot(out, out).real)
            probs.append(p)
            vec = out / math.sqrt(p)
            labels.remove(a)
            labels.remove(b)
        else:
            raise ValueError(f"unknown op {kind!r}")
    return vec, labels, probs


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


def ghz_by_circuit(n: int) -> np.ndarray:
    """H on qubit 0 then CNOT chain, as explicit matrix products."""
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = 1.0
    vec = gate_matrix("H", [0], n) @ vec
    for i in range(n - 1):
        vec = cnot_matrix(i, i + 1, n) @ vec
    return vec
