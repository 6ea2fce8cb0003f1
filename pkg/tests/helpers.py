"""Random gate/measurement programs run through both simulators."""

from __future__ import annotations

import math

import numpy as np

from ghzqkd import oracle
from ghzqkd.statevec import Gate, QuantumState, QubitId, apply_gate, bsm, measure, remove_qubit

MIN_BRANCH_P = 1e-3


def _prob(cur, live, op) -> float:
    with np.errstate(all="ignore"):
        return oracle.run_program(cur, live, [op])[2][0]


def _pick(rng, probs):
    ok = [i for i, p in enumerate(probs) if p > MIN_BRANCH_P]
    return ok[int(rng.integers(len(ok)))]


def random_program(rng: np.random.Generator, n_max: int = 5, length: int = 10):
    """Returns ``(labels, start_vector, program)``.

    Outcomes of stochastic ops are fixed up front, choosing only branches the
    oracle says have non-negligible probability.
    """
    n = int(rng.integers(1, n_max + 1))
    labels = [QubitId("q", i) for i in range(n)]
    vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    vec /= np.linalg.norm(vec)
    start = vec.copy()
    cur, live, program = vec, list(labels), []
    for _ in range(length):
        n = len(live)
        choices = ["H", "X", "Z"] + (["CNOT"] if n >= 2 else []) + ["MEASURE"]
        choices += ["MEASURE_REMOVE"] if n >= 2 else []
        choices += ["BSM"] if n >= 3 else []
        kind = choices[int(rng.integers(len(choices)))]
        if kind in ("H", "X", "Z"):
            ops = [(kind, live[int(rng.integers(n))])]
        elif kind == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            ops = [("CNOT", live[c], live[t])]
        elif kind == "MEASURE":
            q = live[int(rng.integers(n))]
            theta = float(rng.choice([0.0, math.pi / 2, rng.uniform(-math.pi, math.pi)]))
            probs = [_prob(cur, live, ("MEASURE", q, theta, o)) for o in (0, 1)]
            ops = [("MEASURE", q, theta, _pick(rng, probs))]
        elif kind == "MEASURE_REMOVE":
            q = live[int(rng.integers(n))]
            probs = [_prob(cur, live, ("MEASURE", q, 0.0, o)) for o in (0, 1)]
            o = _pick(rng, probs)
            ops = [("MEASURE", q, 0.0, o), ("REMOVE", q, o)]
        else:
            a, b = rng.choice(n, size=2, replace=False)
            outs = [(p, r) for p in (0, 1) for r in (0, 1)]
            probs = [_prob(cur, live, ("BSM", live[a], live[b], o)) for o in outs]
            ops = [("BSM", live[a], live[b], outs[_pick(rng, probs)])]
        cur, live, _ = oracle.run_program(cur, live, ops)
        program.extend(ops)
    return labels, start, program


def run_statevec(start, labels, program):
    state = QuantumState(start, labels)
    probs = []
    for op in program:
        kind = op[0]
        if kind in ("H", "X", "Z"):
            apply_gate(state, Gate(kind), op[1])
        elif kind == "CNOT":
            apply_gate(state, Gate.CNOT, (op[1], op[2]))
        elif kind == "MEASURE":
            probs.append(measure(state, op[1], None, op[2], force=op[3]).probability)
        elif kind == "REMOVE":
            remove_qubit(state, op[1])
        elif kind == "BSM":
            probs.append(bsm(state, op[1], op[2], None, force=op[3]).probability)
    return state.amplitudes, list(state.labels), probs


def programs_agree(rng, n_max=5, length=10, tol=1e-9) -> tuple[bool, float]:
    labels, start, program = random_program(rng, n_max, length)
    v1, l1, p1 = oracle.run_program(start, labels, program)
    v2, l2, p2 = run_statevec(start, labels, program)
    err = float(np.max(np.abs(v1 - v2))) if len(v1) else 0.0
    perr = float(np.max(np.abs(np.subtract(p1, p2)))) if p1 else 0.0
    return l1 == l2 and err <= tol and perr <= tol, max(err, perr)
