"""Information-level model of non-demolition readout.

Bob's qubit population is estimated by binomial sampling of its exact
marginal; the state vector itself is never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .statevec import QuantumState, QubitId, marginal_prob0

MIN_MARGIN = 0.01


@dataclass(frozen=True)
class QndEstimate:
    p0_hat: float
    shots: int
    decoded_bit: int
    margin: float


def decode(p0_hat: float) -> int:
    # ties decode as 1
    return 0 if p0_hat > 0.5 else 1


def qnd_estimate(state: QuantumState, qubit: QubitId, shots: int, rng: np.random.Generator) -> QndEstimate:
    if shots < 1:
        raise InvalidArgument("shots must be >= 1")
    p0 = min(max(marginal_prob0(state, qubit), 0.0), 1.0)
    p0_hat = rng.binomial(shots, p0) / shots
    return QndEstimate(p0_hat, shots, decode(p0_hat), abs(p0_hat - 0.5))


def qnd_sample(state: QuantumState, qubit: QubitId, shots: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent estimates of ``P(0)`` in one vectorised draw."""
    if shots < 1 or size < 1:
        raise InvalidArgument("shots and size must be >= 1")
    p0 = min(max(marginal_prob0(state, qubit), 0.0), 1.0)
    return rng.binomial(shots, p0, size=size) / shots


def decode_with_prior(p0_hat: float, shots: int, p0_if_zero: float, p0_if_one: float) -> int:
    """Maximum-likelihood choice between two known expected populations.

    Used when the register is known to carry a residual bias, so the two
    hypotheses are no longer symmetric about 0.5.
    """
    k = round(p0_hat * shots)

    def loglik(p: float) -> float:
        p = min(max(p, 1e-300), 1.0 - 1e-16)
        return k * math.log(p) + (shots - k) * math.log1p(-p)

    l0, l1 = loglik(p0_if_zero), loglik(p0_if_one)
    return 0 if l0 > l1 else 1


def hoeffding_error(alpha0_sq: float, shots: int) -> float:
    return math.exp(-2.0 * shots * (alpha0_sq - 0.5) ** 2)


def required_shots(alpha0_sq: float, target_error: float) -> int:
    """Smallest shot count whose Hoeffding bound reaches ``target_error``."""
    if not 0.0 < target_error < 1.0:
        raise InvalidArgument("target_error must lie in (0, 1)")
    if not 0.5 < alpha0_sq < 1.0:
        raise InvalidArgument("alpha0_sq must lie in (0.5, 1)")
    margin = alpha0_sq - 0.5
    if margin < MIN_MARGIN:
        raise InvalidArgument(f"margin {margin:.3g} below {MIN_MARGIN}; shot count diverges")
    shots = math.ceil(math.log(1.0 / target_error) / (2.0 * margin**2))
    # guard against ceil landing one above the true minimum through rounding
    if shots > 1 and hoeffding_error(alpha0_sq, shots - 1) <= target_error:
        shots -= 1
    return shots


def qnd_anomaly(records, shots: int, z: float = 6.0) -> bool:
    """Flag estimates that fit neither expected hypothesis.

    ``records`` is a list (one per receiver) of dicts holding ``p0_hat`` and
    the pair of ``expected`` populations.  A record is anomalous when it sits
    more than ``z`` standard errors from both.
    """
    floor = 0.25 / shots
    for per_receiver in records:
        for rec in per_receiver:
            devs = []
            for p in rec["expected"]:
                sigma = math.sqrt(max(p * (1.0 - p), floor) / shots)
                devs.append(abs(rec["p0_hat"] - p) / sigma)
            if min(devs) > z:
                return True
    return False
