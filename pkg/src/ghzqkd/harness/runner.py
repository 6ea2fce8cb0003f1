"""Run one scenario: key exchange over one or more GHZ blocks, optional CHSH test."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..adversary import EveModel
from ..protocol import ClassicalMessage, KeyExchange, write_transcript
from ..qnd import qnd_anomaly
from ..report import RunReport, count_shared_bits
from ..security import run_chsh_test
from .config import ScenarioConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_KEY_MISMATCH = 3
EXIT_EVE_DETECTED = 4
EXIT_ABORTED = 5


def exit_code(report: RunReport) -> int:
    # an aborted run says nothing reliable about Eve, and detection outranks errors
    if report.aborted:
        return EXIT_ABORTED
    if report.eve_detected:
        return EXIT_EVE_DETECTED
    if not report.keys_match:
        return EXIT_KEY_MISMATCH
    return EXIT_OK


def split_blocks(length: int, block_size: int | None) -> list[tuple[int, int]]:
    size = length if not block_size or block_size >= length else block_size
    return [(start, min(start + size, length)) for start in range(0, length, size)]


def _merge_eve(eves: list[EveModel], key: list) -> dict | None:
    if not eves or not eves[0].active:
        return None
    bits = [b for eve in eves for b in eve.eve_decoded_bits]
    paired = list(zip(bits, key))
    return {
        "kind": eves[0].kind.value,
        "eve_decoded_bits": bits,
        "agreement_rate": sum(a == b for a, b in paired) / len(paired) if paired else None,
        "interceptions": sum(len(eve.log) for eve in eves),
    }


def run_scenario(config, transcript=None, seed: int | None = None) -> RunReport:
    """Execute a scenario from a ``ScenarioConfig`` or a config file path.

    Long keys are split into independent ``block_size`` exchanges, each with
    its own GHZ register, Eve instance and RNG stream.
    """
    if not isinstance(config, ScenarioConfig):
        config = load_config(config)
    if seed is not None:
        config = config.with_seed(seed)
    start = time.perf_counter()
    proto = config.protocol
    length = proto.key_length
    spans = split_blocks(length, config.block_size)
    key_ss, chsh_ss, *block_ss = np.random.SeedSequence(proto.seed).spawn(2 + len(spans))
    if config.key is not None:
        key = list(config.key)
    else:
        key = np.random.default_rng(key_ss).integers(0, 2, size=length).tolist()

    recovered = [[] for _ in range(proto.receivers)]
    records = [[] for _ in range(proto.receivers)]
    messages: list[ClassicalMessage] = []
    histogram: Counter = Counter()
    eves = []
    q_t = classical = failures = regenerations = 0
    abort = None
    for (lo, hi), ss in zip(spans, block_ss):
        block_cfg = replace(proto, key_length=hi - lo) if len(spans) > 1 else proto
        eve = config.eve_model()
        session = KeyExchange(block_cfg, key[lo:hi], eve, np.random.default_rng(ss))
        part = session.run()
        eves.append(eve)
        for k in range(proto.receivers):
            recovered[k].extend(part.recovered_keys[k])
            records[k].extend(dict(r, round=r["round"] + lo) for r in part.qnd_records[k])
        messages.extend(replace(m, round=m.round + lo) for m in session.transcript)
        histogram.update(part.reset_attempt_histogram)
        q_t += part.q_t
        classical += part.classical_bits
        failures += part.reset_failures
        regenerations += part.regenerations
        if part.aborted:
            abort = f"block {lo}:{hi}: {part.abort_reason}"
            break

    errors = [[i for i, bit in enumerate(key) if i >= len(rec) or rec[i] != bit] for rec in recovered]
    b_s = count_shared_bits(key, recovered)
    anomaly = qnd_anomaly(records, proto.qnd_shots)
    chsh = None
    if config.chsh_rounds > 0 and abort is None:
        verdict = run_chsh_test(
            proto,
            config.eve_model(),
            config.chsh_rounds,
            rng=np.random.default_rng(chsh_ss),
            threshold=config.chsh_threshold,
            method=config.chsh_method,
            block=spans[0][1] - spans[0][0],
        )
        chsh = verdict.to_dict()
    report = RunReport(
        config_echo=config.echo(),
        seed=proto.seed,
        sent_key=key,
        recovered_keys=recovered,
        bit_errors=errors,
        q_t=q_t,
        classical_bits=classical,
        b_s=b_s,
        eta=b_s / q_t if q_t else None,
        delivered_bits_total=sum(length - len(e) for e in errors),
        reset_strategy=proto.reset_strategy.value,
        reset_attempt_histogram=dict(histogram),
        reset_failures=failures,
        regenerations=regenerations,
        qnd_records=records,
        chsh=chsh,
        eve_summary=_merge_eve(eves, key),
        qnd_anomaly=anomaly,
        eve_detected=bool(anomaly or (chsh is not None and chsh["eve_detected"])),
        abort_reason=abort,
        blocks=len(spans),
        wall_time_ms=int(round((time.perf_counter() - start) * 1000)),
    )
    if transcript is not None:
        write_transcript(messages, transcript)
    return report


def write_report(report: RunReport, path, include_timing: bool = False) -> None:
    Path(path).write_text(report.to_json(include_timing), encoding="utf-8")
