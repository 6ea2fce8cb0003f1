"""Per-run record shared by the protocol engine and the harness."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import InvalidReport


@dataclass
class RunReport:
    config_echo: dict
    seed: int
    sent_key: list
    recovered_keys: list
    bit_errors: list
    q_t: int
    classical_bits: int
    b_s: int = 0
    eta: float | None = None
    delivered_bits_total: int = 0
    reset_strategy: str = ""
    reset_attempt_histogram: dict = field(default_factory=dict)
    reset_failures: int = 0
    regenerations: int = 0
    qnd_records: list = field(default_factory=list)
    chsh: dict | None = None
    eve_summary: dict | None = None
    qnd_anomaly: bool = False
    eve_detected: bool = False
    abort_reason: str | None = None
    blocks: int = 1
    wall_time_ms: int = 0

    @property
    def key_length(self) -> int:
        return len(self.sent_key)

    @property
    def aborted(self) -> bool:
        return self.abort_reason is not None

    @property
    def keys_match(self) -> bool:
        return (
            not self.aborted
            and bool(self.recovered_keys)
            and all(list(k) == list(self.sent_key) for k in self.recovered_keys)
        )

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        data = asdict(self)
        data["reset_attempt_histogram"] = {
            str(k): v for k, v in sorted(self.reset_attempt_histogram.items())
        }
        if not include_timing:
            data.pop("wall_time_ms")
        return data

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"


def count_shared_bits(sent_key, recovered_keys) -> int:
    """Key positions every receiver decoded correctly, counted once."""
    if not recovered_keys:
        return 0
    return sum(
        1
        for i, bit in enumerate(sent_key)
        if all(i < len(k) and k[i] == bit for k in recovered_keys)
    )


def efficiency(report: RunReport) -> float:
    """Shared secret bits per quantum-channel use."""
    if report.q_t <= 0:
        raise InvalidReport("report has no quantum-channel uses (q_t = 0)")
    return count_shared_bits(report.sent_key, report.recovered_keys) / report.q_t
