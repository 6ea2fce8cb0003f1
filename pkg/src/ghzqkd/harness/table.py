"""Efficiency comparison: published reference rows plus a measured row."""

from __future__ import annotations

from dataclasses import dataclass

from ..protocol import ProtocolConfig, run_key_exchange


@dataclass(frozen=True)
class EfficiencyRow:
    """Values are kept as printed, so symbolic entries such as ``<0.5`` survive."""

    scheme_name: str
    b_s: str
    q_t: str
    eta: str
    measured: bool = False

    def numeric(self) -> tuple[float, float, float] | None:
        try:
            return float(self.b_s), float(self.q_t), float(self.eta)
        except ValueError:
            return None


REFERENCE_ROWS = (
    EfficiencyRow("Bennett, 1992", "<0.5", "1", "<0.5"),
    EfficiencyRow("Bennett and Brassard, 1984", "0.5", "1", "0.5"),
    EfficiencyRow("Goldenberg and Vaidman, 1995", "1", "2", "0.5"),
    EfficiencyRow("Ekert, 1991", "1", "1", "1"),
    EfficiencyRow("Koashi and Imoto, 1997", "1", "2", "0.5"),
    # printed as 2 / 2 / 0.5; kept verbatim even though b_s/q_t = 1
    EfficiencyRow("Cabello, 2000", "2", "2", "0.5"),
    EfficiencyRow("Our scheme", "L", "1", "L, (L>1)"),
)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.4g}"


def measured_row(config: ProtocolConfig | None = None) -> EfficiencyRow:
    config = config or ProtocolConfig(key_length=12)
    report = run_key_exchange(config)
    eta = report.b_s / report.q_t if report.q_t else 0.0
    name = f"GHZ run (L={config.key_length}, {config.key_length + config.receivers}-qubit GHZ)"
    return EfficiencyRow(name, _fmt(report.b_s), _fmt(report.q_t), _fmt(eta), measured=True)


def efficiency_table(config: ProtocolConfig | None = None, measure: bool = True) -> list[EfficiencyRow]:
    rows = list(REFERENCE_ROWS)
    if measure:
        rows.append(measured_row(config))
    return rows


def format_table(rows) -> str:
    header = ("Scheme", "b_s", "q_t", "eta")
    body = [(r.scheme_name, r.b_s, r.q_t, r.eta) for r in rows]
    widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(4)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
