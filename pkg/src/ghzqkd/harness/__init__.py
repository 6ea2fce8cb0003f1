from .config import ScenarioConfig, load_config, parse_config
from .runner import (
    EXIT_ABORTED,
    EXIT_CONFIG,
    EXIT_EVE_DETECTED,
    EXIT_KEY_MISMATCH,
    EXIT_OK,
    exit_code,
    run_scenario,
)
from .sweep import CSV_COLUMNS, sweep
from .table import EfficiencyRow, efficiency_table

__all__ = [
    "CSV_COLUMNS",
    "EXIT_ABORTED",
    "EXIT_CONFIG",
    "EXIT_EVE_DETECTED",
    "EXIT_KEY_MISMATCH",
    "EXIT_OK",
    "EfficiencyRow",
    "ScenarioConfig",
    "efficiency_table",
    "exit_code",
    "load_config",
    "parse_config",
    "run_scenario",
    "sweep",
]
