"""Parameter sweeps: one CSV row per grid cell, repetitions run in a process pool."""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InvalidArgument
from .config import KEYS, build_config, parse_pairs
from .runner import run_scenario

GRID_KEYS = ("key_length", "channel_loss_p", "qnd_shots", "alpha0_sq", "eve", "chsh_rounds")
CSV_COLUMNS = (
    "cell",
    *GRID_KEYS,
    "repetitions",
    "eta_mean",
    "eta_std",
    "q_t_mean",
    "q_t_std",
    "error_rate_mean",
    "error_rate_std",
    "s_mean",
    "s_std",
    "detection_rate",
    "abort_rate",
)


def config_values(cfg) -> dict:
    """Flat key/value dict that ``build_config`` turns back into ``cfg``."""
    echo = cfg.echo()
    values = {k: v for k, v in echo.items() if k in KEYS and v is not None}
    if "key" in values:
        values["key"] = "".join(str(b) for b in values["key"])
    return values


def parse_grid(text: str, source: str = "<grid>") -> tuple[dict, int]:
    """``key = v1, v2, ...`` per line, plus an optional ``repetitions = N``."""
    grid, reps = {}, 10
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = v1, v2, ...', got {line!r}", lineno, source)
        key, rest = (part.strip() for part in line.split("=", 1))
        if key == "repetitions":
            reps = int(rest)
            continue
        if key not in GRID_KEYS:
            raise ConfigError(f"cannot sweep {key!r}; choose from {list(GRID_KEYS)}", lineno, source)
        raw_values = [v.strip() for v in rest.split(",") if v.strip()]
        if not raw_values:
            raise ConfigError(f"no values for {key!r}", lineno, source)
        kind = KEYS[key]
        try:
            grid[key] = [kind(v) if kind is not str else v for v in raw_values]
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {rest!r}", lineno, source) from None
    return grid, reps


def cell_seeds(seed: int, cell: int, repetitions: int) -> list[int]:
    ss = np.random.SeedSequence(seed, spawn_key=(cell,))
    return [int(child.generate_state(1)[0]) for child in ss.spawn(repetitions)]


def _mean_std(xs) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.std())


def run_cell(job: tuple) -> dict:
    cell, overrides, base, repetitions, seed = job
    values = dict(base, **overrides)
    cfg = build_config(values)
    etas, qts, errs, svals, detected, aborted = [], [], [], [], 0, 0
    for rep_seed in cell_seeds(seed, cell, repetitions):
        report = run_scenario(cfg.with_seed(rep_seed))
        etas.append(report.eta or 0.0)
        qts.append(report.q_t)
        length = report.key_length
        errs.append(float(np.mean([len(e) / length for e in report.bit_errors])))
        if report.chsh is not None:
            svals.append(report.chsh["s_value"])
        detected += report.eve_detected
        aborted += report.aborted
    echo = cfg.echo()
    row = {"cell": cell, **{key: echo[key] for key in GRID_KEYS}}
    row["repetitions"] = repetitions
    row["eta_mean"], row["eta_std"] = _mean_std(etas)
    row["q_t_mean"], row["q_t_std"] = _mean_std(qts)
    row["error_rate_mean"], row["error_rate_std"] = _mean_std(errs)
    row["s_mean"], row["s_std"] = _mean_std(svals)
    row["detection_rate"] = detected / repetitions
    row["abort_rate"] = aborted / repetitions
    return row


def sweep(param_grid: dict, base_config, repetitions: int = 10, workers: int = 1, seed: int | None = None) -> list[dict]:
    """Run every grid cell; rows come back in grid order whatever ``workers`` is."""
    if not param_grid or any(len(v) == 0 for v in param_grid.values()):
        raise InvalidArgument("sweep grid is empty")
    unknown = set(param_grid) - set(GRID_KEYS)
    if unknown:
        raise InvalidArgument(f"cannot sweep {sorted(unknown)}")
    if repetitions < 1:
        raise InvalidArgument("repetitions must be >= 1")
    base = config_values(base_config) if not isinstance(base_config, dict) else dict(base_config)
    if "key" in base and "key_length" in param_grid:
        raise InvalidArgument("a fixed key cannot be combined with a key_length grid")
    seed = base.get("seed", 0) if seed is None else seed
    names = [k for k in GRID_KEYS if k in param_grid]
    jobs = [
        (i, dict(zip(names, combo)), base, repetitions, seed)
        for i, combo in enumerate(itertools.product(*(param_grid[k] for k in names)))
    ]
    if workers <= 1:
        return [run_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, jobs))


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k) for k in CSV_COLUMNS})
    return buf.getvalue()


def sweep_from_files(config_path, grid_path, workers: int = 1, seed: int | None = None) -> str:
    base, _ = parse_pairs(Path(config_path).read_text(encoding="utf-8"), str(config_path))
    build_config(base, source=str(config_path))
    grid, reps = parse_grid(Path(grid_path).read_text(encoding="utf-8"), str(grid_path))
    return rows_to_csv(sweep(grid, base, reps, workers, seed))
