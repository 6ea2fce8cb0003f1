"""Command line entry point: ``ghzqkd run|table|sweep|chsh``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, GhzQkdError
from ..protocol import ProtocolConfig
from ..security import run_chsh_test
from .config import load_config
from .runner import EXIT_CONFIG, EXIT_EVE_DETECTED, EXIT_OK, exit_code, run_scenario
from .sweep import sweep_from_files
from .table import efficiency_table, format_table


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    report = run_scenario(cfg, transcript=args.transcript, seed=args.seed)
    _emit(report.to_json(include_timing=args.timing), args.out)
    if args.out:
        print(f"report written to {args.out} (exit {exit_code(report)})", file=sys.stderr)
    return exit_code(report)


def cmd_table(args) -> int:
    config = ProtocolConfig(key_length=args.key_length, seed=args.seed or 0)
    _emit(format_table(efficiency_table(config)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _emit(sweep_from_files(args.config, args.grid, workers=args.workers, seed=args.seed), args.out)
    return EXIT_OK


def cmd_chsh(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    rounds = args.rounds or cfg.chsh_rounds or 10_000
    seed_ss = np.random.SeedSequence(cfg.seed).spawn(2)[1]
    verdict = run_chsh_test(
        cfg.protocol,
        cfg.eve_model(),
        rounds,
        rng=np.random.default_rng(seed_ss),
        threshold=cfg.chsh_threshold,
        method=cfg.chsh_method,
        block=min(cfg.block_size or cfg.protocol.key_length, cfg.protocol.key_length),
    )
    _emit(json.dumps(verdict.to_dict(), sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_EVE_DETECTED if verdict.eve_detected else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghzqkd", description="GHZ-register key distribution simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="write output here instead of stdout")

    p = sub.add_parser("run", help="run one scenario and print its JSON report")
    p.add_argument("config")
    p.add_argument("--transcript", default=None, help="write the classical transcript as JSONL")
    p.add_argument("--timing", action="store_true", help="include wall_time_ms in the report")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="print the efficiency comparison table")
    p.add_argument("--key-length", type=int, default=12)
    common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sweep", help="run a parameter grid and write CSV")
    p.add_argument("config")
    p.add_argument("--grid", required=True)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("chsh", help="run only the CHSH test for a scenario")
    p.add_argument("config")
    p.add_argument("--rounds", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_chsh)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GhzQkdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
