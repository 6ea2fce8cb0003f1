"""Flat ``key = value`` scenario files.

Blank lines and ``#`` comments are ignored.  Every key must be one of
``KEYS``; anything else is rejected with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..adversary import EveKind, EveModel
from ..errors import ConfigError, GhzQkdError
from ..protocol import ProtocolConfig
from ..security import DEFAULT_THRESHOLD

_PROTOCOL_KEYS = {
    "key_length": int,
    "alpha0_sq": float,
    "qnd_shots": int,
    "channel_loss_p": float,
    "reset_strategy": str,
    "reset_fallback": str,
    "receivers": int,
    "seed": int,
    "max_transmissions": int,
    "reset_bound": int,
}
_SCENARIO_KEYS = {
    "block_size": int,
    "eve": str,
    "eve_basis": str,
    "eve_system_size": int,
    "chsh_rounds": int,
    "chsh_threshold": float,
    "chsh_method": str,
    "key": str,
}
KEYS = {**_PROTOCOL_KEYS, **_SCENARIO_KEYS}


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: ProtocolConfig
    block_size: int | None = None
    eve: str = "none"
    eve_basis: str = "Z"
    eve_system_size: int = 2
    chsh_rounds: int = 0
    chsh_threshold: float = DEFAULT_THRESHOLD
    chsh_method: str = "sampled"
    key: tuple | None = None

    @property
    def seed(self) -> int:
        return self.protocol.seed

    def eve_model(self) -> EveModel:
        return EveModel(self.eve, self.eve_basis, self.eve_system_size)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, protocol=replace(self.protocol, seed=int(seed)))

    def echo(self) -> dict:
        out = self.protocol.echo()
        for f in fields(self):
            if f.name != "protocol":
                value = getattr(self, f.name)
                out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _convert(key: str, raw: str, line: int, source: str):
    kind = KEYS[key]
    try:
        if kind is int:
            return int(raw, 10)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}", line, source) from None
    return raw


def parse_pairs(text: str, source: str = "<config>") -> dict:
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", lineno, source)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, source)
        values[key] = _convert(key, value, lineno, source)
        where[key] = lineno
    return values, where


def build_config(values: dict, where: dict | None = None, source: str = "<config>") -> ScenarioConfig:
    where = where or {}
    if "key_length" not in values:
        raise ConfigError("missing required key 'key_length'", None, source)

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", where.get(key), source)

    key = None
    if "key" in values:
        text = values["key"]
        if any(c not in "01" for c in text):
            fail("key", f"must be a bit string, got {text!r}")
        key = tuple(int(c) for c in text)
        if len(key) != values["key_length"]:
            fail("key", f"has {len(key)} bits but key_length is {values['key_length']}")
    block = values.get("block_size")
    if block is not None and block < 1:
        fail("block_size", "must be >= 1")
    eve = values.get("eve", "none")
    try:
        EveKind(eve)
    except ValueError:
        fail("eve", f"unknown attack {eve!r}; choose from {[k.value for k in EveKind]}")
    if values.get("chsh_rounds", 0) < 0:
        fail("chsh_rounds", "must be >= 0")
    if values.get("chsh_method", "sampled") not in ("sampled", "per_round"):
        fail("chsh_method", "must be 'sampled' or 'per_round'")

    proto = {k: v for k, v in values.items() if k in _PROTOCOL_KEYS}
    if block is not None and block < proto["key_length"]:
        # qubit ceiling applies per GHZ block, not to the whole key
        proto_cfg = _protocol(dict(proto, key_length=block), where, source)
        proto_cfg = replace_unchecked(proto_cfg, key_length=proto["key_length"])
    else:
        proto_cfg = _protocol(proto, where, source)
    try:
        cfg = ScenarioConfig(
            protocol=proto_cfg,
            block_size=block,
            eve=eve,
            eve_basis=values.get("eve_basis", "Z"),
            eve_system_size=values.get("eve_system_size", 2),
            chsh_rounds=values.get("chsh_rounds", 0),
            chsh_threshold=values.get("chsh_threshold", DEFAULT_THRESHOLD),
            chsh_method=values.get("chsh_method", "sampled"),
            key=key,
        )
        cfg.eve_model()
    except GhzQkdError as exc:
        raise ConfigError(str(exc), None, source) from None
    return cfg


def _protocol(values: dict, where: dict, source: str) -> ProtocolConfig:
    try:
        return ProtocolConfig(**values)
    except (GhzQkdError, ValueError) as exc:
        line = next((where[k] for k in values if k in where and k in str(exc)), None)
        raise ConfigError(str(exc), line, source) from None


def replace_unchecked(cfg: ProtocolConfig, **changes) -> ProtocolConfig:
    """Copy a validated config, changing fields without re-running validation.

    Used for chained runs where ``key_length`` spans several GHZ blocks and
    so may exceed the per-register qubit ceiling.
    """
    clone = object.__new__(ProtocolConfig)
    for f in fields(ProtocolConfig):
        object.__setattr__(clone, f.name, changes.get(f.name, getattr(cfg, f.name)))
    return clone


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    values, where = parse_pairs(text, source)
    return build_config(values, where, source)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
