"""Layered runtime configuration.

Every setting has one name used everywhere: a CLI flag (--data-dir), an
environment variable (SKYSTREAM_DATA_DIR), and a key in an optional JSON
config file ("data_dir"). Precedence, highest first: flag, environment,
file, built-in default.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional, get_type_hints

ENV_PREFIX = "SKYSTREAM_"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = "skystream-data"
    topic: str = "flight-positions"
    partitions: int = 4
    segment_max_bytes: int = 64 * 1024 * 1024
    retention_seconds: int = 24 * 3600
    batch_interval_seconds: int = 5
    window_seconds: int = 60
    allowed_lateness_seconds: int = 60
    max_records_per_partition: int = 10000
    parallelism: int = 2
    geo_precision: int = 4
    refresh_interval_seconds: float = 0.0
    host: str = "127.0.0.1"
    port: int = 8080
    cors: bool = True
    group_id: str = "indexer"
    positions_index: str = "flights_live"
    windows_index: str = "flights_windows"
    seed: int = 42
    flight_count: int = 500
    tick_seconds: int = 5
    duration_seconds: int = 3600

    def validate(self) -> None:
        checks = (
            (bool(self.data_dir), "data_dir must be non-empty"),
            (bool(self.topic), "topic must be non-empty"),
            (self.partitions >= 1, "partitions must be >= 1"),
            (self.segment_max_bytes >= 1024, "segment_max_bytes must be >= 1024"),
            (self.retention_seconds >= 1, "retention_seconds must be >= 1"),
            (self.batch_interval_seconds >= 1, "batch_interval_seconds must be >= 1"),
            (self.window_seconds >= 1, "window_seconds must be >= 1"),
            (self.window_seconds % max(self.batch_interval_seconds, 1) == 0,
             "window_seconds must be a multiple of batch_interval_seconds"),
            (self.allowed_lateness_seconds >= 0, "allowed_lateness_seconds must be >= 0"),
            (1 <= self.max_records_per_partition <= 10000,
             "max_records_per_partition must be in [1, 10000]"),
            (self.parallelism >= 1, "parallelism must be >= 1"),
            (1 <= self.geo_precision <= 12, "geo_precision must be in [1, 12]"),
            (self.refresh_interval_seconds >= 0,
             "refresh_interval_seconds must be >= 0"),
            (0 <= self.port <= 65535, "port must be in [0, 65535]"),
            (bool(self.group_id), "group_id must be non-empty"),
            (bool(self.positions_index), "positions_index must be non-empty"),
            (bool(self.windows_index), "windows_index must be non-empty"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.flight_count >= 1, "flight_count must be >= 1"),
            (self.tick_seconds >= 1, "tick_seconds must be >= 1"),
            (self.duration_seconds >= 1, "duration_seconds must be >= 1"),
        )
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


_HINTS = get_type_hints(RunConfig)
SETTING_NAMES = tuple(f.name for f in fields(RunConfig))


def env_var_name(setting: str) -> str:
    return ENV_PREFIX + setting.upper()


def _coerce(name: str, value: Any, source: str) -> Any:
    target = _HINTS[name]
    if target is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            folded = value.strip().lower()
            if folded in _TRUE:
                return True
            if folded in _FALSE:
                return False
        raise ConfigError(f"{source}: {name} expects a boolean, got {value!r}")
    if target is int:
        if isinstance(value, bool):
            raise ConfigError(f"{source}: {name} expects an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, str):
            try:
                return int(value.strip())
            except ValueError:
                pass
        raise ConfigError(f"{source}: {name} expects an integer, got {value!r}")
    if target is float:
        if isinstance(value, bool):
            raise ConfigError(f"{source}: {name} expects a number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value.strip())
            except ValueError:
                pass
        raise ConfigError(f"{source}: {name} expects a number, got {value!r}")
    if isinstance(value, str):
        return value
    raise ConfigError(f"{source}: {name} expects a string, got {value!r}")


def _load_file(path: str) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(raw) - set(SETTING_NAMES)
    if unknown:
        raise ConfigError(
            f"config file {path} has unknown keys: {sorted(unknown)}"
        )
    return raw


def resolve_config(overrides: Optional[Mapping[str, Any]] = None,
                   env: Optional[Mapping[str, str]] = None,
                   config_file: Optional[str] = None) -> RunConfig:
    """Merges the four layers into a validated RunConfig.

    overrides maps setting names to already-typed values (None entries are
    ignored); env is consulted for SKYSTREAM_* variables.
    """
    env = os.environ if env is None else env
    merged: dict[str, Any] = {}
    if config_file is not None:
        for name, value in _load_file(config_file).items():
            merged[name] = _coerce(name, value, f"config file {config_file}")
    for name in SETTING_NAMES:
        var = env_var_name(name)
        if var in env:
            merged[name] = _coerce(name, env[var], f"environment {var}")
    if overrides:
        unknown = set(overrides) - set(SETTING_NAMES)
        if unknown:
            raise ConfigError(f"unknown settings: {sorted(unknown)}")
        for name, value in overrides.items():
            if value is not None:
                merged[name] = _coerce(name, value, "flag")
    config = RunConfig(**merged)
    config.validate()
    return config
