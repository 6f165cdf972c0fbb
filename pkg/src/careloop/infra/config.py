"""Configuration: YAML file, environment overrides, explicit flags.

Precedence is config file < CARELOOP_* environment variables < explicit
overrides (CLI flags). Everything has a sane desk-scale default so the
engine runs with no config at all.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import yaml

from ..errors import ConfigError

ENV_PREFIX = "CARELOOP_"


@dataclass(frozen=True)
class AppConfig:
    data_dir: str = "./data"
    storage: str = "file"  # "file" or "memory"
    seed: int | None = None
    host: str = "127.0.0.1"
    port: int = 8080
    expire_after_days: float = 14.0
    eval_gate: float = 0.9
    f1_threshold: float = 0.8
    guardrail_window: int = 50
    breach_threshold: int = 3
    bus_workers: int = 4
    backoff_base_ms: float = 50.0
    backoff_factor: float = 2.0
    backoff_jitter_pct: float = 20.0
    backoff_cap_ms: float = 5000.0
    max_retries: int = 3
    agent_delay_seconds: float = 0.0  # fault injection knob for decoupling tests
    webhook_url: str | None = None
    enable_post_agent: bool = True
    pii_patterns: tuple = ()  # extra (name, regex, replacement) triples

    def path(self, *parts: str) -> str:
        return os.path.join(self.data_dir, *parts)


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, kind, raw):
    if raw is None:
        return None
    if kind == "int | None" or kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)
    if kind is bool or kind == "bool":
        if isinstance(raw, bool):
            return raw
        lowered = str(raw).strip().lower()
        if lowered in _BOOL_TRUE:
            return True
        if lowered in _BOOL_FALSE:
            return False
        raise ConfigError("bad boolean value", field=name, value=raw)
    return raw


def load_config(
    config_path: str | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> AppConfig:
    env = os.environ if env is None else env
    values: dict = {}
    known = {f.name: f.type for f in fields(AppConfig)}

    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", path=config_path)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must be a mapping", path=config_path)
        for key, value in loaded.items():
            if key not in known:
                raise ConfigError("unknown config key", key=key)
            values[key] = value

    for name in known:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = env[env_key]

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError("unknown config key", key=key)
        values[key] = value

    coerced = {}
    for key, value in values.items():
        target = known[key]
        if key == "seed":
            coerced[key] = None if value in (None, "", "none") else int(value)
        elif key == "pii_patterns":
            coerced[key] = tuple(tuple(p) for p in value)
        else:
            coerced[key] = _coerce(key, target, value)

    config = AppConfig(**coerced)
    if config.storage not in ("file", "memory"):
        raise ConfigError("storage must be 'file' or 'memory'", value=config.storage)
    return config
