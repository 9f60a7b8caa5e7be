"""Pipeline configuration: defaults, config file, environment lookup.

Precedence, lowest to highest: built-in defaults, config file (either the
--config flag or the CLUSTCRYPT_CONFIG environment variable), command-line
flags.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

CONFIG_ENV = "CLUSTCRYPT_CONFIG"

_INT_FIELDS = ("keywords_per_doc", "abstract_size", "prune_width", "cutoff")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    keywords_per_doc: int = 20
    abstract_size: int = 100
    prune_width: int = 3
    cutoff: int = 10
    k_mode: int | str = "auto"
    codec: str = "keyed"

    def validate(self) -> "PipelineConfig":
        for name in _INT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.k_mode != "auto":
            if not isinstance(self.k_mode, int) or self.k_mode < 1:
                raise ConfigError(f"k_mode must be 'auto' or a positive integer, got {self.k_mode!r}")
        if self.codec not in ("keyed", "identity"):
            raise ConfigError(f"codec must be 'keyed' or 'identity', got {self.codec!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "keywords_per_doc": self.keywords_per_doc,
            "abstract_size": self.abstract_size,
            "prune_width": self.prune_width,
            "cutoff": self.cutoff,
            "k_mode": self.k_mode,
            "codec": self.codec,
        }


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"config value {name} must be an integer, got {raw!r}")
    if name == "k_mode":
        if raw == "auto":
            return "auto"
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"k_mode must be 'auto' or an integer, got {raw!r}")
    if name == "codec":
        return raw
    raise ConfigError(f"unknown config key {name!r}")


def parse_config_file(path: str | Path) -> dict:
    """Line-oriented `key = value`; blank lines and #-comments are skipped."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`")
        name, raw = stripped.split("=", 1)
        name = name.strip()
        values[name] = _coerce(name, raw)
    return values


def load_config(explicit_path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Resolve the effective config from defaults, file, and overrides."""
    config = PipelineConfig()
    path = explicit_path or os.environ.get(CONFIG_ENV)
    if path:
        config = replace(config, **parse_config_file(path))
    if overrides:
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    return config.validate()
