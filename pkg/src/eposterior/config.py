"""Flat ``key = value`` configuration files with ``#`` comments."""

from __future__ import annotations

import hashlib

from .errors import ConfigurationError


def parse(text: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        if key in cfg:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def dump(cfg: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def digest(cfg: dict) -> str:
    """Order-independent short hash used in output provenance headers."""
    canon = "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class Settings:
    """Typed access to a parsed configuration with defaults."""

    def __init__(self, cfg: dict):
        self.cfg = dict(cfg)

    def get(self, key, default=None):
        return self.cfg.get(key, default)

    def float(self, key, default=None) -> float:
        value = self.cfg.get(key, default)
        if value is None:
            raise ConfigurationError(f"missing required key {key!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"key {key!r} must be a number, got {value!r}") from None

    def int(self, key, default=None) -> int:
        value = self.float(key, default)
        if value != int(value):
            raise ConfigurationError(f"key {key!r} must be an integer, got {value!r}")
        return int(value)

    def str(self, key, default=None) -> str:
        value = self.cfg.get(key, default)
        if value is None:
            raise ConfigurationError(f"missing required key {key!r}")
        return str(value)

    def floats(self, key, default=None) -> list:
        value = self.cfg.get(key, default)
        if value is None:
            raise ConfigurationError(f"missing required key {key!r}")
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        try:
            return [float(v) for v in str(value).split(",") if v.strip()]
        except ValueError:
            raise ConfigurationError(f"key {key!r} must be a comma-separated list of numbers") from None
