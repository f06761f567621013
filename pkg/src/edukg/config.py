"""Runtime settings: TOML config file with environment-variable overrides."""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

ENV_PREFIX = "EDUKG_"


@dataclass
class Settings:
    kb_path: str = "data/kb"
    materials_dir: str = "data/materials"
    sessions_dir: str = "data/sessions"
    broker_url: str = "memory://"
    linker: str = "local"  # "local" or a Spotlight endpoint URL
    threshold: float = 0.192
    extractor: str = "embedrank"
    keyphrase_n: int = 15
    related_cap: int = 20
    category_cap: int = 5
    workers: int = 2
    api_token: str = ""
    host: str = "127.0.0.1"
    port: int = 8000

    def validate(self) -> "Settings":
        if not -1.0 <= self.threshold <= 1.0:
            raise ConfigurationError(f"threshold must be in [-1, 1], got {self.threshold}")
        if self.extractor not in ("embedrank", "singlerank"):
            raise ConfigurationError(f"unknown extractor {self.extractor!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        return self


def load_settings(config_file: str | None = None, env: dict | None = None) -> Settings:
    env = os.environ if env is None else env
    values: dict = {}
    if config_file:
        path = Path(config_file)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {config_file}")
        values.update(tomllib.loads(path.read_text()))

    def override(key: str, cast):
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = cast(raw)

    override("kb_path", str)
    override("materials_dir", str)
    override("sessions_dir", str)
    override("broker_url", str)
    override("linker", str)
    override("threshold", float)
    override("extractor", str)
    override("keyphrase_n", int)
    override("related_cap", int)
    override("category_cap", int)
    override("workers", int)
    override("api_token", str)
    override("host", str)
    override("port", int)

    known = set(Settings.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown settings: {sorted(unknown)}")
    return Settings(**values).validate()
