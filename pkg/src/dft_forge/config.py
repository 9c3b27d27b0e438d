"""Resolved CLI settings: flags override environment, which overrides the config file."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_ENV = "DFT_FORGE_CONFIG"
ENV_PREFIX = "DFT_FORGE_"


@dataclass(frozen=True)
class CliConfig:
    out_dir: str = "."
    seed: int = 0
    jobs: int = 1
    k: int = 5
    synth_command: str | None = None
    equiv_stimuli: int = 1024
    equiv_cycles: int = 32
    epochs: int = 200
    llm_endpoint: str | None = None
    llm_model: str | None = None
    llm_token_env: str = "DFT_FORGE_LLM_TOKEN"
    llm_timeout: float = 120.0
    llm_max_retries: int = 4

    def to_dict(self) -> dict:
        return asdict(self)


class ConfigError(ValueError):
    pass


def _coerce(name: str, raw, typ):
    if raw is None:
        return None
    try:
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected {typ}, got {raw!r}") from exc
    return str(raw)


def _types() -> dict[str, str]:
    out = {}
    for f in fields(CliConfig):
        t = str(f.type)
        out[f.name] = "int" if t == "int" else "float" if t == "float" else "str"
    return out


def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    doc = doc.get("dft_forge", doc)
    unknown = sorted(set(doc) - set(_types()))
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {unknown}")
    return doc


def resolve(flags: dict | None = None, env: dict | None = None, config_path: str | None = None) -> CliConfig:
    """Merge defaults < file < environment < flags. ``None`` flags are unset."""
    env = os.environ if env is None else env
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    types = _types()
    merged: dict = {}
    path = config_path or env.get(CONFIG_ENV)
    if path:
        merged.update(read_config_file(path))
    for name in types:
        key = ENV_PREFIX + name.upper()
        if key in env and key != CONFIG_ENV:
            merged[name] = env[key]
    merged.update({k: v for k, v in flags.items() if k in types})
    return CliConfig(**{k: _coerce(k, v, types[k]) for k, v in merged.items()})
