"""Flat ``key = value`` experiment configuration.

Files hold one setting per line with ``#`` comments and no sections::

    problem = peaks-noisy
    J = 1, 10, 100, 200
    runs = 200

Every key can be overridden by the CLI flag of the same name.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError

_SECTION = "experiment"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "peaks-noisy"
    algorithm: str = "II"
    J: tuple[int, ...] = (1, 10, 100, 200)
    delta: float = 0.1
    steps: int = 2000
    runs: int = 200
    seed: int = 2010
    level: float = 0.1
    grid: int = 601
    epsilon: float = 0.05
    lipschitz: Optional[float] = None
    tail: int = 2000
    tv_J: int = 100
    M: Optional[float] = None
    threads: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.algorithm not in ("I", "II"):
            raise ConfigError(f"algorithm must be I or II, got {self.algorithm!r}")
        if self.steps < 1 or self.runs < 1:
            raise ConfigError("steps and runs must be >= 1")
        if not self.J or any(j < 1 for j in self.J):
            raise ConfigError("J entries must be >= 1")
        if self.delta <= 0:
            raise ConfigError("delta must be > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.grid < 2:
            raise ConfigError("grid must be >= 2")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _convert(name: str, raw: str):
    kinds = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    try:
        if name == "J":
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if name in ("problem", "algorithm", "out"):
            return raw
        if name in ("lipschitz", "M"):
            return None if raw.lower() in ("", "none", "auto") else float(raw)
        if name in ("delta", "level", "epsilon"):
            return float(raw)
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config(text: str) -> dict:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    extra = [s for s in parser.sections() if s != _SECTION]
    if extra:
        raise ConfigError(f"config files are flat; unexpected section {extra[0]!r}")
    return {k: _convert(k, v) for k, v in parser[_SECTION].items()}


def load_config(path: Optional[str] = None, **overrides) -> ExperimentConfig:
    values = parse_config(Path(path).read_text(encoding="utf-8")) if path else {}
    for key, value in overrides.items():
        if value is None:
            continue
        values[key] = _convert(key, value) if isinstance(value, str) else value
    return ExperimentConfig(**values)
