"""Experiment configuration: a TOML document with typed scalars and nested arrays.

Example::

    scenario = "markov"
    dim = 2
    trials = 100000
    seed = 7

    [distribution]
    kind = "tight_example"
    p = 0.25

    [matrices]
    A = [[2.0, 0.5], [0.5, 1.0]]
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import ConfigError

__all__ = ["DEFAULT_SEED", "ExperimentConfig", "default_seed", "load_config"]

DEFAULT_SEED = 20240611
SEED_ENV_VAR = "MATCONC_SEED"


def default_seed() -> int:
    """``$MATCONC_SEED`` if set, else the built-in default."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR}={raw!r} is not an integer") from None


@dataclass
class ExperimentConfig:
    scenario: str
    dim: int
    distribution: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    trials: int = 0
    seed: int | None = None
    ci_level: float = 0.99
    output: str | None = None

    @property
    def effective_seed(self) -> int:
        return default_seed() if self.seed is None else self.seed

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"scenario", "dim", "distribution", "matrices", "params", "trials", "seed", "ci_level", "output"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for key in ("scenario", "dim"):
            if key not in data:
                raise ConfigError(f"missing required field {key!r}")
        cfg = cls(**data)
        cfg.validate_basic()
        return cfg

    def validate_basic(self) -> None:
        if not isinstance(self.scenario, str):
            raise ConfigError("field 'scenario' must be a string")
        if not isinstance(self.dim, int) or isinstance(self.dim, bool) or self.dim < 1:
            raise ConfigError(f"field 'dim' must be an integer >= 1, got {self.dim!r}")
        for name in ("distribution", "matrices", "params"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"field {name!r} must be a table")
        if not isinstance(self.trials, int) or self.trials < 0:
            raise ConfigError(f"field 'trials' must be an integer >= 0, got {self.trials!r}")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ConfigError(f"field 'seed' must be an integer, got {self.seed!r}")
        if not isinstance(self.ci_level, (int, float)) or not 0 < self.ci_level < 1:
            raise ConfigError(f"field 'ci_level' must lie in (0, 1), got {self.ci_level!r}")

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "dim": self.dim,
            "trials": self.trials,
            "ci_level": self.ci_level,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        if self.output is not None:
            out["output"] = self.output
        for name in ("distribution", "matrices", "params"):
            if getattr(self, name):
                out[name] = getattr(self, name)
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_toml(Path(path).read_text())
