"""Experiment configuration: a flat key-value text format, strict parsing,
and content hashing for reproducibility stamps."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .sampling import INF

PROBLEMS = ("advection1", "advection2", "advection3", "burgers", "darcy")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    nu: float = INF
    sigma: float = 0.2
    n_features: int = 5000
    alpha: float = 0.0
    p: float = 2.0
    noise_train_input: float = 0.0
    noise_train_output: float = 0.0
    noise_test_input: float = 0.0
    n_train: int = 1000
    n_test: int = 800
    n_validation: int = 200
    grid_size: int = 40
    grid_kind: str = "uniform"  # uniform | jittered
    coefficient_field: str = "real"  # real | complex
    input_scale: float = 1.0  # multiplier on inputs before the feature map
    seed: int = 0
    trials: int = 1
    # time-stepper knobs, consumed by the burgers problem only
    viscosity: float = 0.1
    final_time: float = 1.0
    dt: float = 1e-4

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(
                f"unknown problem {self.problem!r}; expected one of {PROBLEMS}"
            )
        for name in ("n_train", "n_test", "n_validation", "trials", "n_features",
                     "grid_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("noise_train_input", "noise_train_output", "noise_test_input"):
            level = getattr(self, name)
            if not (0.0 <= level < 1.0):
                raise ConfigError(f"{name} must be in [0, 1), got {level}")
        if self.grid_kind not in ("uniform", "jittered"):
            raise ConfigError(f"unknown grid_kind {self.grid_kind!r}")
        if self.coefficient_field not in ("real", "complex"):
            raise ConfigError(
                f"unknown coefficient_field {self.coefficient_field!r}"
            )
        if self.input_scale <= 0:
            raise ConfigError(f"input_scale must be positive, got {self.input_scale}")
        if self.alpha < 0 or self.p < 0:
            raise ConfigError("alpha and p must be nonnegative")


_FIELD_TYPES = {
    f.name: f.type if isinstance(f.type, str) else f.type.__name__
    for f in dataclasses.fields(ExperimentConfig)
}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "str":
        return raw
    if kind == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects an integer, got {raw!r}") from exc
    value = INF if raw.lower() in ("inf", "infinity") else None
    if value is None:
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects a number, got {raw!r}") from exc
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse `key = value` lines ('#' comments allowed). Unknown keys are
    errors, as is a missing problem name."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, val)
    if "problem" not in values:
        raise ConfigError("config must set a problem name")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_lines(cfg: ExperimentConfig) -> list[str]:
    """Canonical serialized form (field order, repr values)."""
    out = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, float) and math.isinf(value):
            value = "inf"
        out.append(f"{f.name} = {value}")
    return out


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable short hash of the canonical serialization."""
    digest = hashlib.sha256("\n".join(config_lines(cfg)).encode())
    return digest.hexdigest()[:16]
