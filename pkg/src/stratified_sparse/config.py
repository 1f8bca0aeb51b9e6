"""Experiment configuration: flat ``key = value`` files with bracketed sections."""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

SUITES = ("group", "spectrum", "heat", "spectral", "multiplier-check", "decay", "sparse-check",
          "grids", "weights", "quantitative", "riesz", "dispersive")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "torus:d=1,n=64"
    s0: float = 32.0
    mu: float = 0.5
    nu: float = 2.0
    theta: float = 1.0
    beta: float = 2.0
    epsilon: float = 0.1
    slack: float = 0.01
    k: float = 1.0
    alpha: float = 1.0
    r1: float = 1.0
    r2: float = 2.0
    p: tuple[float, ...] = (2.0,)
    q: tuple[float, ...] = (2.0,)
    a: tuple[float, ...] = (0.0,)
    mode: str = "ii"
    t: float = 1.0
    trials: int = 100
    seed: int = 0
    budget: float = 600.0
    max_size: int = 4096
    out: str = "runs"

    def validate(self) -> "ExperimentConfig":
        errors = []
        if not 0 < self.mu < 1:
            errors.append(f"mu={self.mu} must lie in (0, 1)")
        elif not math.isclose(self.nu, 1 / self.mu, rel_tol=1e-12):
            errors.append(f"nu={self.nu} must equal 1/mu={1 / self.mu} (mu={self.mu})")
        if self.s0 <= 0:
            errors.append("s0 must be positive")
        if self.theta == 0:
            errors.append("theta must be nonzero")
        if self.beta < 0:
            errors.append("beta must be nonnegative")
        if self.trials < 1:
            errors.append("trials must be positive")
        if self.r1 < 1 or self.r2 < 1:
            errors.append("r1 and r2 must be at least 1")
        if self.mode not in ("i", "ii", "iii"):
            errors.append(f"mode={self.mode!r} must be one of i, ii, iii")
        if errors:
            raise ConfigError("; ".join(errors))
        return self

    def canonical(self) -> str:
        items = []
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            items.append(f"{f.name}={v}")
        return "\n".join(items)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value: str):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            return int(value)
        if kind.startswith("tuple"):
            return _floats(value)
        return str(value).strip()
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc


def load_config(path: str | Path | None = None, overrides=()) -> ExperimentConfig:
    """Read a config file (all sections are merged) and apply ``key=value`` overrides.

    Setting only one of ``mu`` and ``nu`` fills in the other.
    """
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, value in parser.items(section):
                if key in values:
                    raise ConfigError(f"key {key!r} appears in more than one section")
                values[key] = _coerce(key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), value)
    if "mu" in values and "nu" not in values:
        values["nu"] = 1 / values["mu"]
    elif "nu" in values and "mu" not in values:
        values["mu"] = 1 / values["nu"]
    return replace(ExperimentConfig(), **values).validate()


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
