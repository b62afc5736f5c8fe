"""Experiment configuration: a flat TOML file of typed scalars and lists.

Example::

    preset = "brown"
    section = "parabolic"
    ensembles = ["nonprimitive", "primitive"]
    n_grid = [2000, 20000, 200000]
    q_grid = [2003, 20011, 200003]
    f = "shortest_vector_bump:0.5,0.45"
    psi = "smooth_bump:0,2"
    seed = 0

Missing keys are filled from the named preset, so a preset name alone is a
valid file. ``ExperimentConfig.to_toml`` writes every key explicitly.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .modular_space import TestFunction
from .numtheory import build_sieve
from .sections import from_name
from . import weights

ENSEMBLES = ("continuous", "nonprimitive", "primitive", "twisted")
PRESET_NAMES = ("strom", "brown", "negative_control", "custom")
# product of the first four primes; multiples have phi(q)/q = 48/210
_COMPOSITE_STEP = 210


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "custom"
    section: str = "parabolic"
    ensembles: tuple[str, ...] = ("nonprimitive",)
    n_grid: tuple[int, ...] = (1000, 10000)
    q_grid: tuple[int, ...] = ()
    q_primes_only: bool = False
    twist_c: tuple[float, ...] = (0.37,)
    f: str = "shortest_vector_bump:0.5,0.45"
    psi: str = "smooth_bump:0,2"
    haar_samples: int = 10**6
    seed: int = 0
    workers: int = 1
    output: str = "runs/out"
    record_timings: bool = False
    verify: tuple[str, ...] = ()

    def validate(self) -> "ExperimentConfig":
        if self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}")
        for e in self.ensembles:
            if e not in ENSEMBLES:
                raise ConfigError(f"unknown ensemble {e!r}; choose from {ENSEMBLES}")
        if not self.ensembles:
            raise ConfigError("no ensembles requested")
        for name, grid in (("n_grid", self.n_grid), ("q_grid", self.q_grid)):
            if any(int(v) != v or v < 1 for v in grid):
                raise ConfigError(f"{name} values must be positive integers")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if "primitive" in self.ensembles and not self.q_grid:
            raise ConfigError("primitive ensemble needs a q_grid")
        needs_n = {"continuous", "nonprimitive", "twisted"} & set(self.ensembles)
        if needs_n and not self.n_grid:
            raise ConfigError("n_grid is empty")
        if self.q_primes_only:
            bad = [q for q in self.q_grid if not _is_prime(q)]
            if bad:
                raise ConfigError(f"q_primes_only but q_grid has composites {bad}")
        if not all(math.isfinite(c) for c in self.twist_c):
            raise ConfigError("twist_c must be finite")
        if self.haar_samples < 100:
            raise ConfigError("haar_samples must be at least 100")
        # TOML integers are signed 64-bit
        if not 0 <= self.seed < 2**63:
            raise ConfigError("seed must lie in [0, 2^63)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            from_name(self.section)
            TestFunction.parse(self.f)
            weights.from_spec(self.psi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def primes_near(values, limit_factor: float = 1.1) -> tuple[int, ...]:
    """Smallest prime >= each value, found with a sieve."""
    if not values:
        return ()
    sieve = build_sieve(int(max(values) * limit_factor) + 100)
    primes = sieve.primes
    out = []
    for v in values:
        idx = int(primes.searchsorted(v))
        out.append(int(primes[idx]))
    return tuple(out)


def default_q_grid(n_grid, primes_only: bool) -> tuple[int, ...]:
    """Primes near each N and, unless ``primes_only``, multiples of 210 next to them."""
    qs = set(primes_near(n_grid))
    if not primes_only:
        qs |= {_COMPOSITE_STEP * math.ceil(n / _COMPOSITE_STEP) for n in n_grid}
    return tuple(sorted(qs))


def preset(name: str) -> ExperimentConfig:
    """Fully explicit configuration for a named preset."""
    if name == "brown":
        n_grid = (2000, 20000, 200000)
        return ExperimentConfig(
            preset="brown",
            section="parabolic",
            ensembles=("nonprimitive", "primitive", "twisted"),
            n_grid=n_grid,
            q_grid=default_q_grid(n_grid, primes_only=True),
            q_primes_only=True,
            output="runs/brown",
        ).validate()
    if name == "strom":
        return ExperimentConfig(
            preset="strom",
            section="constant:sqrt2,sqrt3",
            ensembles=("continuous", "nonprimitive"),
            n_grid=(1000, 10000, 100000),
            output="runs/strom",
        ).validate()
    if name == "negative_control":
        return ExperimentConfig(
            preset="negative_control",
            section="zero",
            ensembles=("nonprimitive",),
            n_grid=(1000, 10000, 100000),
            output="runs/negative_control",
        ).validate()
    if name == "custom":
        return ExperimentConfig().validate()
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _coerce(key: str, value: Any) -> Any:
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if key not in fields:
        raise ConfigError(f"unknown key {key!r}")
    default = fields[key].default
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a list")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string")
    return value


def parse(text: str) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    base = preset(raw.get("preset", "custom"))
    changes = {k: _coerce(k, v) for k, v in raw.items()}
    if "n_grid" in changes and "q_grid" not in changes and "primitive" in changes.get("ensembles", base.ensembles):
        changes["q_grid"] = default_q_grid(changes["n_grid"], changes.get("q_primes_only", base.q_primes_only))
    return dataclasses.replace(base, **changes).validate()


def load(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)
