"""Run configuration: embedded defaults, TOML overrides, strict validation.

A config file only needs the keys it changes; everything else comes from
the defaults below.  Unknown tables or keys are errors, not warnings, so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                      # Python 3.10
    import tomli as tomllib

from .array import ReadModel
from .device import CellParams


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


@dataclass(frozen=True)
class RunConfig:
    # [run]
    array_size: int = 131072
    seed: int = 1
    runs: int = 10
    temperature_c: float = 25.0
    temperatures: tuple[float, ...] = (-40.0, 25.0, 125.0)
    cv: float = 0.1
    # [write]
    v1: float = 1.8
    beta: float = 0.15
    first_polarity: int = 0
    pulse_width_s: float = 20e-9
    # [postproc]
    xor_arity: int = 7
    response_width: int = 128
    # [read]
    vdd: float = 1.8
    n_reads_tmv: int = 15
    device: CellParams = field(default_factory=CellParams)
    read: ReadModel = field(default_factory=ReadModel)

    def __post_init__(self) -> None:
        if self.array_size < 1:
            raise ConfigError(f"array_size must be >= 1, got {self.array_size}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 <= self.cv < 1.0:
            raise ConfigError(f"cv must be in [0, 1), got {self.cv}")
        if self.v1 <= 0.0:
            raise ConfigError(f"v1 must be positive, got {self.v1}")
        if self.v1 - self.beta <= 0.0:
            raise ConfigError(
                f"v1 - beta = {self.v1 - self.beta} must stay positive")
        if self.first_polarity not in (0, 1):
            raise ConfigError(f"first_polarity must be 0 or 1, "
                              f"got {self.first_polarity}")
        if self.xor_arity < 1:
            raise ConfigError(f"xor_arity must be >= 1, got {self.xor_arity}")
        if self.response_width < 1:
            raise ConfigError(f"response_width must be >= 1, "
                              f"got {self.response_width}")
        if self.n_reads_tmv < 1 or self.n_reads_tmv % 2 == 0:
            raise ConfigError(f"n_reads_tmv must be odd and positive, "
                              f"got {self.n_reads_tmv}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["temperatures"] = list(self.temperatures)
        return d


_RUN_KEYS = {"array_size", "seed", "runs", "temperature_c", "temperatures", "cv"}
_WRITE_KEYS = {"v1", "beta", "first_polarity", "pulse_width_s"}
_POSTPROC_KEYS = {"xor_arity", "response_width"}
_READ_KEYS = {"vdd", "n_reads_tmv", "flip_prob_raw", "flip_prob_swb",
              "temp_slope", "vdd_slope"}
_DEVICE_KEYS = {f.name for f in dataclasses.fields(CellParams)} - {"width_factor"}


def _take(table: dict, allowed: set[str], where: str) -> dict:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    return dict(table)


def config_from_dict(raw: dict) -> RunConfig:
    known_tables = {"run", "write", "postproc", "read", "device"}
    unknown = set(raw) - known_tables
    if unknown:
        raise ConfigError(f"unknown table(s): {sorted(unknown)}")
    kwargs: dict = {}
    kwargs.update(_take(raw.get("run", {}), _RUN_KEYS, "run"))
    kwargs.update(_take(raw.get("write", {}), _WRITE_KEYS, "write"))
    kwargs.update(_take(raw.get("postproc", {}), _POSTPROC_KEYS, "postproc"))
    read_kwargs = _take(raw.get("read", {}), _READ_KEYS, "read")
    for k in ("vdd", "n_reads_tmv"):
        if k in read_kwargs:
            kwargs[k] = read_kwargs.pop(k)
    device_kwargs = _take(raw.get("device", {}), _DEVICE_KEYS, "device")
    if "temperatures" in kwargs:
        kwargs["temperatures"] = tuple(float(t) for t in kwargs["temperatures"])
    try:
        kwargs["device"] = CellParams(**device_kwargs)
        kwargs["read"] = ReadModel(**read_kwargs)
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Path | str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)


def default_toml() -> str:
    """The full default configuration, printable as a valid config file."""
    return render_toml(RunConfig())


def render_toml(cfg: RunConfig) -> str:
    """Render a resolved configuration as a loadable TOML document."""
    dev = cfg.device
    rd = cfg.read
    temps = ", ".join(str(t) for t in cfg.temperatures)
    return f"""\
[run]
array_size = {cfg.array_size}
seed = {cfg.seed}
runs = {cfg.runs}
temperature_c = {cfg.temperature_c}
temperatures = [{temps}]
cv = {cfg.cv}

[write]
v1 = {cfg.v1}
beta = {cfg.beta}
first_polarity = {cfg.first_polarity}
pulse_width_s = {cfg.pulse_width_s}

[postproc]
xor_arity = {cfg.xor_arity}
response_width = {cfg.response_width}

[read]
vdd = {cfg.vdd}
n_reads_tmv = {cfg.n_reads_tmv}
flip_prob_raw = {rd.flip_prob_raw}
flip_prob_swb = {rd.flip_prob_swb}
temp_slope = {rd.temp_slope}
vdd_slope = {rd.vdd_slope}

[device]
ic_ref = {dev.ic_ref}
ic_tc = {dev.ic_tc}
track_resistance = {dev.track_resistance}
ron_ref = {dev.ron_ref}
ron_tc = {dev.ron_tc}
steepness = {dev.steepness}
width_coeff = {dev.width_coeff}
"""
