"""Run configuration: one dataclass per subcommand, fail-closed parsing.

Every field has a documented default; unknown keys are rejected so that a
misspelled key surfaces immediately instead of silently using a default.
Configs round-trip through ``to_dict``/``from_dict`` unchanged.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .certify import SMALL_BALL_P
from .errors import ConfigError

FORMAT_VERSION = 1

_MISSING = dataclasses.MISSING


def _from_dict(cls, data: dict, label: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown {label} config key(s): {', '.join(unknown)}")
    missing = sorted(
        name for name, f in fields.items()
        if f.default is _MISSING and f.default_factory is _MISSING and name not in data)
    if missing:
        raise ConfigError(f"missing required {label} config key(s): {', '.join(missing)}")
    cfg = cls(**data)
    if cfg.format_version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {cfg.format_version}; "
                          f"this build reads version {FORMAT_VERSION}")
    cfg.validate()
    return cfg


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


@dataclass
class _Base:
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self):
        pass


@dataclass
class SimulateConfig(_Base):
    system: str = _MISSING  # type: ignore[assignment]
    K: int = _MISSING  # type: ignore[assignment]
    format_version: int = FORMAT_VERSION
    out: str = "out"
    tag: str = "trajectory"
    master_seed: int = 0
    stream: int = 0
    generator: str = "exact"       # exact | augmented
    p: int | None = None           # required when generator == "augmented"
    x0: list | None = None         # zeros when omitted
    sigma_u: float = 0.0           # input scale for systems carrying B
    a0_convention: str = "derivation"
    plot: bool = True

    def validate(self):
        _require(self.generator in ("exact", "augmented"),
                 "generator must be 'exact' or 'augmented'")
        if self.generator == "augmented":
            _require(self.p is not None and self.p >= 1,
                     "augmented simulation needs p >= 1")
        _require(self.K >= 1, "K must be at least 1")
        _require(self.master_seed >= 0, "master_seed must be non-negative")


@dataclass
class IdentifyConfig(_Base):
    trajectory: str = _MISSING  # type: ignore[assignment]
    p: int = _MISSING  # type: ignore[assignment]
    format_version: int = FORMAT_VERSION
    out: str = "out"
    tag: str = "estimate"
    mode: str = "full"             # full | structured
    drop_initial: bool = False
    system: str | None = None      # supplies B for input-bearing trajectories

    def validate(self):
        _require(self.mode in ("full", "structured"),
                 "mode must be 'full' or 'structured'")
        _require(self.p >= 1, "p must be at least 1")


@dataclass
class CertifyConfig(_Base):
    system: str = _MISSING  # type: ignore[assignment]
    p: int = _MISSING  # type: ignore[assignment]
    K: int = _MISSING  # type: ignore[assignment]
    k: int = _MISSING  # type: ignore[assignment]
    format_version: int = FORMAT_VERSION
    out: str = "out"
    tag: str = "certificate"
    delta: float = 0.1
    variant: str = "autonomous"    # autonomous | with_inputs
    sigma_u: float = 0.0
    C_const: float = 90.0 / SMALL_BALL_P
    c_const: float = 10.0 / SMALL_BALL_P ** 2
    gramian_index: str = "k"
    sigma_scaling: str = "sigma"
    a0_convention: str = "derivation"

    def validate(self):
        _require(self.variant in ("autonomous", "with_inputs"),
                 "variant must be 'autonomous' or 'with_inputs'")
        _require(self.p >= 1, "p must be at least 1")


@dataclass
class MontecarloConfig(_Base):
    system: str = _MISSING  # type: ignore[assignment]
    p: int = _MISSING  # type: ignore[assignment]
    K_list: list = _MISSING  # type: ignore[assignment]
    trials: int = _MISSING  # type: ignore[assignment]
    format_version: int = FORMAT_VERSION
    out: str = "out"
    tag: str = "campaign"
    delta: float = 0.1
    master_seed: int = 0
    sigma_u: float = 0.0
    generator: str = "augmented"   # augmented | exact
    mode: str = "full"             # full | structured
    x0: list | None = None         # all-ones when omitted
    C_const: float = 90.0 / SMALL_BALL_P
    c_const: float = 10.0 / SMALL_BALL_P ** 2
    gramian_index: str = "k"
    sigma_scaling: str = "sigma"
    a0_convention: str = "derivation"
    threads: int | None = None     # None = available parallelism
    plot: bool = True

    def validate(self):
        _require(bool(self.K_list), "K_list must not be empty")
        _require(self.trials >= 1, "trials must be at least 1")
        _require(self.generator in ("augmented", "exact"),
                 "generator must be 'augmented' or 'exact'")
        _require(self.mode in ("full", "structured"),
                 "mode must be 'full' or 'structured'")
        _require(self.master_seed >= 0, "master_seed must be non-negative")


@dataclass
class ForecastConfig(_Base):
    data: str = _MISSING  # type: ignore[assignment]
    format_version: int = FORMAT_VERSION
    out: str = "out"
    tag: str = "forecast"
    alpha: float | list = 0.5      # scalar or per-channel orders
    p: int | None = None           # None = window_size - 2
    window_size: int = 10
    window_sizes: list | None = None  # enables the sweep output
    delimiter: str = ","
    channel_columns: list | None = None
    max_rows: int | None = None
    zscore: bool = False
    sliding: bool = False
    mode: str = "full"             # full | structured
    drop_initial: bool = False
    threads: int | None = None
    plot: bool = True

    def validate(self):
        _require(self.window_size >= 3, "window_size must be at least 3")
        _require(self.mode in ("full", "structured"),
                 "mode must be 'full' or 'structured'")


_CONFIG_TYPES = {
    "simulate": SimulateConfig,
    "identify": IdentifyConfig,
    "certify": CertifyConfig,
    "montecarlo": MontecarloConfig,
    "forecast": ForecastConfig,
}


def config_class(subcommand: str):
    return _CONFIG_TYPES[subcommand]


def parse_config(subcommand: str, data: dict):
    """Build the subcommand's config from a plain dict, rejecting unknown keys."""
    return _from_dict(_CONFIG_TYPES[subcommand], data, subcommand)


def load_config(subcommand: str, path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return parse_config(subcommand, data)
