"""Run configuration schema (YAML or JSON) for the command-line workflows."""
from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import units

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelBlock(_Block):
    d: int = 3
    p: int = 6
    alpha: float | None = None
    delta: float = 0.0

    @model_validator(mode="after")
    def _dims(self):
        if self.p <= self.d:
            raise ValueError(f"p must exceed d (got d={self.d}, p={self.p})")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        return self


class PhysicalBlock(_Block):
    """Physical inputs with unit suffixes, e.g. omega: "154 kHz"."""

    omega: str
    density: str
    c6: str = "1.7e19 au"
    detuning: str = "0 Hz"

    def resolve(self, d: int, p: int) -> dict:
        try:
            return {
                "rabi_frequency": units.angular_frequency(self.omega),
                "density": units.density(self.density, d),
                "interaction_coefficient": units.interaction_coefficient(self.c6, p),
                "laser_detuning": units.angular_frequency(self.detuning),
            }
        except units.UnitParseError as exc:
            raise ConfigError(str(exc)) from exc


class EnsembleBlock(_Block):
    N: int = Field(10, ge=1)
    geometry: Literal["periodic_box", "open_gaussian", "open_line"] = "periodic_box"
    realizations: int = Field(20, ge=1)
    r_min: float = Field(0.1, ge=0.0)
    sigmas: list[float] | None = None


class BasisBlock(_Block):
    mode: Literal["full", "truncated", "adaptive"] = "adaptive"
    n_max: int | None = None
    start: int = Field(1, ge=1)
    rel_change: float = Field(0.01, gt=0.0)

    @model_validator(mode="after")
    def _nmax(self):
        if self.mode == "truncated" and self.n_max is None:
            raise ValueError("truncated basis needs n_max")
        return self


class TimeBlock(_Block):
    """Either an absolute t_max (units hbar/E_c) or t_max_alpha, meaning t_max = t_max_alpha / alpha."""

    t_max: float | None = None
    t_max_alpha: float | None = 40.0
    grid: Literal["loglinear", "linear"] = "loglinear"
    n_log: int = Field(40, ge=0)
    n_lin: int = Field(160, ge=2)

    @model_validator(mode="after")
    def _one(self):
        if self.t_max is None and self.t_max_alpha is None:
            raise ValueError("set t_max or t_max_alpha")
        return self


class SimulateConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    model: ModelBlock = ModelBlock()
    physical: PhysicalBlock | None = None
    ensemble: EnsembleBlock = EnsembleBlock()
    basis: BasisBlock = BasisBlock()
    time: TimeBlock = TimeBlock()
    tol: float = Field(1e-6, gt=0.0, le=1e-3)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _alpha_source(self):
        if (self.model.alpha is None) == (self.physical is None):
            raise ValueError("give exactly one of model.alpha or a physical block")
        return self


class AlphaGrid(_Block):
    min: float = Field(gt=0.0)
    max: float = Field(gt=0.0)
    count: int = Field(ge=1)


class ReferenceBlock(_Block):
    """Physical anchor for the sweep routes: the drive route runs at this density."""

    density: str = "3.2e19 m^-3"
    c6: str = "1.7e19 au"


class SweepBlock(_Block):
    alphas: list[float] | AlphaGrid
    routes: list[Literal["drive", "density"]] = ["drive", "density"]
    reference: ReferenceBlock = ReferenceBlock()

    @field_validator("alphas")
    @classmethod
    def _nonempty(cls, v):
        if isinstance(v, list):
            if not v:
                raise ValueError("sweep needs at least one alpha")
            if any(a <= 0 for a in v):
                raise ValueError("alphas must be positive")
        elif v.max < v.min:
            raise ValueError("alpha grid max < min")
        return v


class SweepConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    model: ModelBlock = ModelBlock()
    ensemble: EnsembleBlock = EnsembleBlock()
    basis: BasisBlock = BasisBlock()
    time: TimeBlock = TimeBlock()
    tol: float = Field(1e-6, gt=0.0, le=1e-3)
    seed: int = Field(0, ge=0, lt=2**64)
    sweep: SweepBlock


class EosConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    d: int = 3
    p: int = 6
    alphas: list[float] | AlphaGrid = AlphaGrid(min=1e-6, max=1e-2, count=9)
    deltas: list[float] = [0.0]


class LdaConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    d: int = 3
    p: int = 6
    sigmas: list[str]
    atom_number: float = Field(gt=0.0)
    omegas: list[str] = ["154 kHz"]
    c6: str = "1.7e19 au"


SCHEMAS = {"simulate": SimulateConfig, "sweep": SweepConfig, "eos": EosConfig, "lda": LdaConfig}


def load_config(path: str | Path, command: str, overrides: dict | None = None):
    """Read and validate a config; a run manifest is accepted as well."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return validate_config(raw or {}, command, overrides)


def validate_config(raw: dict, command: str, overrides: dict | None = None):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if "config" in raw and "command" in raw:  # a manifest from a previous run
        if raw["command"] != command:
            raise ConfigError(f"manifest is for {raw['command']!r}, not {command!r}")
        raw = raw["config"]
    raw = dict(raw)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    try:
        return SCHEMAS[command].model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
