"""Pydantic run-configuration models and their YAML loader."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import config
from .errors import ConfigError
from .output import extract_echo
from .physics.basis import TrapSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrapSection(_Section):
    omega: float = Field(1.0, gt=0)
    omega_e: Optional[float] = None
    shells_g: int = Field(6, ge=1)
    shells_e: int = Field(2, ge=1)
    eta_sq: float = Field(2.0, ge=0)
    gamma: float = Field(1.0, ge=0)
    transition_frequency: float = 0.0
    n_atoms: int = Field(10000, ge=1)
    n_condensed: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _shared_frequency(self) -> "TrapSection":
        if self.omega_e is not None and self.omega_e != self.omega:
            raise ValueError("omega_e must equal omega (both traps share one frequency)")
        if self.n_condensed is not None and self.n_condensed > self.n_atoms:
            raise ValueError("n_condensed cannot exceed n_atoms")
        return self

    def to_spec(self, n_condensed: Optional[int] = None) -> TrapSpec:
        n0 = n_condensed if n_condensed is not None else self.n_condensed
        return TrapSpec(
            omega=self.omega,
            shells_g=self.shells_g,
            shells_e=self.shells_e,
            eta_sq=self.eta_sq,
            gamma=self.gamma,
            transition_frequency=self.transition_frequency,
            n_atoms=self.n_atoms,
            n_condensed=self.n_atoms if n0 is None else n0,
        )


class NumericsSection(_Section):
    quadrature_order: int = Field(config.QUADRATURE_ORDER, ge=2)
    pattern: str = "isotropic"
    pv_grid: int = Field(config.PV_GRID, ge=4)
    kappa_max: float = Field(config.PV_KAPPA_MAX, gt=1.0)
    include_imaginary: bool = True
    include_excited_energies: bool = False
    first_order: bool = True
    cache: Optional[str] = None

    @model_validator(mode="after")
    def _known_pattern(self) -> "NumericsSection":
        if self.pattern not in ("isotropic", "dipole"):
            raise ValueError(f"unknown emission pattern {self.pattern!r}")
        return self


class ScanSection(_Section):
    t_e: list[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0, 2.0])
    t_g_min: float = Field(0.5, ge=0)
    t_g_max: float = Field(50.0, ge=0)
    t_g_points: int = Field(8, ge=1)
    samples: int = Field(config.SAMPLES_PER_STEP, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "ScanSection":
        if any(t < 0 for t in self.t_e):
            raise ValueError("t_e values must be >= 0")
        if self.t_g_max < self.t_g_min:
            raise ValueError("t_g_max must be >= t_g_min")
        if self.t_g_points > 1 and self.t_g_min <= 0:
            raise ValueError("a logarithmic t_g grid needs t_g_min > 0")
        return self

    def t_g_grid(self) -> list[float]:
        if self.t_g_points == 1:
            return [float(self.t_g_min)]
        return [float(t) for t in np.geomspace(self.t_g_min, self.t_g_max, self.t_g_points)]


class LoadingSection(_Section):
    initial_fraction: float = Field(0.99, gt=0, le=1)
    steps: int = Field(20, ge=0)
    samples_per_step: int = Field(config.SAMPLES_PER_STEP, ge=1)
    t_e: float = Field(1.0, ge=0)
    t_e_schedule: Optional[list[float]] = None
    zero_probabilities: bool = False


class ValiditySection(_Section):
    threshold: float = Field(config.VALIDITY_THRESHOLD, ge=0)
    margin: float = Field(config.BAR_MARGIN, ge=0)


class RunSection(_Section):
    seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1)
    budget_gib: float = Field(config.TENSOR_BUDGET_GIB, gt=0)
    out: Optional[str] = None


class RunConfig(_Section):
    trap: TrapSection = Field(default_factory=TrapSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    scan: ScanSection = Field(default_factory=ScanSection)
    loading: LoadingSection = Field(default_factory=LoadingSection)
    validity: ValiditySection = Field(default_factory=ValiditySection)
    run: RunSection = Field(default_factory=RunSection)

    def to_yaml(self) -> str:
        """Config echo; the output path is left out so a rerun may write elsewhere."""
        data = self.model_dump(mode="json", exclude={"run": {"out"}})
        return yaml.dump(data, sort_keys=False, default_flow_style=False)

    def with_overrides(self, **run_fields: Any) -> "RunConfig":
        """Copy with CLI overrides applied to the run section (None means unset)."""
        updates = {k: v for k, v in run_fields.items() if v is not None}
        if not updates:
            return self
        try:
            run = RunSection(**(self.run.model_dump() | updates))
        except ValidationError as exc:
            err = exc.errors()[0]
            raise ConfigError(f"run.{err['loc'][0]}: {err['msg']}") from exc
        return self.model_copy(update={"run": run})


def _key_lines(node: yaml.Node, path: tuple = ()) -> dict[tuple, int]:
    """Map every key path in a composed YAML document to its 1-based line."""
    lines: dict[tuple, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key_path = path + (key_node.value,)
            lines[key_path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, key_path))
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            lines[path + (i,)] = item.start_mark.line + 1
            lines.update(_key_lines(item, path + (i,)))
    return lines


def _line_for(loc: tuple, lines: dict[tuple, int]) -> Optional[int]:
    loc = tuple(loc)
    while loc:
        if loc in lines:
            return lines[loc]
        loc = loc[:-1]
    return None


def parse_config(text: str) -> RunConfig:
    """Parse YAML config text; errors carry the line of the offending key."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed config: {exc}", line=mark.line + 1 if mark else None) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections", line=1)
    lines = _key_lines(node) if node is not None else {}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"{loc}: {err['msg']}", line=_line_for(err["loc"], lines)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    """Load a YAML config file, or the config echo embedded in a CSV output."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        text = extract_echo(text)
    return parse_config(text)
