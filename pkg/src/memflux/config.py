"""JSON run configuration and its translation into solver inputs."""
from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .core import InitialData, Parameters, validate_parameters
from .expr import parse_expression
from .geometry import Domain, build_domain
from .kernel import KernelSpec
from .solver import Problem, SolverOptions


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DomainConfig(_Model):
    kind: Literal["interval", "disk"] = "interval"
    length: Optional[float] = None
    radius: Optional[float] = None
    dimension: Optional[int] = None
    points: int = 201

    @model_validator(mode="after")
    def _fill(self):
        if self.kind == "interval" and (self.radius is not None or self.dimension not in (None, 1)):
            raise ValueError("interval domains take 'length', not 'radius'/'dimension'")
        if self.kind == "disk" and self.length is not None:
            raise ValueError("disk domains take 'radius' and 'dimension', not 'length'")
        return self


class ParamsConfig(_Model):
    a: float
    b: float
    q: float
    m: float
    l: float


class KernelConfig(_Model):
    kind: Literal["constant", "expr"] = "constant"
    value: Optional[float] = None
    text: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "constant" and (self.value is None or self.value < 0):
            raise ValueError("constant kernel needs a nonnegative 'value'")
        if self.kind == "expr":
            if not self.text:
                raise ValueError("expression kernel needs 'text'")
            parse_expression(self.text)
        return self


class InitialConfig(_Model):
    kind: Literal["constant", "expr", "table"] = "constant"
    value: Optional[float] = None
    text: Optional[str] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check(self):
        need = {"constant": self.value, "expr": self.text, "table": self.values}[self.kind]
        if need is None:
            raise ValueError(f"initial data of kind {self.kind!r} is missing its payload")
        if self.kind == "expr":
            parse_expression(self.text)
        return self


class TimeConfig(_Model):
    horizon: float = Field(gt=0)
    snapshot_stride: int = Field(default=1, ge=1)
    dt_max: Optional[float] = None
    dt0: Optional[float] = None
    dt_fixed: Optional[float] = None


class TolerancesConfig(_Model):
    blowup_threshold: float = 1e8
    residual_tol: float = 1e-8
    compatibility_tol: float = 1e-6
    ordering_tol: float = 1e-6


class KernelChecksConfig(_Model):
    t1: float = 0.0
    samples: int = 101


class SweepConfig(_Model):
    q: List[float] = []
    m: Optional[List[float]] = None  # defaults to params.m
    l: List[float] = []
    simulate: bool = True
    workers: int = 1


class OutputConfig(_Model):
    dir: str = "."
    series: str = "series.csv"
    summary: str = "summary.json"
    report: str = "residual_report.json"
    sweep: str = "sweep.csv"


class Config(_Model):
    domain: DomainConfig = DomainConfig()
    params: ParamsConfig
    kernel: KernelConfig = KernelConfig(kind="constant", value=0.0)
    initial: InitialConfig = InitialConfig(kind="constant", value=1.0)
    time: TimeConfig
    tolerances: TolerancesConfig = TolerancesConfig()
    kernel_checks: KernelChecksConfig = KernelChecksConfig()
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = OutputConfig()


def load_config(path) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def parse_config(text: str) -> Config:
    return Config.model_validate_json(text)


def dump_config(cfg: Config) -> str:
    """Canonical serialisation: declaration field order, repr floats, None fields dropped."""
    return cfg.model_dump_json(indent=2, exclude_none=True) + "\n"


def make_domain(cfg: Config) -> Domain:
    dc = cfg.domain
    if dc.kind == "interval":
        return build_domain("interval", dc.points, length=dc.length if dc.length is not None else 1.0)
    return build_domain("disk", dc.points, radius=dc.radius if dc.radius is not None else 1.0,
                        dimension=dc.dimension if dc.dimension is not None else 2)


def make_params(cfg: Config) -> Parameters:
    return validate_parameters(cfg.params.model_dump())


def make_kernel(cfg: Config) -> KernelSpec:
    if cfg.kernel.kind == "constant":
        return KernelSpec.constant(cfg.kernel.value)
    return KernelSpec.expression(cfg.kernel.text)


def make_initial(cfg: Config, d: Domain) -> InitialData:
    ic = cfg.initial
    if ic.kind == "constant":
        return InitialData.constant(ic.value, d)
    if ic.kind == "table":
        return InitialData.from_values(ic.values, d, "table")
    ex = parse_expression(ic.text)
    vals = np.broadcast_to(ex(x=d.nodes, s=d.distance, t=0.0), d.nodes.shape)
    return InitialData.from_values(vals, d, ic.text)


def make_problem(cfg: Config) -> Problem:
    d = make_domain(cfg)
    return Problem(make_params(cfg), d, make_kernel(cfg), make_initial(cfg, d))


def make_options(cfg: Config) -> SolverOptions:
    t = cfg.time
    return SolverOptions(blowup_threshold=cfg.tolerances.blowup_threshold, dt_max=t.dt_max, dt0=t.dt0,
                         dt_fixed=t.dt_fixed)
