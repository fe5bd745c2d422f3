"""Experiment configuration: one JSON file per run, validated before any computation."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .expr import Expression
from .grid import Disk, Polygon, Rectangle
from .lie_algebra import GroupMatrix, normalize_trace, rotate_congruence
from .pde_solver import DEFAULT_MAX_ITER, DEFAULT_TOL


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _expression(v: str) -> str:
    Expression(v)
    return v


# --- domains -----------------------------------------------------------------

class DiskConfig(Strict):
    kind: Literal["disk"]
    radius: float = Field(gt=0)
    center: tuple[float, float] = (0.0, 0.0)

    def build(self):
        return Disk(self.radius, *self.center)


class RectangleConfig(Strict):
    kind: Literal["rectangle"]
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def build(self):
        return Rectangle(self.xmin, self.xmax, self.ymin, self.ymax)


class PolygonConfig(Strict):
    kind: Literal["polygon"]
    vertices: list[tuple[float, float]] = Field(min_length=3)

    def build(self):
        return Polygon(self.vertices)


DomainConfig = Annotated[Union[DiskConfig, RectangleConfig, PolygonConfig], Field(discriminator="kind")]


# --- command blocks ----------------------------------------------------------

class ZRange(Strict):
    z_min: float = -1.0
    z_max: float = 1.0
    n: int = Field(11, ge=1)

    @model_validator(mode="after")
    def _order(self):
        if self.z_max < self.z_min:
            raise ValueError("z_max must not be below z_min")
        return self


class CertifyConfig(Strict):
    M: float | None = Field(None, gt=1)
    domain: DomainConfig | None = None
    h: float = Field(1 / 16, gt=0)
    alpha: list[float] = [0.0]
    k_list: list[float] = []
    eps: float = Field(1e-6, gt=0)
    k_scan_max: float = 200.0

    @model_validator(mode="after")
    def _strip(self):
        if (self.M is None) == (self.domain is None):
            raise ValueError("give exactly one of M and domain")
        return self


class SolveConfig(Strict):
    domain: DomainConfig
    h_list: list[float] = Field(min_length=1)
    boundary: str
    target_H: float | None = None
    exact: str | None = None
    project_boundary: bool = True
    assert_order: float | None = None
    assert_max_error: float | None = None

    _check_boundary = field_validator("boundary")(_expression)

    @field_validator("exact")
    @classmethod
    def _check_exact(cls, v):
        return None if v is None else _expression(v)

    @field_validator("h_list")
    @classmethod
    def _positive(cls, v):
        if any(not h > 0 for h in v):
            raise ValueError("grid steps must be positive")
        return v

    @model_validator(mode="after")
    def _needs_exact(self):
        if (self.assert_order is not None or self.assert_max_error is not None) and self.exact is None:
            raise ValueError("error assertions need an exact solution")
        if self.assert_order is not None and len(self.h_list) < 2:
            raise ValueError("an order assertion needs at least two grid steps")
        return self


class OscillationConfig(Strict):
    domain: DomainConfig
    h: float = Field(gt=0)
    k_list: list[float] = Field(min_length=1)
    assert_trends: bool = True


class GammaConfig(Strict):
    kind: Literal["smoothed_tent", "expression"] = "smoothed_tent"
    height: float = Field(0.4, gt=0)
    smoothing: float = Field(0.05, gt=0)
    expr: str | None = None

    @model_validator(mode="after")
    def _expr(self):
        if self.kind == "expression":
            if self.expr is None:
                raise ValueError("an expression arc needs 'expr' (a function of x)")
            _expression(self.expr)
        return self


SCHERK_ASSERTIONS = ("converged", "single_crossing", "sandwich", "monotone_in_c", "cauchy_decay")


class ScherkConfig(Strict):
    p1: tuple[float, float] = (0.0, 0.0)
    p2: tuple[float, float]
    gamma: GammaConfig = GammaConfig()
    c_schedule: list[float] = Field(min_length=1)
    h: float = Field(gt=0)
    hz: float | None = Field(None, gt=0)
    K: tuple[float, float, float, float] = (0.1, 0.9, 0.0, 2.0)
    assertions: list[Literal[SCHERK_ASSERTIONS]] = list(SCHERK_ASSERTIONS)
    export: Literal["last", "all", "none"] = "last"


class Claim2Config(Strict):
    n_list: list[int] = Field(min_length=1)
    samples: int = Field(2001, ge=3)
    assert_curvature_below: float | None = None
    assert_monotone: bool = True


class ExperimentConfig(Strict):
    description: str = ""
    A: list[list[float]]
    rotate: float = 0.0
    normalize_trace: bool = False
    tol: float = Field(DEFAULT_TOL, gt=0)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    threads: int = Field(1, ge=1)
    exp: ZRange | None = None
    metric: ZRange | None = None
    certify: CertifyConfig | None = None
    solve: SolveConfig | None = None
    oscillation: OscillationConfig | None = None
    scherk: ScherkConfig | None = None
    claim2: Claim2Config | None = None

    @field_validator("A")
    @classmethod
    def _two_by_two(cls, v):
        if len(v) != 2 or any(len(r) != 2 for r in v):
            raise ValueError("A must be a 2x2 list of rows")
        if not all(math.isfinite(x) for r in v for x in r):
            raise ValueError("A must have finite entries")
        return v

    def matrix(self) -> GroupMatrix:
        """A after the optional rotation and trace normalization."""
        A = GroupMatrix.from_array(self.A)
        if self.rotate:
            A = rotate_congruence(A, self.rotate)
        if self.normalize_trace:
            A = normalize_trace(A).matrix
        return A

    def block(self, name: str):
        b = getattr(self, name)
        if b is None:
            raise ConfigError(f"config has no '{name}' block")
        return b


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        lines = [f"{'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines)) from None


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(data)
