"""Pydantic request/response models: scenario files and operation outcomes.

A scenario bundles a model definition with one configuration section per
operation; the same models validate scenario files on the CLI side and
request bodies on the service side.  Box bounds use ``null`` for an
unbounded side (JSON has no infinity literal).
"""
from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1

OpName = Literal[
    "simulate", "check-invariance", "check-viability", "value", "solve-hjb", "reach", "plot"
]


class SpeciesModel(BaseModel):
    name: str
    kind: Literal["continuous", "discrete"] = "continuous"


class ReactionModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    alpha: list[int]
    beta: list[int]
    rate: float = Field(gt=0)
    klass: Literal["flow", "jump"] = Field(alias="class")


class SmoothingModel(BaseModel):
    err: float = Field(default=0.1, gt=0)
    cap: float = Field(default=1e6, gt=0)


class NetworkDocument(BaseModel):
    """Network definition file: species, reactions, smoothing."""

    species: list[SpeciesModel]
    reactions: list[ReactionModel]
    smoothing: SmoothingModel = SmoothingModel()


class NetworkSpec(NetworkDocument):
    type: Literal["network"] = "network"
    modes: Optional[list[list[int]]] = None


class CookSpec(BaseModel):
    type: Literal["cook"] = "cook"
    ka: float = Field(gt=0)
    kd: float = Field(gt=0)
    jp: float = Field(gt=0)
    kp: float = Field(gt=0)


class BreakpointCurve(BaseModel):
    x: list[float]
    y: list[float]

    @model_validator(mode="after")
    def _check(self):
        if len(self.x) != len(self.y) or len(self.x) < 2:
            raise ValueError("need matching breakpoint vectors of length >= 2")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("breakpoints must increase strictly")
        if any(v < 0 for v in self.y):
            raise ValueError("rate curves must be nonnegative")
        return self


class OnOffSpec(BaseModel):
    type: Literal["onoff"] = "onoff"
    r0: BreakpointCurve
    r1: BreakpointCurve
    lambda0: float = Field(ge=0)
    lambda1: float = Field(ge=0)
    alpha_max: float = Field(gt=0)


class PhageSpec(BaseModel):
    type: Literal["phage"] = "phage"
    k1: float = Field(gt=0)
    km1: float = Field(gt=0)
    k2: float = Field(gt=0)
    km2: float = Field(gt=0)
    k3: float = Field(gt=0)
    km3: float = Field(gt=0)
    k4: float = Field(gt=0)
    km4: float = Field(gt=0)
    kt: float = Field(gt=0)
    kd: float = Field(gt=0)
    n: int = Field(default=5, ge=1)
    err: float = Field(default=0.1, gt=0)
    cap: float = Field(default=1e6, gt=0)


ModelSpec = Annotated[
    Union[CookSpec, OnOffSpec, PhageSpec, NetworkSpec], Field(discriminator="type")
]


class ModeBoxModel(BaseModel):
    """Mode subset times a box; ``null`` bounds mean unbounded."""

    modes: list[int]
    lo: list[Optional[float]]
    hi: list[Optional[float]]

    @model_validator(mode="after")
    def _check(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")
        if not self.modes:
            raise ValueError("mode set must be nonempty")
        return self


class StateModel(BaseModel):
    mode: int = Field(ge=0)
    x: list[float]


class PlotStyleModel(BaseModel):
    kind: Literal["series", "phase"] = "series"
    component: int = 0
    invariant_bounds: Optional[tuple[float, float]] = None
    target_bounds: Optional[tuple[float, float]] = None
    box: Optional[tuple[tuple[float, float], tuple[float, float]]] = None
    title: str = ""


class SimulateConfig(BaseModel):
    start: StateModel
    horizon: float = Field(gt=0)
    step: float = Field(default=1e-3, gt=0)
    record_stride: int = Field(default=1, ge=1)
    plot: Optional[PlotStyleModel] = None


class CheckConfig(BaseModel):
    set: ModeBoxModel
    resolution: int = Field(default=33, ge=2)
    tolerance: float = Field(default=1e-9, gt=0)
    controls: list[float] = [0.0]
    cone_samples: int = Field(default=9, ge=1)


class PerturbationModel(BaseModel):
    kind: Literal["constant"] = "constant"
    vector: list[float]


class ValueConfig(BaseModel):
    kind: Literal["viability", "invariance", "reach", "hitting"]
    set: ModeBoxModel
    start: StateModel
    paths: int = Field(default=10_000, ge=1)
    horizon: float = Field(default=30.0, gt=0)
    step: float = Field(default=0.01, gt=0)
    radii: Optional[list[float]] = None
    perturbation: Optional[PerturbationModel] = None


class HjbConfig(BaseModel):
    cost: Literal["viability", "invariance", "reach"]
    set: ModeBoxModel
    domain: ModeBoxModel
    shape: list[int]
    step: float = Field(default=0.01, gt=0)
    tol: float = Field(default=1e-8, gt=0)
    controls: list[float] = [0.0]
    objective: Optional[Literal["min", "max"]] = None
    probes: list[StateModel] = []


class ReachConfig(BaseModel):
    target: ModeBoxModel
    start: StateModel
    domain: ModeBoxModel
    shape: list[int]
    step: float = Field(default=0.01, gt=0)
    tol: float = Field(default=1e-8, gt=0)
    margin: float = Field(default=1e-3, gt=0)
    controls: list[float] = [0.0]
    audit_functions: int = Field(default=20, ge=0)
    audit_slack: float = Field(default=0.02, gt=0)
    corroborate: bool = False
    paths: int = Field(default=10_000, ge=1)
    horizon: float = Field(default=100.0, gt=0)


class PlotConfig(BaseModel):
    source_csv: str
    style: PlotStyleModel = PlotStyleModel()


class Scenario(BaseModel):
    """One verification job: a model plus per-operation configuration."""

    model_config = ConfigDict(protected_namespaces=())

    schema_version: int = SCHEMA_VERSION
    op: Optional[OpName] = None
    model: ModelSpec
    seed: int = 0
    threads: Optional[int] = None
    simulate: Optional[SimulateConfig] = None
    check: Optional[CheckConfig] = None
    value: Optional[ValueConfig] = None
    hjb: Optional[HjbConfig] = None
    reach: Optional[ReachConfig] = None
    plot: Optional[PlotConfig] = None


class Outcome(BaseModel):
    """Operation result: status, machine-readable summary, artifact contents."""

    schema_version: int = SCHEMA_VERSION
    op: str
    status: Literal["ok", "fail"]
    exit_code: int
    summary: dict
    artifacts: dict[str, str] = {}


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str = "0.1.0"
