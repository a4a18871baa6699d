# models/schemas.py
"""
Solver, generator and harness schemas.

Purpose:
- SearchConfig: ablation switches and budgets of one solve call
- SolveResult / ProgressEvent: what the search reports
- GenSpec with its cost sources: how benchmark instances are generated
- BenchRecord / SweepPoint: one CSV row of the bench and sweep drivers
- Request bodies of the HTTP API
"""
from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config.settings import settings
from models.instance import (
    Instance,
    OptionalRational,
    Rational,
    Schedule,
    TransitionDiagram,
    format_rational,
)


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    TIMED_OUT = "TimedOut"


class SearchConfig(BaseModel):
    """Ablation switches and budgets. Durations are in seconds."""

    model_config = ConfigDict(frozen=True)

    use_gcd: bool = True
    use_primal_packing: bool = True
    use_initial_heuristic: bool = True
    pack_budget: float = Field(0.05, ge=0)
    bin_find_budget: float = Field(1.0, ge=0)
    time_limit: float = Field(60.0, ge=0)
    node_limit: Optional[int] = Field(None, ge=1)
    pack_every_depth: int = Field(1, ge=1)
    progress_every: int = Field(1000, ge=1)

    @classmethod
    def from_settings(cls, **overrides: Any) -> "SearchConfig":
        values: Dict[str, Any] = {
            "use_gcd": settings.USE_GCD,
            "use_primal_packing": settings.USE_PRIMAL_PACKING,
            "use_initial_heuristic": settings.USE_INITIAL_HEURISTIC,
            "pack_budget": settings.PACK_BUDGET_MS / 1000.0,
            "bin_find_budget": settings.BIN_FIND_BUDGET_MS / 1000.0,
            "time_limit": settings.SOLVER_TIME_LIMIT,
            "node_limit": settings.SOLVER_NODE_LIMIT,
            "pack_every_depth": settings.PACK_EVERY_DEPTH,
            "progress_every": settings.PROGRESS_EVERY,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class SolveResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: SolveStatus
    ub: OptionalRational = None
    lb: OptionalRational = None
    tec: OptionalRational = None
    schedule: Optional[Schedule] = None
    nodes: int = 0
    wall_time: float = 0.0
    preprocess_time: float = 0.0
    pack_calls: int = 0
    pack_hits: int = 0

    @property
    def gap_percent(self) -> Optional[float]:
        return gap_percent(self.ub, self.lb)

    def to_payload(self, instance: Instance) -> Dict[str, Any]:
        fmt = lambda v: None if v is None else format_rational(v)  # noqa: E731
        return {
            "status": self.status.value,
            "ub": fmt(self.ub),
            "lb": fmt(self.lb),
            "tec": fmt(self.tec),
            "nodes": self.nodes,
            "wall_time": round(self.wall_time, 6),
            "preprocess_time": round(self.preprocess_time, 6),
            "pack_calls": self.pack_calls,
            "pack_hits": self.pack_hits,
            "schedule": None if self.schedule is None else self.schedule.to_payload(instance.diagram),
        }


def gap_percent(ub: Optional[Fraction], lb: Optional[Fraction]) -> Optional[float]:
    if ub is None or lb is None or ub <= 0:
        return None
    return float(100 * (ub - lb) / ub)


class ProgressEvent(BaseModel):
    """Emitted every `progress_every` nodes ("progress") and on each new incumbent ("incumbent")."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["progress", "incumbent"]
    nodes: int
    depth: int
    lb: OptionalRational = None
    ub: OptionalRational = None
    elapsed: float = 0.0


# Cost sources of the generator

# generator protocol: p ~ U{1..5}, c ~ U{1..10}
DEFAULT_PROC_TIMES: Tuple[int, ...] = (1, 2, 3, 4, 5)
DEFAULT_COST_RANGE: Tuple[int, int] = (1, 10)


class UniformCosts(BaseModel):
    kind: Literal["uniform"] = "uniform"
    lo: int = DEFAULT_COST_RANGE[0]
    hi: int = DEFAULT_COST_RANGE[1]

    @field_validator("hi")
    @classmethod
    def _ordered(cls, hi: int, info) -> int:
        lo = info.data.get("lo", DEFAULT_COST_RANGE[0])
        if hi < lo:
            raise ValueError(f"hi ({hi}) must be >= lo ({lo})")
        return hi


class ProfileCosts(BaseModel):
    kind: Literal["profile"] = "profile"
    path: str
    offset: int = Field(0, ge=0)
    wrap: bool = False
    index_column: str = "idx"
    cost_column: str = "cost"


class InjectedCosts(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["injected"] = "injected"
    costs: Tuple[Rational, ...] = Field(..., min_length=1)


CostSource = Annotated[Union[UniformCosts, ProfileCosts, InjectedCosts], Field(discriminator="kind")]


class GenSpec(BaseModel):
    """One generated instance: n jobs drawn from proc_time_set, horizon inflated by lam."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    n: int = Field(..., ge=1)
    proc_time_set: Tuple[int, ...] = DEFAULT_PROC_TIMES
    cost_source: CostSource = Field(default_factory=UniformCosts)
    lam: Rational = Field(Fraction(13, 10), alias="lambda")
    seed: int = Field(0, ge=0, lt=2**64)
    diagram: TransitionDiagram = Field(default_factory=TransitionDiagram.nosby)
    forced_jobs: Optional[Tuple[int, ...]] = None
    instance_id: Optional[str] = None

    @field_validator("proc_time_set")
    @classmethod
    def _valid_set(cls, values: Tuple[int, ...]) -> Tuple[int, ...]:
        if not values:
            raise ValueError("proc_time_set must not be empty")
        if any(p < 1 for p in values):
            raise ValueError("processing times must be >= 1")
        return tuple(sorted(set(values)))

    @field_validator("lam")
    @classmethod
    def _lambda_at_least_one(cls, lam: Fraction) -> Fraction:
        if lam < 1:
            raise ValueError("lambda must be >= 1")
        return lam

    @field_validator("forced_jobs")
    @classmethod
    def _positive_forced(cls, jobs: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
        if jobs is not None and any(p < 1 for p in jobs):
            raise ValueError("forced processing times must be >= 1")
        return jobs

    @property
    def label(self) -> str:
        return self.instance_id or f"n{self.n}-s{self.seed}"

    def group_key(self) -> str:
        return "{" + ",".join(str(p) for p in self.proc_time_set) + "}"


class BenchRecord(BaseModel):
    """One solved instance of a benchmark run."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    instance_id: str
    n: int
    h: int
    proc_time_set: str
    status: str
    ub: OptionalRational = None
    lb: OptionalRational = None
    gap_percent: Optional[float] = None
    nodes: int = 0
    time_ms: float = 0.0
    preprocess_ms: float = 0.0
    error: Optional[str] = None

    def to_row(self) -> Dict[str, Any]:
        row = self.model_dump(mode="json")
        if row["gap_percent"] is not None:
            row["gap_percent"] = round(row["gap_percent"], 4)
        row["time_ms"] = round(self.time_ms, 3)
        row["preprocess_ms"] = round(self.preprocess_ms, 3)
        return row


BENCH_COLUMNS = tuple(BenchRecord.model_fields.keys())


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p_on: Rational
    p_off: Rational
    status: str
    tec: OptionalRational = None

    def to_row(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


SWEEP_COLUMNS = ("p_on", "p_off", "status", "tec")


# API request bodies. Instance and schedule stay plain JSON objects here and are
# parsed by the route, which needs the diagram to resolve state names.

class SolveRequest(BaseModel):
    instance: Dict[str, Any]
    config: Dict[str, Any] = Field(default_factory=dict)


class ValidateRequest(BaseModel):
    instance: Dict[str, Any]
    schedule: Dict[str, Any]
