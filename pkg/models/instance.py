# models/instance.py
"""
Instance, diagram and schedule models.

Interval indices are 1-based everywhere (interval 1 .. horizon). Costs and
powers are exact rationals (fractions.Fraction); in JSON they are written as
integers when integral and as "num/den" strings otherwise. `null` in a
transition matrix means the transition does not exist.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.functional_serializers import PlainSerializer
from pydantic.functional_validators import BeforeValidator

from core.errors import MalformedDiagram


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # go through repr so 0.1 becomes 1/10, not the binary expansion
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    raise ValueError(f"not a rational number: {value!r}")


def format_rational(value: Fraction) -> Union[int, str]:
    if value.denominator == 1:
        return int(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _parse_optional_rational(value: Any) -> Optional[Fraction]:
    return None if value is None else parse_rational(value)


def _format_optional_rational(value: Optional[Fraction]) -> Union[int, str, None]:
    return None if value is None else format_rational(value)


Rational = Annotated[Fraction, BeforeValidator(parse_rational), PlainSerializer(format_rational)]
OptionalRational = Annotated[
    Optional[Fraction], BeforeValidator(_parse_optional_rational), PlainSerializer(_format_optional_rational)
]

Label = Tuple[int, int]


class TransitionDiagram(BaseModel):
    """Machine states with transition time (intervals) and power matrices."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    states: Tuple[str, ...]
    off: str
    proc: str
    transition_time: Tuple[Tuple[Optional[int], ...], ...]
    transition_power: Tuple[Tuple[OptionalRational, ...], ...]
    name: Optional[str] = None
    note: Optional[str] = None

    @model_validator(mode="after")
    def _check_matrices(self) -> "TransitionDiagram":
        k = len(self.states)
        if k < 2:
            raise MalformedDiagram("a diagram needs at least two states")
        if len(set(self.states)) != k:
            raise MalformedDiagram("state names must be unique")
        if self.off not in self.states or self.proc not in self.states:
            raise MalformedDiagram("off and proc must name states of the diagram")
        if self.off == self.proc:
            raise MalformedDiagram("off and proc must be distinct states")
        for label, matrix in (("transition_time", self.transition_time), ("transition_power", self.transition_power)):
            if len(matrix) != k or any(len(row) != k for row in matrix):
                raise MalformedDiagram(f"{label} must be a {k}x{k} matrix")
        for s in range(k):
            for t in range(k):
                duration = self.transition_time[s][t]
                power = self.transition_power[s][t]
                if (duration is None) != (power is None):
                    raise MalformedDiagram(
                        f"transition {self.states[s]}->{self.states[t]} must have both time and power or neither"
                    )
                if duration is not None and duration < 0:
                    raise MalformedDiagram(f"negative duration for {self.states[s]}->{self.states[t]}")
                if power is not None and power < 0:
                    raise MalformedDiagram(f"negative power for {self.states[s]}->{self.states[t]}")
            if self.transition_time[s][s] != 1:
                raise MalformedDiagram(f"self-loop of {self.states[s]} must last exactly one interval")
        off, proc = self.off_index, self.proc_index
        if self.transition_time[off][proc] == 0 or self.transition_time[proc][off] == 0:
            raise MalformedDiagram("switching directly between off and proc cannot take zero intervals")
        return self

    @property
    def off_index(self) -> int:
        return self.states.index(self.off)

    @property
    def proc_index(self) -> int:
        return self.states.index(self.proc)

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise KeyError(f"unknown state {state!r}") from None

    def time(self, s: int, t: int) -> Optional[int]:
        return self.transition_time[s][t]

    def power(self, s: int, t: int) -> Optional[Fraction]:
        return self.transition_power[s][t]

    def exists(self, s: int, t: int) -> bool:
        return self.transition_time[s][t] is not None

    def zero_closure(self) -> Tuple[frozenset, ...]:
        """States reachable from each state through zero-duration transitions (itself included)."""
        closure = []
        for s in range(self.size):
            seen = {s}
            stack = [s]
            while stack:
                u = stack.pop()
                for v in range(self.size):
                    if v not in seen and self.transition_time[u][v] == 0:
                        seen.add(v)
                        stack.append(v)
            closure.append(frozenset(seen))
        return tuple(closure)

    def with_power(self, s: int, t: int, power: Fraction) -> "TransitionDiagram":
        """Copy with one transition power replaced (used by parameter sweeps)."""
        if not self.exists(s, t):
            raise MalformedDiagram(f"transition {self.states[s]}->{self.states[t]} does not exist")
        power = parse_rational(power)
        if power < 0:
            raise MalformedDiagram(f"negative power for {self.states[s]}->{self.states[t]}")
        rows = [list(row) for row in self.transition_power]
        rows[s][t] = power
        return self.model_copy(update={"transition_power": tuple(tuple(r) for r in rows)})

    def to_payload(self) -> Dict[str, Any]:
        payload = self.model_dump(mode="json")
        for key in ("name", "note"):
            if payload.get(key) is None:
                payload.pop(key, None)
        return payload

    @classmethod
    def nosby(cls) -> "TransitionDiagram":
        """Three-state diagram without standby: off, proc and idle (idle reachable from proc in zero time)."""
        return cls(
            states=("off", "proc", "idle"),
            off="off",
            proc="proc",
            transition_time=((1, 2, None), (1, 1, 0), (None, 0, 1)),
            transition_power=((0, 5, None), (1, 4, 0), (None, 0, 2)),
            name="NOSBY",
        )


class Instance(BaseModel):
    """Horizon costs, job processing times and the machine diagram.

    The JSON form is flat (diagram keys next to horizon/costs/jobs); the model
    keeps the diagram as a nested TransitionDiagram.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    horizon: int = Field(..., ge=2)
    costs: Tuple[Rational, ...]
    jobs: Tuple[int, ...] = Field(..., min_length=1)
    diagram: TransitionDiagram

    @model_validator(mode="before")
    @classmethod
    def _nest_diagram(cls, data: Any) -> Any:
        if isinstance(data, dict) and "diagram" not in data:
            keys = ("states", "off", "proc", "transition_time", "transition_power", "name", "note")
            data = dict(data)
            data["diagram"] = {k: data.pop(k) for k in keys if k in data}
        return data

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, jobs: Tuple[int, ...]) -> Tuple[int, ...]:
        for j, p in enumerate(jobs):
            if p < 1:
                raise ValueError(f"job {j} has processing time {p}; processing times must be >= 1")
        return jobs

    @model_validator(mode="after")
    def _check_horizon(self) -> "Instance":
        if len(self.costs) != self.horizon:
            raise ValueError(f"costs has {len(self.costs)} entries but horizon is {self.horizon}")
        return self

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def total_processing(self) -> int:
        return sum(self.jobs)

    def cost(self, i: int) -> Fraction:
        """Energy cost of interval i (1-based)."""
        return self.costs[i - 1]

    def with_diagram(self, diagram: TransitionDiagram) -> "Instance":
        return self.model_copy(update={"diagram": diagram})

    def to_payload(self) -> Dict[str, Any]:
        d = self.diagram
        payload: Dict[str, Any] = {
            "horizon": self.horizon,
            "costs": [format_rational(c) for c in self.costs],
            "jobs": list(self.jobs),
            "states": list(d.states),
            "off": d.off,
            "proc": d.proc,
            "transition_time": [list(row) for row in d.transition_time],
            "transition_power": [[_format_optional_rational(p) for p in row] for row in d.transition_power],
        }
        if d.name:
            payload["name"] = d.name
        return payload


class Schedule(BaseModel):
    """Job start intervals and per-interval state/transition labels.

    `omega[i - 1]` is the (s, s') label of interval i as state indices.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    starts: Tuple[int, ...]
    omega: Tuple[Label, ...]
    tec: OptionalRational = None

    def label(self, i: int) -> Label:
        return self.omega[i - 1]

    def with_tec(self, tec: Fraction) -> "Schedule":
        return self.model_copy(update={"tec": tec})

    def to_payload(self, diagram: TransitionDiagram) -> Dict[str, Any]:
        names = diagram.states
        return {
            "starts": list(self.starts),
            "omega": [[names[a], names[b]] for a, b in self.omega],
            "tec": _format_optional_rational(self.tec),
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], diagram: TransitionDiagram) -> "Schedule":
        omega: List[Label] = []
        for i, pair in enumerate(payload.get("omega", []), start=1):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ValueError(f"omega[{i}] must be a pair of state names")
            try:
                omega.append((diagram.index(pair[0]), diagram.index(pair[1])))
            except KeyError as exc:
                raise ValueError(f"omega[{i}]: {exc.args[0]}") from None
        return cls(starts=tuple(payload.get("starts", ())), omega=tuple(omega), tec=payload.get("tec"))


class ProcessingWindow(BaseModel):
    """Earliest and latest interval in which the machine can be processing."""

    model_config = ConfigDict(frozen=True)

    h_first: int
    h_last: int

    @property
    def size(self) -> int:
        return max(0, self.h_last - self.h_first + 1)

    @property
    def is_empty(self) -> bool:
        return self.h_last < self.h_first


class Violation(BaseModel):
    """One broken feasibility condition (0 = malformed shape, 1-4 = feasibility conditions)."""

    model_config = ConfigDict(frozen=True)

    condition: int
    message: str
    intervals: Tuple[int, ...] = ()
    jobs: Tuple[int, ...] = ()


class ValidationResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    valid: bool
    tec: OptionalRational = None
    violations: Tuple[Violation, ...] = ()

    @property
    def conditions(self) -> Tuple[int, ...]:
        return tuple(sorted({v.condition for v in self.violations}))

