# services/instgen.py
"""
Benchmark instance generation and price-profile ingestion.

Purpose:
- generate(): n processing times drawn uniformly from a set, horizon
  h = ceil(lambda * (T[off, proc] + sum(p) + T[proc, off])), costs drawn
  uniformly, cut from a price profile, or injected verbatim
- ingest_prices(): read an `idx,cost` CSV into exact rationals

Randomness: numpy's PCG64 seeded through SeedSequence(seed).spawn(2); the first
child stream draws processing times, the second draws costs, so changing the
cost source never changes the jobs.
"""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from core.errors import MalformedDiagram, PriceParseError, ProfileTooShort
from models.instance import Instance, parse_rational
from models.schemas import GenSpec, InjectedCosts, ProfileCosts, UniformCosts

logger = structlog.get_logger(__name__)

# horizon inflation factors of the benchmark study
LAMBDA_GRID: Tuple[Fraction, ...] = (Fraction(13, 10), Fraction(16, 10), Fraction(19, 10), Fraction(22, 10))

PROC_TIME_GROUPS: Dict[str, Tuple[int, ...]] = {
    "1-10": tuple(range(1, 11)),
    "1,2,3,5,7": (1, 2, 3, 5, 7),
    "2,4,6,8,10": (2, 4, 6, 8, 10),
    "2,4": (2, 4),
    "3,5,6,7": (3, 5, 6, 7),
    "3,7": (3, 7),
    "8,10": (8, 10),
    "8,9,10": (8, 9, 10),
    "1,2,10": (1, 2, 10),
}


def resolve_group(name: str) -> Tuple[int, ...]:
    """Named group, or an explicit comma-separated list such as "1,4,6"."""
    key = name.strip().strip("{}").replace(" ", "")
    if key in PROC_TIME_GROUPS:
        return PROC_TIME_GROUPS[key]
    try:
        values = tuple(int(v) for v in key.split(",") if v)
    except ValueError:
        raise ValueError(f"unknown processing-time group {name!r}") from None
    if not values:
        raise ValueError(f"unknown processing-time group {name!r}")
    return values


def horizon_for(spec: GenSpec, jobs: Tuple[int, ...]) -> int:
    diagram = spec.diagram
    turn_on = diagram.time(diagram.off_index, diagram.proc_index)
    turn_off = diagram.time(diagram.proc_index, diagram.off_index)
    if turn_on is None or turn_off is None:
        raise MalformedDiagram("the generator needs direct off->proc and proc->off transitions")
    return math.ceil(spec.lam * (turn_on + sum(jobs) + turn_off))


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    jobs_seq, costs_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(jobs_seq)), np.random.Generator(np.random.PCG64(costs_seq))


def generate(spec: GenSpec) -> Instance:
    job_rng, cost_rng = _streams(spec.seed)
    if spec.forced_jobs is not None:
        jobs = tuple(spec.forced_jobs)
    else:
        jobs = tuple(int(p) for p in job_rng.choice(np.array(spec.proc_time_set), size=spec.n))
    h = horizon_for(spec, jobs)

    source = spec.cost_source
    if isinstance(source, UniformCosts):
        costs: List[Fraction] = [Fraction(int(c)) for c in cost_rng.integers(source.lo, source.hi + 1, size=h)]
    elif isinstance(source, ProfileCosts):
        costs = _window(ingest_prices(source.path, source.index_column, source.cost_column), source.offset, h, source.wrap)
    elif isinstance(source, InjectedCosts):
        if len(source.costs) < h:
            raise ProfileTooShort(f"{len(source.costs)} injected costs cannot cover a horizon of {h}")
        costs = list(source.costs[:h])
    else:  # pragma: no cover
        raise TypeError(f"unsupported cost source {type(source).__name__}")

    logger.debug("instgen.generated", n=len(jobs), horizon=h, seed=spec.seed, source=source.kind)
    return Instance(horizon=h, costs=tuple(costs), jobs=jobs, diagram=spec.diagram)


def _window(profile: Tuple[Fraction, ...], offset: int, h: int, wrap: bool) -> List[Fraction]:
    if not profile:
        raise ProfileTooShort("the price profile is empty")
    if wrap:
        return [profile[(offset + k) % len(profile)] for k in range(h)]
    if offset + h > len(profile):
        raise ProfileTooShort(
            f"profile has {len(profile)} prices; offset {offset} and horizon {h} need {offset + h}"
        )
    return list(profile[offset:offset + h])


def ingest_prices(
    path: Union[str, Path],
    index_column: str = "idx",
    cost_column: str = "cost",
) -> Tuple[Fraction, ...]:
    """Cost vector ordered by the index column. Negative prices are kept as they are."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise PriceParseError(f"cannot read price profile {path}: {exc}") from exc
    for column in (index_column, cost_column):
        if column not in frame.columns:
            raise PriceParseError(f"price profile {path} has no column {column!r}", column=column)

    rows: List[Tuple[int, Fraction]] = []
    seen = set()
    for row, (raw_idx, raw_cost) in enumerate(zip(frame[index_column], frame[cost_column]), start=1):
        try:
            idx = int(raw_idx.strip())
        except ValueError:
            raise PriceParseError(f"row {row}: index {raw_idx!r} is not an integer", row=row, column=index_column) from None
        if idx in seen:
            raise PriceParseError(f"row {row}: duplicate index {idx}", row=row, column=index_column)
        seen.add(idx)
        try:
            cost = parse_rational(raw_cost)
        except ValueError:
            raise PriceParseError(f"row {row}: cost {raw_cost!r} is not a number", row=row, column=cost_column) from None
        rows.append((idx, cost))
    rows.sort(key=lambda item: item[0])
    return tuple(cost for _, cost in rows)
