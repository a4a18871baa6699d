# services/bench.py
"""
Benchmark and parameter-sweep drivers.

Purpose:
- run_bench(): generate and solve a list of GenSpecs, one BenchRecord each;
  a failing instance becomes an "Error" row and the run continues
- aggregate() / unsolved(): group summary (#o optimal, #s feasible but not
  proven optimal, mean gap, mean time) and the per-instance view of
  everything not solved to optimality
- run_sweep(): solve one instance over a grid of turn-on / turn-off powers

Rows come back ordered by instance id whatever the completion order of the
worker processes.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd
import structlog

from core.errors import SchedulingError
from models.instance import Instance
from models.schemas import (
    BENCH_COLUMNS,
    SWEEP_COLUMNS,
    BenchRecord,
    GenSpec,
    SearchConfig,
    SolveStatus,
    SweepPoint,
    gap_percent,
)
from services.bnb import solve
from services.instgen import generate

logger = structlog.get_logger(__name__)


def expand_repeats(specs: Iterable[GenSpec], repeat: int) -> List[GenSpec]:
    """Each spec over `repeat` consecutive seeds, with distinct instance ids."""
    expanded = []
    for spec in specs:
        if repeat <= 1:
            expanded.append(spec)
            continue
        for k in range(repeat):
            expanded.append(
                spec.model_copy(update={"seed": spec.seed + k, "instance_id": f"{spec.label}-r{k:03d}"})
            )
    return expanded


def solve_spec(spec: GenSpec, config: SearchConfig) -> BenchRecord:
    group = spec.group_key()
    try:
        instance = generate(spec)
        result = solve(instance, config)
    except (SchedulingError, ValueError) as exc:
        logger.warning("bench.instance_failed", instance_id=spec.label, error=str(exc))
        return BenchRecord(instance_id=spec.label, n=spec.n, h=0, proc_time_set=group, status="Error", error=str(exc))
    record = BenchRecord(
        instance_id=spec.label,
        n=instance.n,
        h=instance.horizon,
        proc_time_set=group,
        status=result.status.value,
        ub=result.ub,
        lb=result.lb,
        gap_percent=gap_percent(result.ub, result.lb),
        nodes=result.nodes,
        time_ms=result.wall_time * 1000.0,
        preprocess_ms=result.preprocess_time * 1000.0,
    )
    logger.info("bench.instance", instance_id=record.instance_id, status=record.status, nodes=record.nodes)
    return record


def _solve_args(args: Tuple[GenSpec, SearchConfig]) -> BenchRecord:
    return solve_spec(*args)


def run_bench(specs: Sequence[GenSpec], config: SearchConfig, jobs: int = 1) -> List[BenchRecord]:
    work = [(spec, config) for spec in specs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_solve_args, work))
    else:
        records = [_solve_args(item) for item in work]
    return sorted(records, key=lambda r: r.instance_id)


def records_frame(records: Sequence[BenchRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=list(BENCH_COLUMNS))


def write_records(records: Sequence[BenchRecord], path) -> None:
    records_frame(records).to_csv(path, index=False)


def aggregate(records: Sequence[BenchRecord]) -> pd.DataFrame:
    columns = ["n", "proc_time_set", "instances", "#o", "#s", "mean_gap_percent", "mean_time_ms"]
    if not records:
        return pd.DataFrame(columns=columns)
    frame = records_frame(records)
    frame["optimal"] = frame["status"] == SolveStatus.OPTIMAL.value
    frame["feasible"] = frame["ub"].notna() & ~frame["optimal"]
    frame["gap"] = pd.to_numeric(frame["gap_percent"], errors="coerce")
    grouped = frame.groupby(["n", "proc_time_set"], sort=True).agg(
        instances=("instance_id", "count"),
        **{"#o": ("optimal", "sum"), "#s": ("feasible", "sum")},
        mean_gap_percent=("gap", "mean"),
        mean_time_ms=("time_ms", "mean"),
    )
    return grouped.reset_index()[columns]


def unsolved(records: Sequence[BenchRecord]) -> pd.DataFrame:
    columns = ["instance_id", "status", "ub", "lb", "gap_percent", "nodes"]
    frame = records_frame(records)
    return frame.loc[frame["status"] != SolveStatus.OPTIMAL.value, columns].reset_index(drop=True)


def parse_grid(text: str) -> List[Fraction]:
    """"LO:HI:STEPS" as STEPS evenly spaced exact values (a single value when STEPS is 1)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} must look like LO:HI:STEPS")
    lo, hi, steps = Fraction(parts[0]), Fraction(parts[1]), int(parts[2])
    if steps < 1:
        raise ValueError("grid needs at least one step")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]


def run_sweep(
    instance: Instance,
    p_on_values: Sequence[Fraction],
    p_off_values: Sequence[Fraction],
    config: Optional[SearchConfig] = None,
) -> List[SweepPoint]:
    diagram = instance.diagram
    off, proc = diagram.off_index, diagram.proc_index
    points = []
    for p_on in p_on_values:
        for p_off in p_off_values:
            try:
                variant = diagram.with_power(off, proc, p_on).with_power(proc, off, p_off)
                result = solve(instance.with_diagram(variant), config)
                point = SweepPoint(p_on=p_on, p_off=p_off, status=result.status.value, tec=result.tec)
            except (SchedulingError, ValueError) as exc:
                logger.warning("sweep.point_failed", p_on=str(p_on), p_off=str(p_off), error=str(exc))
                point = SweepPoint(p_on=p_on, p_off=p_off, status="Error")
            points.append(point)
    return points


def write_sweep(points: Sequence[SweepPoint], path) -> None:
    pd.DataFrame([p.to_row() for p in points], columns=list(SWEEP_COLUMNS)).to_csv(path, index=False)
