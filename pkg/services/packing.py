# services/packing.py
"""
Packing subproblems of the search.

- bin_pack: can every job go into the blocks of a relaxed schedule without
  exceeding a block's length? First-fit decreasing, then an exact depth-first
  search under a time budget (Feasible / Infeasible / Unknown).
- bin_find: assign jobs to blocks so the filled sizes deviate as little as
  possible (max |s_i - b_i|) from the block lengths.
- initial_upper_bound: bin_find on the root blocks, schedule the resulting
  aggregated jobs and expand them into a first incumbent.

Jobs are branched on in decreasing processing time, ties by ascending id, and
inside a block they run in that same order.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import structlog

from core.errors import ReconstructionMismatch
from models.instance import Instance, ProcessingWindow, Schedule
from services.bounds import Block
from services.evaluation import validate
from services.seqtec import schedule_lengths
from services.switching import SwitchingTable

logger = structlog.get_logger(__name__)

Assignment = Tuple[Tuple[int, ...], ...]


class PackStatus(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class PackResult:
    status: PackStatus
    assignment: Optional[Assignment] = None

    @property
    def feasible(self) -> bool:
        return self.status is PackStatus.FEASIBLE


@dataclass(frozen=True)
class BinFindResult:
    z: int
    sizes: Tuple[int, ...]
    assignment: Assignment
    optimal: bool = True


class _OutOfTime(Exception):
    pass


class _Clock:
    def __init__(self, budget: Optional[float]):
        self.deadline = None if budget is None else time.perf_counter() + budget

    def check(self) -> None:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise _OutOfTime()


def branching_order(jobs: Sequence[int]) -> List[int]:
    return sorted(range(len(jobs)), key=lambda j: (-jobs[j], j))


def _collect(order: Sequence[int], placed: Sequence[int], blocks: int) -> Assignment:
    groups: List[List[int]] = [[] for _ in range(blocks)]
    for k, job in enumerate(order):
        groups[placed[k]].append(job)
    return tuple(tuple(g) for g in groups)


def _first_fit_decreasing(capacities: Sequence[int], jobs: Sequence[int], order: Sequence[int]) -> Optional[List[int]]:
    residual = list(capacities)
    placed = []
    for job in order:
        for b, room in enumerate(residual):
            if room >= jobs[job]:
                residual[b] -= jobs[job]
                placed.append(b)
                break
        else:
            return None
    return placed


def bin_pack(capacities: Sequence[int], jobs: Sequence[int], budget: Optional[float] = None) -> PackResult:
    """Decide whether jobs (processing times by id) fit the blocks (capacities)."""
    caps = [int(c) for c in capacities]
    n = len(jobs)
    if n == 0:
        return PackResult(PackStatus.FEASIBLE, tuple(() for _ in caps))
    if not caps or sum(jobs) > sum(caps) or max(jobs) > max(caps):
        return PackResult(PackStatus.INFEASIBLE)

    order = branching_order(jobs)
    quick = _first_fit_decreasing(caps, jobs, order)
    if quick is not None:
        return PackResult(PackStatus.FEASIBLE, _collect(order, quick, len(caps)))

    sizes = [jobs[j] for j in order]
    smallest = sizes[-1]
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + sizes[k]
    residual = list(caps)
    placed = [-1] * n
    failed = set()
    clock = _Clock(budget)

    def dfs(k: int, lo: int) -> bool:
        if k == n:
            return True
        clock.check()
        usable = sum(r for r in residual if r >= smallest)
        if suffix[k] > usable:
            return False
        p = sizes[k]
        new_group = k == 0 or sizes[k - 1] != p
        # equal-size jobs are interchangeable: keep them in non-decreasing block order
        key = (k, tuple(sorted(residual))) if new_group else (k, tuple(residual), lo)
        if key in failed:
            return False
        tried = set()
        for b in range(0 if new_group else lo, len(residual)):
            room = residual[b]
            if room < p or room in tried:
                continue
            tried.add(room)
            residual[b] -= p
            placed[k] = b
            if dfs(k + 1, b):
                return True
            residual[b] += p
        failed.add(key)
        return False

    try:
        found = dfs(0, 0)
    except _OutOfTime:
        return PackResult(PackStatus.UNKNOWN)
    if found:
        return PackResult(PackStatus.FEASIBLE, _collect(order, placed, len(caps)))
    return PackResult(PackStatus.INFEASIBLE)


def _deviation(sizes: Iterable[int], targets: Sequence[int]) -> int:
    return max(abs(s - b) for s, b in zip(sizes, targets))


def bin_find(block_sizes: Sequence[int], jobs: Sequence[int], budget: Optional[float] = None) -> BinFindResult:
    """Minimize max_i |s_i - b_i| over assignments of jobs to blocks."""
    targets = [int(b) for b in block_sizes]
    k = len(targets)
    n = len(jobs)
    if k == 0 or n == 0:
        raise ValueError("bin_find needs at least one block and one job")

    order = branching_order(jobs)
    sizes = [jobs[j] for j in order]
    suffix = [0] * (n + 1)
    for d in range(n - 1, -1, -1):
        suffix[d] = suffix[d + 1] + sizes[d]
    filled = [0] * k
    placed = [-1] * n
    best: dict = {"z": None, "placed": None}
    clock = _Clock(budget)

    def lower(depth: int) -> int:
        excess = max(max(0, s - b) for s, b in zip(filled, targets))
        deficit = sum(max(0, b - s) for s, b in zip(filled, targets))
        spread = math.ceil((deficit - suffix[depth]) / k) if deficit > suffix[depth] else 0
        return max(excess, spread)

    def dfs(depth: int, lo: int) -> None:
        clock.check()
        if depth == n:
            z = _deviation(filled, targets)
            if best["z"] is None or z < best["z"]:
                best["z"], best["placed"] = z, list(placed)
            return
        if best["z"] is not None and lower(depth) >= best["z"]:
            return
        p = sizes[depth]
        new_group = depth == 0 or sizes[depth - 1] != p
        seen = set()
        for i in range(0 if new_group else lo, k):
            if (targets[i], filled[i]) in seen:
                continue
            seen.add((targets[i], filled[i]))
            filled[i] += p
            placed[depth] = i
            dfs(depth + 1, i)
            filled[i] -= p

    optimal = True
    try:
        dfs(0, 0)
    except _OutOfTime:
        optimal = False
    if best["placed"] is None:
        best["placed"] = _largest_deficit_first(sizes, targets)
        optimal = False
    chosen = best["placed"]
    assignment = _collect(order, chosen, k)
    totals = tuple(sum(jobs[j] for j in group) for group in assignment)
    return BinFindResult(z=_deviation(totals, targets), sizes=totals, assignment=assignment, optimal=optimal)


def _largest_deficit_first(sizes: Sequence[int], targets: Sequence[int]) -> List[int]:
    filled = [0] * len(targets)
    placed = []
    for p in sizes:
        i = max(range(len(targets)), key=lambda b: (targets[b] - filled[b], -b))
        filled[i] += p
        placed.append(i)
    return placed


@dataclass(frozen=True)
class InitialBound:
    ub: Fraction
    schedule: Schedule
    packing: BinFindResult


def initial_upper_bound(
    instance: Instance,
    switching: SwitchingTable,
    root_blocks: Sequence[Block],
    window: Optional[ProcessingWindow] = None,
    budget: Optional[float] = None,
) -> InitialBound:
    """First incumbent from aggregated jobs sized after the root relaxation's blocks."""
    found = bin_find([b.length for b in root_blocks], instance.jobs, budget)
    groups = [group for group in found.assignment if group]
    aggregated = [sum(instance.jobs[j] for j in group) for group in groups]
    placed = schedule_lengths(instance, switching, aggregated, window)

    starts = [0] * instance.n
    for start, group in zip(placed.starts, groups):
        for job in group:
            starts[job] = start
            start += instance.jobs[job]
    schedule = Schedule(starts=tuple(starts), omega=placed.omega, tec=placed.tec)
    check = validate(instance, schedule)
    if not check.valid or check.tec != placed.tec:
        raise ReconstructionMismatch(f"aggregated schedule does not validate: {check.violations}")
    logger.debug("initial_bound.done", z=found.z, sizes=list(found.sizes), ub=str(placed.tec))
    return InitialBound(ub=placed.tec, schedule=schedule, packing=found)
