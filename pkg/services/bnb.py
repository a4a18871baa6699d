# services/bnb.py
"""
Branch-and-bound search over job sequences.

Purpose:
- Depth-first search over partial sequences; children branch on the distinct
  remaining processing times (ascending), each taking the smallest-id job of
  that length
- Bound every node with the gcd (or unit) relaxation, prune when lb >= ub
- Try to turn the relaxed blocks into a schedule by bin packing all jobs into
  them; a success gives an incumbent and usually closes the node
- Optional first incumbent from the aggregated-jobs heuristic

Responsibilities:
- Time limit, node limit and external cancellation, checked on node entry
  (the root is always evaluated)
- Every incumbent is validated before it is kept
"""
from __future__ import annotations

import threading
import time
from typing import Callable, List, Optional, Sequence

import structlog

from core.errors import (
    InfeasibleRelaxation,
    InfeasibleSequence,
    NoProcessingWindow,
    ReconstructionMismatch,
)
from models.instance import Instance, ProcessingWindow, Schedule
from models.schemas import ProgressEvent, SearchConfig, SolveResult, SolveStatus
from services.bounds import Block, PartialSequence, lower_bound
from services.costs import CostModel
from services.evaluation import fits_window, processing_window, validate
from services.packing import Assignment, bin_pack, initial_upper_bound
from services.seqtec import LevelsArray
from services.switching import SwitchingTable, build_graph, spaces

logger = structlog.get_logger(__name__)

ProgressCallback = Callable[[ProgressEvent], None]


class _Stop(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def reconstruct_schedule(
    instance: Instance,
    switching: SwitchingTable,
    blocks: Sequence[Block],
    assignment: Assignment,
) -> Schedule:
    """Schedule from a packing certificate: each block's jobs back-to-back from the block start."""
    starts = [0] * instance.n
    segments = []
    for block, group in zip(blocks, assignment):
        if not group:
            continue
        start = block.start
        for job in group:
            starts[job] = start
            start += instance.jobs[job]
        segments.append((block.start, start - block.start))
    omega = switching.stitch(segments)
    schedule = Schedule(starts=tuple(starts), omega=omega)
    check = validate(instance, schedule)
    if not check.valid:
        raise ReconstructionMismatch(f"packed schedule does not validate: {[v.message for v in check.violations]}")
    return schedule.with_tec(check.tec)


class BranchAndBoundSolver:
    def __init__(
        self,
        instance: Instance,
        config: Optional[SearchConfig] = None,
        progress: Optional[ProgressCallback] = None,
        cancel: Optional[threading.Event] = None,
    ):
        self.instance = instance
        self.config = config or SearchConfig.from_settings()
        self.progress = progress
        self.cancel = cancel
        self.nodes = 0
        self.pack_calls = 0
        self.pack_hits = 0
        self.ub_raw: Optional[int] = None
        self.incumbent: Optional[Schedule] = None
        self._path_lbs: List[int] = []
        self._stop_lb: Optional[int] = None
        self._started = 0.0

    # limits and reporting

    def _elapsed(self) -> float:
        return time.perf_counter() - self._started

    def _check_limits(self) -> None:
        if self.nodes == 0:
            return
        if self.cancel is not None and self.cancel.is_set():
            raise _Stop("cancelled")
        if self._elapsed() >= self.config.time_limit:
            raise _Stop("time_limit")
        if self.config.node_limit is not None and self.nodes >= self.config.node_limit:
            raise _Stop("node_limit")

    def _emit(self, kind: str, depth: int, lb_raw: Optional[int]) -> None:
        if self.progress is None:
            return
        to_q = self.costs.to_rational
        self.progress(
            ProgressEvent(
                kind=kind,
                nodes=self.nodes,
                depth=depth,
                lb=None if lb_raw is None else to_q(lb_raw),
                ub=None if self.ub_raw is None else to_q(self.ub_raw),
                elapsed=self._elapsed(),
            )
        )

    def _accept(self, schedule: Schedule, raw: int, depth: int, source: str) -> None:
        self.ub_raw = raw
        self.incumbent = schedule
        logger.debug("solve.incumbent", ub=str(schedule.tec), nodes=self.nodes, depth=depth, source=source)
        self._emit("incumbent", depth, self._path_lbs[0] if self._path_lbs else None)

    # search

    def _visit(self, depth: int) -> None:
        self._check_limits()
        self.nodes += 1
        levels = self.levels
        partial = PartialSequence.from_levels(levels)
        mode = "gcd" if self.config.use_gcd else "unit"
        leaf = not partial.remaining
        attempt_pack = self.config.use_primal_packing and not leaf and depth % self.config.pack_every_depth == 0
        try:
            bound = lower_bound(partial, levels, mode=mode, with_blocks=attempt_pack or leaf)
        except InfeasibleRelaxation:
            # no completion of this prefix fits the horizon
            return
        if self.config.progress_every and self.nodes % self.config.progress_every == 0:
            self._emit("progress", depth, bound.raw)

        self._path_lbs.append(bound.raw)
        try:
            if self.ub_raw is not None and bound.raw >= self.ub_raw:
                return
            if leaf:
                starts = [0] * self.instance.n
                for job, (start, _) in zip(levels.fixed_jobs, levels.segments()):
                    starts[job] = start
                schedule = Schedule(starts=tuple(starts), omega=bound.omega, tec=bound.lb)
                check = validate(self.instance, schedule)
                if not check.valid or check.tec != bound.lb:
                    raise ReconstructionMismatch(f"leaf schedule of {partial.fixed} does not validate")
                self._accept(schedule, bound.raw, depth, "leaf")
                return
            if attempt_pack:
                self.pack_calls += 1
                packed = bin_pack(bound.block_lengths, self.instance.jobs, self.config.pack_budget)
                if packed.feasible:
                    self.pack_hits += 1
                    schedule = reconstruct_schedule(self.instance, self.table, bound.blocks, packed.assignment)
                    raw = self.costs.to_raw(schedule.tec)
                    if self.ub_raw is None or raw < self.ub_raw:
                        self._accept(schedule, raw, depth, "packing")
                    if bound.raw >= self.ub_raw:
                        return

            remaining = levels.remaining_jobs()
            for p in sorted({self.instance.jobs[j] for j in remaining}):
                job = min(j for j in remaining if self.instance.jobs[j] == p)
                levels.join(job)
                try:
                    self._visit(depth + 1)
                finally:
                    levels.split()
        except _Stop:
            if self._stop_lb is None:
                self._stop_lb = min(self._path_lbs)
            raise
        finally:
            self._path_lbs.pop()

    def _result(self, status: SolveStatus, lb_raw: Optional[int], preprocess: float) -> SolveResult:
        to_q = self.costs.to_rational
        ub = None if self.ub_raw is None else to_q(self.ub_raw)
        lb = None if lb_raw is None else to_q(lb_raw)
        if lb is not None and ub is not None and lb > ub:
            lb = ub
        return SolveResult(
            status=status,
            ub=ub,
            lb=lb,
            tec=None if self.incumbent is None else self.incumbent.tec,
            schedule=self.incumbent,
            nodes=self.nodes,
            wall_time=self._elapsed(),
            preprocess_time=preprocess,
            pack_calls=self.pack_calls,
            pack_hits=self.pack_hits,
        )

    def _infeasible(self, reason: str) -> SolveResult:
        logger.info("solve.infeasible", reason=reason)
        return SolveResult(status=SolveStatus.INFEASIBLE, wall_time=self._elapsed())

    def solve(self) -> SolveResult:
        self._started = time.perf_counter()
        instance = self.instance
        log = logger.bind(n=instance.n, horizon=instance.horizon)
        log.info("solve.start", config=self.config.model_dump())

        self.costs = CostModel(instance)
        try:
            window: ProcessingWindow = processing_window(instance, build_graph(instance, self.costs))
        except NoProcessingWindow as exc:
            return self._infeasible(exc.message)
        if not fits_window(instance, window):
            return self._infeasible(
                f"{instance.total_processing} processing intervals exceed the window of {window.size}"
            )

        self.table = spaces(instance, self.costs)
        preprocess = self._elapsed()
        self.levels = LevelsArray(self.table, window, instance.jobs)

        if self.config.use_initial_heuristic:
            try:
                mode = "gcd" if self.config.use_gcd else "unit"
                root = lower_bound(PartialSequence.from_levels(self.levels), self.levels, mode=mode)
                initial = initial_upper_bound(instance, self.table, root.blocks, window, self.config.bin_find_budget)
                self._accept(initial.schedule, self.costs.to_raw(initial.ub), 0, "initial")
            except (InfeasibleSequence, InfeasibleRelaxation) as exc:
                log.info("solve.no_initial_bound", reason=exc.message)

        try:
            self._visit(0)
        except _Stop as stop:
            cancelled = stop.reason == "cancelled"
            status = SolveStatus.FEASIBLE if cancelled and self.incumbent is not None else SolveStatus.TIMED_OUT
            result = self._result(status, self._stop_lb, preprocess)
            log.info("solve.finish", status=status.value, reason=stop.reason, nodes=self.nodes, ub=str(result.ub))
            return result

        if self.incumbent is None:
            return self._infeasible("search finished without a feasible schedule")
        result = self._result(SolveStatus.OPTIMAL, self.ub_raw, preprocess)
        log.info("solve.finish", status="Optimal", nodes=self.nodes, ub=str(result.ub), wall_time=round(result.wall_time, 4))
        return result


def solve(
    instance: Instance,
    config: Optional[SearchConfig] = None,
    progress: Optional[ProgressCallback] = None,
    cancel: Optional[threading.Event] = None,
) -> SolveResult:
    return BranchAndBoundSolver(instance, config, progress, cancel).solve()
