# services/seqtec.py
"""
Optimal TEC of a job sequence, and the levels array the search keeps between nodes.

A sequence of processing segments (jobs, or relaxed chunks of jobs) is laid
out inside the processing window [h_first, h_last]. With Q the processing time
placed before a segment, the segment starts at h_first + Q + x for an offset
x in [0, W) where W = h_last - h_first + 2 - (total processing time); offsets
never decrease along the sequence. The DP therefore works on W-wide rows:

- dp[0][y]  cost up to a first segment starting at offset y
            (c_1 * P[off, off] + sigma(1, start))
- dp[Q][x]  cheapest cost of the segments covering the first Q levels with the
            last one ending at h_first + Q - 1 + x, its energy included

Only the fixed prefix of a search node is materialized. The relaxed remainder
(equal chunks of length g) is read from a suffix table that depends on g only
and is shared by every node of the search.

Ties between equal costs resolve to the earliest offset.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.errors import EmptyJoinStack, InfeasibleRelaxation, InfeasibleSequence
from models.instance import Instance, Label, ProcessingWindow, Schedule
from services.evaluation import processing_window
from services.switching import SwitchingTable


class _Suffix:
    """Chains of j chunks of length g finishing the schedule, for growing j."""

    def __init__(self, g: int, v0: np.ndarray):
        self.g = g
        self.V: List[np.ndarray] = [v0]
        self.U: List[Optional[np.ndarray]] = [None]
        self.argV: List[Optional[np.ndarray]] = [None]


class LevelsArray:
    def __init__(self, table: SwitchingTable, window: ProcessingWindow, lengths: Sequence[int]):
        self.table = table
        self.costs = table.costs
        self.sigma = table.sigma
        self.INF = self.costs.INF
        self.lengths = tuple(int(p) for p in lengths)
        if not self.lengths or min(self.lengths) < 1:
            raise ValueError("lengths must be positive and non-empty")
        self.total = sum(self.lengths)
        self.h_first = window.h_first
        self.h_last = window.h_last
        self.width = window.h_last - window.h_first + 2 - self.total
        if self.width <= 0:
            raise InfeasibleRelaxation(
                f"{self.total} processing intervals do not fit the window [{self.h_first}, {self.h_last}]"
            )
        self.end = self.h_first + self.total
        horizon = table.horizon
        w = self.width

        self.dp: List[Optional[np.ndarray]] = [None] * (self.total + 1)
        self.arg: List[Optional[np.ndarray]] = [None] * (self.total + 1)
        self.dp[0] = self._clamp(self.costs.boundary_cost(1) + self.sigma[1, self.h_first:self.h_first + w])
        self.level_job: List[int] = [-1] * self.total
        self.joins: List[Tuple[int, int]] = []
        self.fixed_levels = 0
        self._fixed: set = set()

        v0 = self.sigma[self.end - 1:self.end - 1 + w, horizon] + self.costs.boundary_cost(horizon)
        self._v0 = self._clamp(v0)
        self._suffixes: Dict[int, _Suffix] = {}

    def _clamp(self, values: np.ndarray) -> np.ndarray:
        return np.minimum(values, self.INF)

    def _advance(self, row: np.ndarray, level_start: int) -> Tuple[np.ndarray, np.ndarray]:
        """Cheapest switching from the segment ending before `level_start` to each start offset."""
        w = self.width
        block = self.sigma[level_start - 1:level_start - 1 + w, level_start:level_start + w]
        totals = row[:, None] + block
        return self._clamp(totals.min(axis=0)), totals.argmin(axis=0)

    def _suffix(self, g: int, chunks: int) -> _Suffix:
        suffix = self._suffixes.get(g)
        if suffix is None:
            suffix = self._suffixes[g] = _Suffix(g, self._v0)
        w = self.width
        while len(suffix.V) <= chunks:
            j = len(suffix.V)
            first = self.end - j * g
            u = self._clamp(self.costs.segment_energy(g, first, w) + suffix.V[j - 1])
            block = self.sigma[first - 1:first - 1 + w, first:first + w]
            totals = block + u[None, :]
            suffix.U.append(u)
            suffix.V.append(self._clamp(totals.min(axis=1)))
            suffix.argV.append(totals.argmin(axis=1))
        return suffix

    @property
    def fixed_jobs(self) -> Tuple[int, ...]:
        return tuple(job for job, _ in self.joins)

    def remaining_jobs(self) -> Tuple[int, ...]:
        return tuple(j for j in range(len(self.lengths)) if j not in self._fixed)

    def remaining_levels(self) -> int:
        return self.total - self.fixed_levels

    def join(self, job: int) -> None:
        """Fix `job` on the next levels and compute the DP row at their end."""
        if job in self._fixed:
            raise ValueError(f"job {job} is already fixed")
        p = self.lengths[job]
        q = self.fixed_levels
        energy = self.costs.segment_energy(p, self.h_first + q, self.width)
        if q == 0:
            row, arg = self.dp[0] + energy, None
        else:
            best, arg = self._advance(self.dp[q], self.h_first + q)
            row = best + energy
        self.dp[q + p] = self._clamp(row)
        self.arg[q + p] = arg
        self.level_job[q:q + p] = [job] * p
        self.joins.append((job, q))
        self._fixed.add(job)
        self.fixed_levels = q + p

    def split(self) -> int:
        """Undo the most recent join; returns the released job."""
        if not self.joins:
            raise EmptyJoinStack("no joined levels to split")
        job, q = self.joins.pop()
        p = self.lengths[job]
        self.dp[q + p] = None
        self.arg[q + p] = None
        self.level_job[q:q + p] = [-1] * p
        self._fixed.discard(job)
        self.fixed_levels = q
        return job

    def _chunks(self, g: int) -> int:
        rest = self.remaining_levels()
        if rest % g:
            raise ValueError(f"chunk length {g} does not divide the {rest} remaining levels")
        return rest // g

    def _values(self, g: int) -> np.ndarray:
        q = self.fixed_levels
        chunks = self._chunks(g)
        if chunks == 0:
            return self.dp[q] + self._v0
        suffix = self._suffix(g, chunks)
        if q == 0:
            return self.dp[0] + suffix.U[chunks]
        return self.dp[q] + suffix.V[chunks]

    def bound(self, g: int = 1) -> int:
        """Scaled optimum of the fixed prefix followed by the remaining levels cut into chunks of length g."""
        values = self._values(g)
        return int(values[int(values.argmin())])

    def segments(self, g: int = 1) -> List[Tuple[int, int]]:
        """(start, length) of every segment of the schedule attaining bound(g)."""
        values = self._values(g)
        best = int(values.argmin())
        if self.costs.is_absent(values[best]):
            raise InfeasibleRelaxation("no feasible placement of the remaining levels")
        q = self.fixed_levels
        chunks = self._chunks(g)

        prefix: List[Tuple[int, int]] = []
        x = best
        for job, level in reversed(self.joins):
            p = self.lengths[job]
            prefix.append((self.h_first + level + x, p))
            if level > 0:
                x = int(self.arg[level + p][x])
        prefix.reverse()

        tail: List[Tuple[int, int]] = []
        if chunks:
            suffix = self._suffix(g, chunks)
            j = chunks
            x = best
            if q == 0:
                # the first chunk is start-anchored at offset `best`
                tail.append((self.end - j * g + x, g))
                j -= 1
            while j >= 1:
                x = int(suffix.argV[j][x])
                tail.append((self.end - j * g + x, g))
                j -= 1
        return prefix + tail


def join_levels(levels: LevelsArray, job: int) -> None:
    levels.join(job)


def split_levels(levels: LevelsArray) -> int:
    return levels.split()


class SequenceEvaluation(NamedTuple):
    tec: Fraction
    starts: Tuple[int, ...]
    schedule: Schedule


class LengthsEvaluation(NamedTuple):
    tec: Fraction
    starts: Tuple[int, ...]
    omega: Tuple[Label, ...]


def schedule_lengths(
    instance: Instance,
    table: SwitchingTable,
    lengths: Sequence[int],
    window: Optional[ProcessingWindow] = None,
) -> LengthsEvaluation:
    """Optimal placement of segments with the given lengths, in the given order."""
    window = window or processing_window(instance)
    try:
        levels = LevelsArray(table, window, lengths)
        for k in range(len(levels.lengths)):
            levels.join(k)
        raw = levels.bound()
        if table.costs.is_absent(raw):
            raise InfeasibleSequence("no feasible placement for this sequence")
        segments = levels.segments()
    except InfeasibleRelaxation as exc:
        raise InfeasibleSequence(exc.message) from exc
    omega = table.stitch(segments)
    return LengthsEvaluation(
        tec=table.costs.to_rational(raw),
        starts=tuple(start for start, _ in segments),
        omega=omega,
    )


def fixed_sequence_tec(
    instance: Instance,
    table: SwitchingTable,
    sequence: Sequence[int],
    window: Optional[ProcessingWindow] = None,
) -> SequenceEvaluation:
    """Minimum TEC over all schedules processing the jobs in `sequence` order (0-based job ids)."""
    if sorted(sequence) != list(range(instance.n)):
        raise ValueError(f"{list(sequence)} is not a permutation of the {instance.n} jobs")
    placed = schedule_lengths(instance, table, [instance.jobs[j] for j in sequence], window)
    starts = [0] * instance.n
    for job, start in zip(sequence, placed.starts):
        starts[job] = start
    schedule = Schedule(starts=tuple(starts), omega=placed.omega, tec=placed.tec)
    return SequenceEvaluation(tec=placed.tec, starts=schedule.starts, schedule=schedule)
