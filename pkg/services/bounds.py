# services/bounds.py
"""
Lower bounds for partial sequences.

The un-fixed jobs are relaxed into equal chunks: unit chunks (unit mode) or
chunks of the gcd of their processing times (gcd mode). The relaxed schedule is
read from the levels array; its maximal runs of (proc, proc) intervals are the
blocks the packing heuristic fills.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Literal, NamedTuple, Optional, Sequence, Tuple

from core.errors import InfeasibleRelaxation
from models.instance import Label
from services.seqtec import LevelsArray

BoundMode = Literal["unit", "gcd"]


@dataclass(frozen=True)
class PartialSequence:
    fixed: Tuple[int, ...]
    remaining: Tuple[int, ...]

    @classmethod
    def from_levels(cls, levels: LevelsArray) -> "PartialSequence":
        return cls(
            fixed=levels.fixed_jobs,
            remaining=tuple(levels.lengths[j] for j in levels.remaining_jobs()),
        )


class Block(NamedTuple):
    start: int
    length: int


@dataclass(frozen=True)
class LowerBound:
    lb: Fraction
    raw: int
    gcd: Optional[int]
    blocks: Tuple[Block, ...] = ()
    omega: Optional[Tuple[Label, ...]] = None

    @property
    def block_lengths(self) -> Tuple[int, ...]:
        return tuple(b.length for b in self.blocks)


def gcd_of_remaining(partial: PartialSequence) -> Optional[int]:
    """gcd of the un-fixed processing times; None once every job is fixed."""
    if not partial.remaining:
        return None
    return reduce(math.gcd, partial.remaining)


def extract_blocks(omega: Sequence[Label], proc: int) -> Tuple[Block, ...]:
    blocks = []
    start = None
    for i, label in enumerate(omega, start=1):
        if label == (proc, proc):
            if start is None:
                start = i
        elif start is not None:
            blocks.append(Block(start, i - start))
            start = None
    if start is not None:
        blocks.append(Block(start, len(omega) + 1 - start))
    return tuple(blocks)


def lower_bound(
    partial: PartialSequence,
    levels: LevelsArray,
    mode: BoundMode = "gcd",
    with_blocks: bool = True,
) -> LowerBound:
    if partial.fixed != levels.fixed_jobs:
        raise ValueError(f"levels hold {levels.fixed_jobs}, expected {partial.fixed}")
    g = gcd_of_remaining(partial) if mode == "gcd" else (1 if partial.remaining else None)
    raw = levels.bound(g or 1)
    costs = levels.costs
    if costs.is_absent(raw):
        raise InfeasibleRelaxation(f"relaxation of {partial.fixed} has no feasible placement")
    if not with_blocks:
        return LowerBound(lb=costs.to_rational(raw), raw=raw, gcd=g)
    omega = levels.table.stitch(levels.segments(g or 1))
    proc = levels.table.instance.diagram.proc_index
    return LowerBound(lb=costs.to_rational(raw), raw=raw, gcd=g, blocks=extract_blocks(omega, proc), omega=omega)
