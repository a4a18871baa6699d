# services/costs.py
"""
Exact integer view of an instance's costs.

Costs and powers are rationals. Every product c_i * P[s][s'] is scaled by the
lcm of the cost denominators times the lcm of the power denominators, which
turns all path and schedule costs into integers. Arrays use int64 while the
largest possible schedule cost stays far below 2**63, and Python ints
(object dtype) otherwise. Values at or above INF // 2 mean "no path".
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Optional

import numpy as np

from models.instance import Instance

_INT64_SAFE = 2**58


class CostModel:
    def __init__(self, instance: Instance):
        self.instance = instance
        self.horizon = instance.horizon
        diagram = instance.diagram
        self.diagram = diagram

        cost_scale = math.lcm(*(c.denominator for c in instance.costs))
        powers = [p for row in diagram.transition_power for p in row if p is not None]
        power_scale = math.lcm(*(p.denominator for p in powers)) if powers else 1
        self.cost_scale = cost_scale
        self.power_scale = power_scale
        self.scale = cost_scale * power_scale

        # 1-based; index 0 unused
        self.c_int: List[int] = [0] + [int(c * cost_scale) for c in instance.costs]
        self.p_int: List[List[Optional[int]]] = [
            [None if p is None else int(p * power_scale) for p in row] for row in diagram.transition_power
        ]
        self.csum: List[int] = [0] * (self.horizon + 1)
        for i in range(1, self.horizon + 1):
            self.csum[i] = self.csum[i - 1] + self.c_int[i]

        max_c = max(abs(c) for c in self.c_int)
        max_p = max((abs(p) for row in self.p_int for p in row if p is not None), default=0)
        bound = 4 * self.horizon * max(max_c, 1) * max(max_p, 1)
        if bound < _INT64_SAFE:
            self.dtype = np.int64
            self.INF = 2**61
        else:
            self.dtype = object
            self.INF = 2 ** (bound.bit_length() + 4)
        self.csum_array = np.array(self.csum, dtype=self.dtype)

    @property
    def has_negative_costs(self) -> bool:
        return min(self.c_int[1:]) < 0

    def interval_sum(self, start: int, length: int) -> int:
        """Scaled sum of c over intervals start .. start + length - 1."""
        return self.csum[start + length - 1] - self.csum[start - 1]

    def weight(self, s: int, t: int, start: int, length: int) -> int:
        """Scaled energy of transition s->t occupying `length` intervals from `start`."""
        power = self.p_int[s][t]
        if power is None:
            raise ValueError(f"transition {s}->{t} does not exist")
        return power * self.interval_sum(start, length) if length else 0

    def label_cost(self, i: int, s: int, t: int) -> int:
        power = self.p_int[s][t]
        if power is None:
            raise ValueError(f"transition {s}->{t} does not exist")
        return self.c_int[i] * power

    def boundary_cost(self, i: int) -> int:
        """Scaled cost of the mandatory (off, off) label at interval i."""
        off = self.diagram.off_index
        return self.c_int[i] * self.p_int[off][off]

    def segment_energy(self, length: int, first_start: int, count: int) -> np.ndarray:
        """Processing energy of a `length`-interval segment for the `count` starts first_start, first_start + 1, ..."""
        proc = self.diagram.proc_index
        starts = np.arange(first_start, first_start + count)
        return self.p_int[proc][proc] * (self.csum_array[starts + length - 1] - self.csum_array[starts - 1])

    def is_absent(self, raw) -> bool:
        return raw >= self.INF // 2

    def to_rational(self, raw: int) -> Fraction:
        return Fraction(int(raw), self.scale)

    def to_raw(self, value: Fraction) -> int:
        scaled = Fraction(value) * self.scale
        if scaled.denominator != 1:
            raise ValueError(f"{value} is not representable at scale {self.scale}")
        return int(scaled)
