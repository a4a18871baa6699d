# services/evaluation.py
"""
TEC evaluation, feasibility validation and the processing window.

Feasibility conditions checked by validate():
1. processing windows of different jobs do not overlap
2. every interval a job occupies is labelled (proc, proc)
3. the first and the last interval are labelled (off, off)
4. Omega parses as a walk through the diagram starting in off: a transition
   of duration d is d identical consecutive labels, zero-duration transitions
   may be taken between intervals and never occupy one
Condition 0 reports a malformed schedule (wrong lengths, unknown states);
nothing else is checked in that case.
"""
from __future__ import annotations

from fractions import Fraction
from typing import List, Optional

from core.errors import AbsentTransition, NoProcessingWindow
from models.instance import Instance, ProcessingWindow, Schedule, ValidationResult, Violation
from services.costs import CostModel
from services.switching import IntervalStateGraph, build_graph


def tec(instance: Instance, schedule: Schedule) -> Fraction:
    """Sum over intervals of c_i * P[Omega_i]."""
    if len(schedule.omega) != instance.horizon:
        raise ValueError(f"omega has {len(schedule.omega)} labels, horizon is {instance.horizon}")
    diagram = instance.diagram
    total = Fraction(0)
    for i, (s, t) in enumerate(schedule.omega, start=1):
        power = diagram.power(s, t) if 0 <= s < diagram.size and 0 <= t < diagram.size else None
        if power is None:
            raise AbsentTransition(f"interval {i} uses a transition the diagram does not have", interval=i)
        total += instance.cost(i) * power
    return total


def validate(instance: Instance, schedule: Schedule) -> ValidationResult:
    diagram = instance.diagram
    h = instance.horizon
    off, proc = diagram.off_index, diagram.proc_index

    shape: List[Violation] = []
    if len(schedule.starts) != instance.n:
        shape.append(Violation(condition=0, message=f"{len(schedule.starts)} start times for {instance.n} jobs"))
    if len(schedule.omega) != h:
        shape.append(Violation(condition=0, message=f"omega has {len(schedule.omega)} labels, horizon is {h}"))
    unknown = tuple(
        i for i, (s, t) in enumerate(schedule.omega, start=1)
        if not (0 <= s < diagram.size and 0 <= t < diagram.size)
    )
    if unknown:
        shape.append(Violation(condition=0, message="labels reference unknown states", intervals=unknown))
    if shape:
        return ValidationResult(valid=False, violations=tuple(shape))

    violations: List[Violation] = []
    omega = schedule.omega

    for i in (1, h):
        if omega[i - 1] != (off, off):
            violations.append(Violation(condition=3, message=f"interval {i} must be (off, off)", intervals=(i,)))

    spans = []
    for j, (start, p) in enumerate(zip(schedule.starts, instance.jobs)):
        if start < 1 or start + p - 1 > h:
            violations.append(Violation(condition=2, message=f"job {j} runs outside the horizon", jobs=(j,)))
            spans.append(None)
            continue
        spans.append((start, start + p - 1))
        bad = tuple(i for i in range(start, start + p) if omega[i - 1] != (proc, proc))
        if bad:
            violations.append(
                Violation(condition=2, message=f"job {j} is processed outside the proc state", intervals=bad, jobs=(j,))
            )

    for a in range(instance.n):
        for b in range(a + 1, instance.n):
            if spans[a] is None or spans[b] is None:
                continue
            lo = max(spans[a][0], spans[b][0])
            hi = min(spans[a][1], spans[b][1])
            if lo <= hi:
                violations.append(
                    Violation(
                        condition=1,
                        message=f"jobs {a} and {b} overlap",
                        intervals=tuple(range(lo, hi + 1)),
                        jobs=(a, b),
                    )
                )

    violations.extend(_walk_violations(instance, schedule))

    if violations:
        return ValidationResult(valid=False, violations=tuple(violations))
    return ValidationResult(valid=True, tec=tec(instance, schedule))


def _walk_violations(instance: Instance, schedule: Schedule) -> List[Violation]:
    diagram = instance.diagram
    names = diagram.states
    closure = diagram.zero_closure()
    omega = schedule.omega
    h = instance.horizon
    found: List[Violation] = []
    state = diagram.off_index
    i = 1
    while i <= h:
        s, t = omega[i - 1]
        duration = diagram.time(s, t)
        if duration is None:
            found.append(Violation(condition=4, message=f"{names[s]}->{names[t]} is not a transition", intervals=(i,)))
            state, i = t, i + 1
            continue
        if duration == 0:
            found.append(
                Violation(condition=4, message=f"zero-duration {names[s]}->{names[t]} occupies an interval", intervals=(i,))
            )
            state, i = t, i + 1
            continue
        if s not in closure[state]:
            found.append(
                Violation(
                    condition=4,
                    message=f"{names[s]}->{names[t]} does not continue from state {names[state]}",
                    intervals=(i,),
                )
            )
        run = 1
        while run < duration and i + run <= h and omega[i + run - 1] == (s, t):
            run += 1
        if run < duration:
            found.append(
                Violation(
                    condition=4,
                    message=f"{names[s]}->{names[t]} lasts {duration} intervals, found {run}",
                    intervals=tuple(range(i, i + run)),
                )
            )
        state, i = t, i + run
    return found


def processing_window(instance: Instance, graph: Optional[IntervalStateGraph] = None) -> ProcessingWindow:
    """Earliest interval the machine can be processing, and the latest after which it can still switch off."""
    graph = graph or build_graph(instance, CostModel(instance))
    diagram = instance.diagram
    off, proc = diagram.off_index, diagram.proc_index
    h = instance.horizon
    forward = graph.reachable_from((2, off))
    backward = graph.reaching((h, off))
    firsts = [i for (i, s) in forward if s == proc and 2 <= i <= h - 1]
    lasts = [i - 1 for (i, s) in backward if s == proc and 3 <= i <= h]
    if not firsts or not lasts:
        raise NoProcessingWindow("the machine can never process within the horizon")
    window = ProcessingWindow(h_first=min(firsts), h_last=max(lasts))
    if window.is_empty:
        raise NoProcessingWindow(
            f"empty processing window ({window.h_first}, {window.h_last})",
            h_first=window.h_first,
            h_last=window.h_last,
        )
    return window


def fits_window(instance: Instance, window: ProcessingWindow) -> bool:
    return instance.total_processing <= window.size
