from fractions import Fraction

import numpy as np
import pytest

from core.errors import AbsentTransition, InfeasibleSequence, MalformedDiagram, NoProcessingWindow
from models.instance import Instance, Schedule, TransitionDiagram
from services.evaluation import fits_window, processing_window, tec, validate
from services.seqtec import fixed_sequence_tec
from services.switching import build_graph, spaces
from tests.factories import random_instance

OFF, PROC, IDLE = 0, 1, 2


def _flat(n_costs, cost=1, jobs=(1,), **diagram):
    payload = {
        "horizon": n_costs,
        "costs": [cost] * n_costs,
        "jobs": list(jobs),
    }
    payload.update(TransitionDiagram.nosby().to_payload())
    payload.update(diagram)
    return payload


def test_example_schedule_is_valid_with_tec_342(example1, example1_schedule):
    """The hand-built schedule passes all four conditions and costs 342."""
    result = validate(example1, example1_schedule)
    assert result.valid is True
    assert result.violations == ()
    assert result.tec == 342
    assert tec(example1, example1_schedule) == Fraction(342)


def test_tec_rejects_absent_transition(example1, example1_schedule):
    omega = list(example1_schedule.omega)
    omega[9] = (OFF, IDLE)
    with pytest.raises(AbsentTransition) as exc:
        tec(example1, Schedule(starts=example1_schedule.starts, omega=tuple(omega)))
    assert exc.value.interval == 10


def test_tec_length_mismatch(example1, example1_schedule):
    with pytest.raises(ValueError):
        tec(example1, Schedule(starts=example1_schedule.starts, omega=example1_schedule.omega[:-1]))


def test_overlapping_jobs_are_named(example1, example1_schedule):
    """Moving J1 onto J3 reports condition 1 with both jobs."""
    bad = Schedule(starts=(15, 7, 15), omega=example1_schedule.omega)
    result = validate(example1, bad)
    assert result.valid is False
    assert result.tec is None
    overlap = [v for v in result.violations if v.condition == 1]
    assert overlap and overlap[0].jobs == (0, 2)
    assert overlap[0].intervals == (15,)


def test_job_outside_proc_state(example1, example1_schedule):
    bad = Schedule(starts=(14, 9, 15), omega=example1_schedule.omega)
    result = validate(example1, bad)
    assert 2 in result.conditions
    cond2 = [v for v in result.violations if v.condition == 2][0]
    assert cond2.jobs == (1,)
    assert cond2.intervals == (9, 10)


def test_first_and_last_interval_must_be_off(example1, example1_schedule):
    omega = list(example1_schedule.omega)
    omega[0] = (OFF, PROC)
    result = validate(example1, Schedule(starts=example1_schedule.starts, omega=tuple(omega)))
    assert 3 in result.conditions
    assert any(v.intervals == (1,) for v in result.violations if v.condition == 3)


def test_short_transition_run_breaks_the_walk(example1, example1_schedule):
    """off->proc takes two intervals; a single (off, proc) label is condition 4."""
    omega = list(example1_schedule.omega)
    omega[4] = (OFF, OFF)
    result = validate(example1, Schedule(starts=example1_schedule.starts, omega=tuple(omega)))
    assert result.conditions == (4,)


def test_zero_duration_label_cannot_occupy_an_interval(example1, example1_schedule):
    omega = list(example1_schedule.omega)
    omega[8] = (PROC, IDLE)
    result = validate(example1, Schedule(starts=example1_schedule.starts, omega=tuple(omega)))
    assert 4 in result.conditions
    assert any("zero-duration" in v.message for v in result.violations)


def test_shape_errors_stop_validation(example1):
    result = validate(example1, Schedule(starts=(1, 2), omega=((OFF, OFF),) * 5))
    assert result.valid is False
    assert result.conditions == (0,)
    assert len(result.violations) == 2


def test_idle_between_jobs_is_a_valid_walk():
    """proc -> idle -> proc happens in zero time, idle intervals are (idle, idle)."""
    instance = Instance.model_validate(_flat(8, jobs=(1, 1)))
    omega = (
        (OFF, OFF), (OFF, PROC), (OFF, PROC), (PROC, PROC),
        (IDLE, IDLE), (PROC, PROC), (PROC, OFF), (OFF, OFF),
    )
    result = validate(instance, Schedule(starts=(4, 6), omega=omega))
    assert result.valid is True
    # 5 + 5 + 4 + 2 + 4 + 1
    assert result.tec == 21


def test_mutated_schedules_are_always_rejected(example1, example1_schedule):
    """Every single-field change of the tight example schedule breaks a condition."""
    rng = np.random.default_rng(7)
    size = example1.diagram.size
    for _ in range(1000):
        starts = list(example1_schedule.starts)
        omega = list(example1_schedule.omega)
        field = int(rng.integers(0, len(starts) + len(omega)))
        if field < len(starts):
            delta = int(rng.choice([-3, -2, -1, 1, 2, 3]))
            starts[field] += delta
        else:
            k = field - len(starts)
            choices = [(a, b) for a in range(size) for b in range(size) if (a, b) != omega[k]]
            omega[k] = choices[int(rng.integers(0, len(choices)))]
        result = validate(example1, Schedule(starts=tuple(starts), omega=tuple(omega)))
        assert result.valid is False
        assert result.violations
        assert all(v.message for v in result.violations)


def test_processing_window_example(example1):
    window = processing_window(example1)
    assert (window.h_first, window.h_last) == (4, 18)
    assert window.size == 15
    assert fits_window(example1, window)


def test_processing_window_single_interval():
    instance = Instance.model_validate(_flat(6))
    window = processing_window(instance)
    assert (window.h_first, window.h_last) == (4, 4)


def test_empty_processing_window_reports_bounds():
    payload = _flat(4, transition_time=[[1, 1, None], [1, 1, 0], [None, 0, 1]])
    instance = Instance.model_validate(payload)
    with pytest.raises(NoProcessingWindow) as exc:
        processing_window(instance)
    assert (exc.value.h_first, exc.value.h_last) == (3, 2)


def test_graph_vertex_count(example1):
    graph = build_graph(example1)
    assert graph.vertex_count == 59


def test_diagram_rejects_zero_time_switch_on():
    with pytest.raises(MalformedDiagram):
        TransitionDiagram(
            states=("off", "proc"),
            off="off",
            proc="proc",
            transition_time=((1, 0), (1, 1)),
            transition_power=((0, 1), (1, 1)),
        )


def test_diagram_rejects_half_defined_transition():
    with pytest.raises(MalformedDiagram):
        TransitionDiagram(
            states=("off", "proc"),
            off="off",
            proc="proc",
            transition_time=((1, 2), (1, 1)),
            transition_power=((0, None), (1, 1)),
        )


def test_instance_rejects_wrong_cost_count(example1_payload):
    payload = dict(example1_payload, costs=[1, 2, 3])
    with pytest.raises(ValueError):
        Instance.model_validate(payload)


def test_rational_costs_round_trip_as_strings(example1_payload):
    payload = dict(example1_payload)
    payload["costs"] = ["1/2"] + payload["costs"][1:]
    instance = Instance.model_validate(payload)
    assert instance.cost(1) == Fraction(1, 2)
    assert instance.to_payload()["costs"][0] == "1/2"


def _with_costs(instance, costs):
    return Instance(horizon=instance.horizon, costs=tuple(costs), jobs=instance.jobs, diagram=instance.diagram)


@pytest.mark.parametrize("seed", range(20))
def test_doubling_prices_doubles_tec(seed):
    instance = random_instance(6000 + seed, negative=seed % 2 == 0)
    try:
        found = fixed_sequence_tec(instance, spaces(instance), tuple(range(instance.n)))
    except (NoProcessingWindow, InfeasibleSequence):
        pytest.skip("the identity order has no feasible schedule")
    doubled = _with_costs(instance, (2 * c for c in instance.costs))
    assert tec(doubled, found.schedule) == 2 * tec(instance, found.schedule)
    assert fixed_sequence_tec(doubled, spaces(doubled), tuple(range(instance.n))).tec == 2 * found.tec


def _slower_switch_on(diagram: TransitionDiagram) -> TransitionDiagram:
    times = [list(row) for row in diagram.transition_time]
    times[diagram.off_index][diagram.proc_index] += 1
    return TransitionDiagram(
        states=diagram.states,
        off=diagram.off,
        proc=diagram.proc,
        transition_time=tuple(tuple(row) for row in times),
        transition_power=diagram.transition_power,
    )


def test_window_start_follows_switch_on_time():
    instance = Instance.model_validate(_flat(20))
    starts = []
    for _ in range(4):
        starts.append(processing_window(instance).h_first)
        instance = instance.with_diagram(_slower_switch_on(instance.diagram))
    assert starts == [4, 5, 6, 7]


@pytest.mark.parametrize("seed", range(30))
def test_slower_switch_on_never_starts_the_window_earlier(seed):
    instance = random_instance(7000 + seed, standby=seed % 3 == 0)
    try:
        before = processing_window(instance)
    except NoProcessingWindow:
        pytest.skip("no processing window")
    try:
        after = processing_window(instance.with_diagram(_slower_switch_on(instance.diagram)))
    except NoProcessingWindow:
        return
    assert after.h_first >= before.h_first
