import json
from fractions import Fraction

import pandas as pd
import pytest

from core.errors import InfeasibleSequence, MalformedBehavior
from models.instance import Instance
from services.costs import CostModel
from services.switching import replay, spaces
from tests.factories import random_instance
from tests.oracle import enumerate_behaviors, floyd_warshall_sigma

OFF, PROC, IDLE = 0, 1, 2


def test_sigma_8_14_and_its_behavior(table):
    """Switch off after interval 8, stay off, switch back on for 14."""
    assert table.cost(8, 14) == 76
    assert table.behavior(8, 14) == (
        (PROC, OFF),
        (OFF, OFF),
        (OFF, OFF),
        (OFF, PROC),
        (OFF, PROC),
    )


def test_behaviors_replay_to_their_cost(example1, table):
    for i, j in table.defined_pairs():
        assert replay(table.behavior(i, j), i, j, example1) == table.cost(i, j)


def test_adjacent_anchors_cost_nothing(table):
    assert table.cost(7, 8) == 0
    assert table.behavior(7, 8) == ()


def test_undefined_pairs(table):
    # off -> proc takes two intervals, so processing cannot start before interval 4
    assert not table.is_defined(1, 3)
    assert table.cost(1, 3) is None
    assert table.behavior(1, 3) is None
    assert table.is_defined(1, 4)
    # the machine needs interval 19 to switch off before h = 20
    assert table.is_defined(18, 20)
    assert not table.is_defined(19, 20)


def test_floyd_warshall_agrees_on_example(example1, table):
    oracle = floyd_warshall_sigma(example1)
    assert oracle[(8, 14)] == 76
    assert oracle == {pair: table.cost(*pair) for pair in table.defined_pairs()}


def test_zero_costs_give_zero_sigma(example1_payload):
    payload = dict(example1_payload, costs=[0] * 20)
    table = spaces(Instance.model_validate(payload))
    pairs = list(table.defined_pairs())
    assert pairs
    assert all(table.cost(i, j) == 0 for i, j in pairs)


@pytest.mark.parametrize("seed", range(60))
def test_spaces_matches_floyd_warshall(seed):
    """Mixed-sign prices, three or four states: every defined pair agrees exactly."""
    instance = random_instance(1000 + seed, max_horizon=30, negative=seed % 2 == 0, standby=seed % 3 == 0)
    table = spaces(instance)
    expected = floyd_warshall_sigma(instance)
    assert table.algorithm == ("bellman-ford" if CostModel(instance).has_negative_costs else "dijkstra")
    assert {pair: table.cost(*pair) for pair in table.defined_pairs()} == expected


@pytest.mark.parametrize("seed", range(10))
def test_sigma_is_no_worse_than_any_explicit_behavior(seed):
    instance = random_instance(2000 + seed, max_horizon=10, negative=True)
    table = spaces(instance)
    h = instance.horizon
    for i in range(1, h):
        for j in range(i + 1, h + 1):
            if (i, j) == (1, h):
                # off to off with no processing is not a switching anchor
                assert not table.is_defined(i, j)
                continue
            costs = [replay(b, i, j, instance) for b in enumerate_behaviors(instance, i, j)]
            if not costs:
                assert not table.is_defined(i, j)
                continue
            assert table.cost(i, j) == min(costs)


def test_replay_rejects_broken_behaviors(example1):
    with pytest.raises(MalformedBehavior):
        replay(((PROC, OFF), (OFF, OFF)), 8, 14, example1)
    with pytest.raises(MalformedBehavior):
        # single (off, proc) label cannot tile a two-interval transition
        replay(((PROC, OFF), (OFF, OFF), (OFF, OFF), (OFF, OFF), (OFF, PROC)), 8, 14, example1)
    with pytest.raises(MalformedBehavior):
        replay(((PROC, OFF), (OFF, OFF), (OFF, OFF), (OFF, OFF), (OFF, OFF)), 8, 14, example1)


def test_stitch_rebuilds_the_example_schedule(example1, example1_schedule, table):
    omega = table.stitch([(7, 2), (14, 5)])
    assert omega == example1_schedule.omega


def test_stitch_rejects_unreachable_segment(table):
    with pytest.raises(InfeasibleSequence):
        table.stitch([(2, 1)])


def test_debug_dumps(table, tmp_path):
    table.dump_csv(tmp_path / "sigma.csv")
    table.dump_behaviors(tmp_path / "behaviors.json")
    frame = pd.read_csv(tmp_path / "sigma.csv")
    row = frame[(frame["i"] == 8) & (frame["i_prime"] == 14)]
    assert int(row["sigma_star"].iloc[0]) == 76
    behaviors = json.loads((tmp_path / "behaviors.json").read_text())
    assert behaviors["8,14"][0] == ["proc", "off"]


def test_rational_prices_stay_exact(example1_payload):
    payload = dict(example1_payload)
    payload["costs"] = ["1/3"] * 20
    instance = Instance.model_validate(payload)
    table = spaces(instance)
    # idling four intervals (power 2) beats switching off and on again (1 + 0 + 5 + 5)
    assert table.cost(8, 13) == Fraction(8, 3)
    assert table.behavior(8, 13) == ((IDLE, IDLE),) * 4


@pytest.mark.parametrize("seed", range(20))
def test_sigma_scales_with_prices(seed):
    instance = random_instance(5000 + seed, max_horizon=20, negative=seed % 2 == 0, standby=seed % 5 == 0)
    factor = Fraction(7, 2) if seed % 2 else Fraction(3)
    scaled = Instance(
        horizon=instance.horizon,
        costs=tuple(c * factor for c in instance.costs),
        jobs=instance.jobs,
        diagram=instance.diagram,
    )
    table, scaled_table = spaces(instance), spaces(scaled)
    pairs = list(table.defined_pairs())
    assert pairs == list(scaled_table.defined_pairs())
    for i, j in pairs:
        assert scaled_table.cost(i, j) == factor * table.cost(i, j)
