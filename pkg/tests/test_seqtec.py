import math
from functools import reduce
from itertools import permutations

import numpy as np
import pytest

from core.errors import EmptyJoinStack, InfeasibleRelaxation, InfeasibleSequence, NoProcessingWindow
from models.instance import ProcessingWindow
from services.evaluation import processing_window, validate
from services.seqtec import LevelsArray, fixed_sequence_tec, join_levels, schedule_lengths, split_levels
from services.switching import spaces
from tests.factories import random_instance
from tests.oracle import brute_force_sequence_tec


@pytest.mark.parametrize("sequence, expected", [((0, 1, 2), 353), ((1, 0, 2), 342)])
def test_fixed_sequence_tec_example(example1, table, sequence, expected):
    result = fixed_sequence_tec(example1, table, sequence)
    assert result.tec == expected
    check = validate(example1, result.schedule)
    assert check.valid is True
    assert check.tec == expected


def test_fixed_sequence_matches_example_schedule(example1, table):
    result = fixed_sequence_tec(example1, table, (1, 0, 2))
    assert result.starts == (14, 7, 15)


def test_fixed_sequence_rejects_non_permutation(example1, table):
    with pytest.raises(ValueError):
        fixed_sequence_tec(example1, table, (0, 0, 2))


def test_lengths_too_long_for_the_window(example1, table):
    with pytest.raises(InfeasibleSequence):
        schedule_lengths(example1, table, [10, 6])


def test_levels_array_width_and_root_bound(example1, table):
    window = processing_window(example1)
    levels = LevelsArray(table, window, example1.jobs)
    assert levels.width == 18 - 4 + 2 - 7
    assert table.costs.to_rational(levels.bound(1)) == 339


def test_join_then_split_restores_the_bound(example1, table):
    window = processing_window(example1)
    levels = LevelsArray(table, window, example1.jobs)
    root = levels.bound(1)
    join_levels(levels, 2)
    join_levels(levels, 0)
    assert levels.fixed_jobs == (2, 0)
    assert levels.remaining_levels() == 2
    assert split_levels(levels) == 0
    assert split_levels(levels) == 2
    assert levels.fixed_jobs == ()
    assert levels.bound(1) == root
    with pytest.raises(EmptyJoinStack):
        levels.split()


def test_join_twice_is_rejected(example1, table):
    levels = LevelsArray(table, processing_window(example1), example1.jobs)
    levels.join(1)
    with pytest.raises(ValueError):
        levels.join(1)


def test_no_room_raises_infeasible_relaxation(example1, table):
    with pytest.raises(InfeasibleRelaxation):
        LevelsArray(table, ProcessingWindow(h_first=4, h_last=8), example1.jobs)


@pytest.mark.parametrize("seed", range(40))
def test_fixed_sequence_matches_brute_force(seed):
    """Every order of a small random instance costs what the explicit walk says."""
    instance = random_instance(3000 + seed, max_jobs=4, negative=seed % 4 == 0)
    try:
        window = processing_window(instance)
    except NoProcessingWindow:
        pytest.skip("no processing window")
    table = spaces(instance)
    for sequence in set(permutations(range(instance.n))):
        expected = brute_force_sequence_tec(instance, sequence)
        if expected is None:
            with pytest.raises(InfeasibleSequence):
                fixed_sequence_tec(instance, table, sequence, window)
            continue
        result = fixed_sequence_tec(instance, table, sequence, window)
        assert result.tec == expected.tec
        assert validate(instance, result.schedule).tec == expected.tec


def _levels_or_skip(instance):
    try:
        window = processing_window(instance)
        table = spaces(instance)
        return table, window, LevelsArray(table, window, instance.jobs)
    except (NoProcessingWindow, InfeasibleRelaxation):
        pytest.skip("jobs do not fit the processing window")


def _joined_rows(levels):
    return [levels.dp[q + levels.lengths[job]] for job, q in levels.joins]


@pytest.mark.parametrize("seed", range(100))
def test_join_split_walk_matches_a_fresh_array(seed):
    """After every join or split the DP rows equal those of an array built up from scratch."""
    instance = random_instance(4000 + seed, max_jobs=5, negative=seed % 3 == 0)
    table, window, levels = _levels_or_skip(instance)
    root = levels.bound(1)
    rng = np.random.default_rng(seed)
    for _ in range(3 * instance.n):
        remaining = levels.remaining_jobs()
        if levels.joins and (not remaining or rng.random() < 0.4):
            levels.split()
        else:
            levels.join(int(rng.choice(remaining)))
        fresh = LevelsArray(table, window, instance.jobs)
        for job in levels.fixed_jobs:
            fresh.join(job)
        for ours, theirs in zip(_joined_rows(levels), _joined_rows(fresh)):
            assert np.array_equal(ours, theirs)
        assert levels.bound(1) == fresh.bound(1)
        left = [instance.jobs[j] for j in levels.remaining_jobs()]
        if left:
            g = reduce(math.gcd, left)
            assert levels.bound(g) == fresh.bound(g)
    while levels.joins:
        levels.split()
    assert levels.bound(1) == root


@pytest.mark.parametrize("seed", range(25))
def test_relaxed_value_ignores_the_order_of_unit_levels(seed):
    instance = random_instance(4500 + seed, max_jobs=5, negative=seed % 2 == 0)
    table, window, levels = _levels_or_skip(instance)
    rng = np.random.default_rng(seed)
    shuffled = [instance.jobs[int(j)] for j in rng.permutation(instance.n)]
    other = LevelsArray(table, window, shuffled)
    assert other.bound(1) == levels.bound(1)
    g = reduce(math.gcd, instance.jobs)
    assert other.bound(g) == levels.bound(g)
