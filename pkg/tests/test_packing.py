import numpy as np
import pytest

from core.errors import InfeasibleSequence, NoProcessingWindow
from services.bnb import reconstruct_schedule
from services.bounds import Block, extract_blocks
from services.evaluation import processing_window, validate
from services.packing import PackStatus, bin_find, bin_pack, branching_order, initial_upper_bound
from services.seqtec import fixed_sequence_tec
from services.switching import spaces
from tests.factories import random_instance
from tests.oracle import exhaustive_bin_find, exhaustive_pack

EXAMPLE_JOBS = (1, 2, 4)


def test_root_blocks_cannot_hold_the_jobs():
    result = bin_pack((3, 3, 1), EXAMPLE_JOBS)
    assert result.status is PackStatus.INFEASIBLE
    assert result.assignment is None


def test_blocks_of_the_second_branch_can():
    result = bin_pack((2, 5), EXAMPLE_JOBS)
    assert result.feasible
    assert result.assignment == ((1,), (2, 0))


def test_bin_pack_trivial_cases():
    assert bin_pack((3,), ()).feasible
    assert bin_pack((), (1,)).status is PackStatus.INFEASIBLE
    assert bin_pack((2, 2), (3,)).status is PackStatus.INFEASIBLE


def test_bin_pack_needs_search_beyond_first_fit():
    """FFD fills the first block with 5 and 4 and strands a 2; {5, 3, 2} + {4, 4, 2} fits."""
    jobs = (5, 4, 4, 3, 2, 2)
    result = bin_pack((10, 10), jobs)
    assert result.feasible
    for group in result.assignment:
        assert sum(jobs[j] for j in group) <= 10


def test_branching_order_is_decreasing_then_by_id():
    assert branching_order((2, 4, 2, 1, 4)) == [1, 4, 0, 2, 3]


def test_bin_pack_matches_exhaustive_search():
    rng = np.random.default_rng(11)
    for _ in range(300):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 10))
        jobs = [int(p) for p in rng.integers(1, 6, size=n)]
        caps = [int(c) for c in rng.integers(1, 12, size=k)]
        result = bin_pack(caps, jobs)
        assert result.status is not PackStatus.UNKNOWN
        assert result.feasible == exhaustive_pack(caps, jobs), (caps, jobs)
        if result.feasible:
            placed = sorted(j for group in result.assignment for j in group)
            assert placed == list(range(n))
            for capacity, group in zip(caps, result.assignment):
                assert sum(jobs[j] for j in group) <= capacity


def test_bin_find_on_the_root_blocks():
    result = bin_find((3, 3, 1), EXAMPLE_JOBS)
    assert result.z == 1
    assert result.sizes == (4, 3, 0)
    assert result.assignment == ((2,), (1, 0), ())
    assert result.optimal is True


def test_bin_find_matches_exhaustive_minimum():
    rng = np.random.default_rng(12)
    for _ in range(100):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(1, 9))
        jobs = [int(p) for p in rng.integers(1, 7, size=n)]
        blocks = [int(b) for b in rng.integers(0, 12, size=k)]
        result = bin_find(blocks, jobs)
        assert result.z == exhaustive_bin_find(blocks, jobs), (blocks, jobs)
        assert sum(result.sizes) == sum(jobs)


def test_bin_find_without_budget_left_still_answers():
    result = bin_find((3, 3, 1), EXAMPLE_JOBS, budget=0)
    assert sum(result.sizes) == 7
    assert result.z == 1


def test_bin_find_needs_blocks_and_jobs():
    with pytest.raises(ValueError):
        bin_find((), (1,))


def test_reconstruction_from_the_packing(example1, table):
    """Block 1 takes J2; block 2 runs J3 then J1."""
    blocks = (Block(7, 2), Block(14, 5))
    packed = bin_pack([b.length for b in blocks], example1.jobs)
    schedule = reconstruct_schedule(example1, table, blocks, packed.assignment)
    assert schedule.starts == (18, 7, 14)
    assert schedule.tec == 342
    assert validate(example1, schedule).valid


def test_initial_upper_bound_is_feasible(example1, table):
    root_blocks = (Block(4, 3), Block(9, 3), Block(14, 1))
    initial = initial_upper_bound(example1, table, root_blocks, processing_window(example1))
    assert initial.packing.sizes == (4, 3, 0)
    assert initial.ub >= 342
    check = validate(example1, initial.schedule)
    assert check.valid
    assert check.tec == initial.ub


@pytest.mark.parametrize("seed", range(100))
def test_reconstruction_of_random_packings(seed):
    """Blocks of a feasible schedule, repacked and shuffled inside each block, rebuild a valid schedule."""
    instance = random_instance(9000 + seed, max_jobs=6, negative=seed % 3 == 0)
    rng = np.random.default_rng(seed)
    sequence = tuple(int(j) for j in rng.permutation(instance.n))
    table = spaces(instance)
    try:
        source = fixed_sequence_tec(instance, table, sequence)
    except (NoProcessingWindow, InfeasibleSequence):
        pytest.skip("the drawn order has no feasible schedule")
    blocks = extract_blocks(source.schedule.omega, instance.diagram.proc_index)
    packed = bin_pack([b.length for b in blocks], instance.jobs)
    assert packed.status is PackStatus.FEASIBLE
    assignment = tuple(tuple(int(j) for j in rng.permutation(list(group))) for group in packed.assignment)

    schedule = reconstruct_schedule(instance, table, blocks, assignment)
    check = validate(instance, schedule)
    assert check.valid
    assert schedule.tec == check.tec
    for block, group in zip(blocks, assignment):
        start = block.start
        for job in group:
            assert schedule.starts[job] == start
            start += instance.jobs[job]
    if sum(b.length for b in blocks) == sum(instance.jobs):
        # every block is filled exactly, so the processing intervals are those of the source
        assert schedule.tec == source.tec
        assert extract_blocks(schedule.omega, instance.diagram.proc_index) == blocks
