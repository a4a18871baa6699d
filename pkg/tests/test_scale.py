"""Long benchmark checks; set RUN_SLOW=1 to run them."""
import os
from fractions import Fraction

import pytest

from models.schemas import GenSpec, SearchConfig, SolveStatus
from services.bench import aggregate, run_bench
from services.bnb import solve
from services.evaluation import validate
from services.instgen import PROC_TIME_GROUPS, generate

pytestmark = pytest.mark.skipif(os.getenv("RUN_SLOW") != "1", reason="set RUN_SLOW=1 for benchmark-size runs")


def test_150_jobs_are_solved_to_optimality():
    config = SearchConfig.from_settings(time_limit=60)
    solved = 0
    for seed in range(20):
        instance = generate(GenSpec(n=150, lam=Fraction(13, 10), seed=seed))
        result = solve(instance, config)
        if result.status is SolveStatus.OPTIMAL:
            solved += 1
            assert result.lb == result.ub
        if result.schedule is not None:
            assert validate(instance, result.schedule).tec == result.tec
    assert solved >= 18


def test_long_jobs_need_more_nodes_than_mixed_ones():
    config = SearchConfig.from_settings(time_limit=60)
    specs = [
        GenSpec(n=100, proc_time_set=PROC_TIME_GROUPS[group], seed=seed, instance_id=f"{group}-{seed:02d}")
        for group in ("8,9,10", "1,2,10")
        for seed in range(20)
    ]
    records = run_bench(specs, config, jobs=int(os.getenv("BENCH_JOBS", "1")))
    nodes = {}
    for record in records:
        nodes.setdefault(record.proc_time_set, []).append(record.nodes)
    mean = {key: sum(values) / len(values) for key, values in nodes.items()}
    assert mean["{8,9,10}"] > mean["{1,2,10}"]
    table = aggregate(records)
    assert set(table["n"]) == {100}
