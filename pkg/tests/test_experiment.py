import csv
import json
from fractions import Fraction
import numpy as np
import pytest
from sqlalchemy import create_engine, select
from sqlalchemy.orm import Session
from chainscale import ChainScale
from chainscale.controllers.DemandController import demand_series
from chainscale.controllers.ExperimentController import (
    RunJob, caching_pack, check_slot, competitive_ratio, cost_saving, execute_run, myopic_baseline,
    static_baseline, static_trajectory
)
from chainscale.controllers.TraceController import write_trace
from chainscale.errors import ConfigurationError, InvariantViolation
from chainscale.models import ExperimentSpec, Placement, RunRecord, SyntheticTraceParams, TraceSeries
from conftest import SCENARIOS, make_scenario

SMALL = SCENARIOS / "three_chains_small.json"


def spec(algorithm, out=None, seeds=(0,), **kwargs):
    return ExperimentSpec(
        config_path=SMALL, algorithm=algorithm, seeds=seeds, output_path=out,
        synthetic=SyntheticTraceParams(horizon=48, peak_mbps=15000.0, pmr=3.0, seed=1),
        rate_unit=100, **kwargs
    )


def test_ratio_helpers():
    assert cost_saving(30.0, 100.0) == pytest.approx(0.7)
    assert competitive_ratio(12.0, 8.0) == pytest.approx(1.5)
    assert competitive_ratio(0.0, 0.0) == 1.0

    with pytest.raises(ValueError):
        cost_saving(1.0, 0.0)

    with pytest.raises(ValueError):
        competitive_ratio(1.0, 0.0)


def test_static_baseline_holds_the_peak(small_three_chains):
    trace = TraceSeries(np.array([[900.0, 1800.0, 900.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    trajectory = static_trajectory(trace, small_three_chains)

    assert len(trajectory) == 3
    assert trajectory[0] is trajectory[2]
    assert trajectory[0].totals().tolist() == [2, 2, 0, 0]

    # deployed once, operated every slot
    assert static_baseline(trace, small_three_chains).total == 3 * (2 * 4 + 2 * 2) + 2 * 16 + 2 * 8


def test_myopic_tracks_the_demand(small_three_chains):
    trace = TraceSeries(np.array([[900.0, 1800.0, 900.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    report = myopic_baseline(trace, small_three_chains, trim=True)

    assert report.operational == (4 + 2) + (8 + 4) + (4 + 2)
    assert report.deployment == (16 + 8) + (16 + 8)


def test_check_slot_names_the_broken_invariant(small_three_chains):
    prev = Placement.from_rows([[1, 0, 0, 0], [0, 0, 0, 0]] + [[0, 0, 0, 0]] * 48, 4)
    moved = Placement.from_rows([[0, 0, 0, 0], [1, 0, 0, 0]] + [[0, 0, 0, 0]] * 48, 4)
    n = np.array([1, 0, 0, 0])

    assert check_slot(prev, prev, n, small_three_chains, True) is None
    assert check_slot(prev, moved, n, small_three_chains, True) == "migration"
    assert check_slot(prev, moved, n, small_three_chains, False) is None
    assert check_slot(prev, prev, np.array([2, 0, 0, 0]), small_three_chains, True) == "coverage"
    assert check_slot(prev, Placement.zeros(2, 4), n, small_three_chains, True) == "shape"


def test_overload_stops_the_run():
    scenario = make_scenario(demands=[[1]], capacity=[1], num_servers=2)
    series = np.array([[1], [2], [3], [1]])
    result = execute_run(RunJob(algorithm="myopic", seed=0, scenario=scenario, series=series))

    assert not result.completed
    assert result.violations[0].slot == 3
    assert result.violations[0].kind == "cluster_overloaded"
    assert len(result.cost) == 2


def test_offline_lower_bound_run(vignette_scenario, vignette_series):
    result = execute_run(RunJob(algorithm="offline_lb", seed=0, scenario=vignette_scenario, series=vignette_series))

    assert result.cost.total == 158
    assert result.instances.tolist() == [[1, 7], [2, 7], [1, 7]]


def test_results_below_the_lower_bound_are_rejected(vignette_scenario, vignette_series):
    job = RunJob(
        algorithm="offline_lb", seed=0, scenario=vignette_scenario, series=vignette_series, lower_bound=1000.0
    )

    with pytest.raises(InvariantViolation):
        execute_run(job)


def test_exhaustive_run_without_a_feasible_trajectory(vignette_scenario):
    result = execute_run(RunJob(
        algorithm="exhaustive", seed=0, scenario=vignette_scenario, series=np.array([[1, 0], [5, 0]])
    ))

    assert not result.completed
    assert result.violations[0].kind == "cluster_overloaded"


def test_prepare_restricts_single_chain_runs(settings):
    scenario, trace = ChainScale(settings=settings)("experiment").prepare(spec("ssc_online", chain_id=2))

    assert scenario.num_chains == 1
    assert scenario.chain(1).stages == (1, 3)
    assert trace.num_chains == 1


def test_prepare_applies_overrides(settings, tmp_path):
    trace = TraceSeries(np.array([[100.0, 300.0, 200.0, 400.0]] * 3))
    path = write_trace(trace, tmp_path / "trace.csv")
    scenario, loaded = ChainScale(settings=settings)("experiment").prepare(
        spec("msc_online", trace_path=path, cost_ratio=6.0, pmr=2.0)
    )

    assert scenario.max_cost_ratio == 6
    assert loaded.horizon == 4
    assert loaded.pmr == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize("algorithm", ["ssc_online", "msc_online", "static", "myopic", "offline_lb"])
def test_run_writes_every_output(settings, tmp_path, algorithm):
    results = ChainScale(settings=settings)("experiment").run(spec(algorithm, out=tmp_path, seeds=(0, 1)))

    assert [r.seed for r in results] == [0, 1]
    assert all(r.completed for r in results)
    assert all(r.competitive_ratio >= 1 - 1e-12 for r in results)

    report = json.loads((tmp_path / "report.json").read_text())
    assert report["algorithm"] == algorithm
    assert report["horizon"] == 48
    assert len(report["runs"]) == 2

    with open(tmp_path / f"{algorithm}_seed1.csv", newline="") as file:
        rows = list(csv.DictReader(file))

    assert len(rows) == 48
    assert list(rows[0])[:4] == ["slot", "op_cost", "deploy_cost", "total"]
    assert sum(float(row["total"]) for row in rows) == pytest.approx(float(results[1].cost.total))

    engine = create_engine(f"sqlite:///{tmp_path / 'runs.db'}")

    with Session(bind=engine) as session:
        records = session.scalars(select(RunRecord)).all()
        assert [record.algorithm for record in records] == [algorithm, algorithm]
        assert Fraction(records[0].total_exact) == results[0].cost.total

    engine.dispose()


def test_msc_costs_match_the_replayed_trajectory(settings, small_three_chains):
    app = ChainScale(small_three_chains, settings)
    trace = app("trace").synthesize(SyntheticTraceParams(horizon=24, peak_mbps=15000.0, pmr=3.0, seed=2))
    series = demand_series(small_three_chains, trace)
    trajectory, slack = app("msc").run(series)

    result = execute_run(RunJob(algorithm="msc_online", seed=0, scenario=small_three_chains, series=series))

    assert result.cost.total == app("demand").accumulate(trajectory).total
    assert np.array_equal(result.slack, slack)


def test_run_record_validation():

    with pytest.raises(ValueError):
        RunRecord(algorithm="greedy")

    with pytest.raises(ValueError):
        RunRecord(digest="abc")


def test_cached_preplan_gives_the_same_runs(settings, tmp_path):
    controller = ChainScale(settings=settings)("experiment")
    scenario, _ = controller.prepare(spec("ssc_online"))
    plan = controller.single_chain_plan(spec("ssc_online"), scenario)
    path = ChainScale(scenario, settings)("preplan").save(plan, tmp_path / "chain1.json")

    fresh = controller.run(spec("ssc_online", seeds=(0, 1)))
    cached = controller.run(spec("ssc_online", seeds=(0, 1), preplan_path=path))

    assert [r.digest for r in cached] == [r.digest for r in fresh]
    assert [r.cost.total for r in cached] == [r.cost.total for r in fresh]


def test_cached_preplan_of_another_chain_is_rejected(settings, tmp_path):
    controller = ChainScale(settings=settings)("experiment")
    scenario, _ = controller.prepare(spec("ssc_online", chain_id=2))
    plan = controller.single_chain_plan(spec("ssc_online", chain_id=2), scenario)
    path = ChainScale(scenario, settings)("preplan").save(plan, tmp_path / "chain2.json")

    with pytest.raises(ConfigurationError):
        controller.run(spec("ssc_online", chain_id=1, preplan_path=path))


def test_cached_preplan_needs_the_single_chain_algorithm(tmp_path):

    with pytest.raises(ValueError):
        spec("msc_online", preplan_path=tmp_path / "plan.json")


def test_caching_pack_is_bounded(small_three_chains):
    pack_fn = caching_pack(small_three_chains, max_patterns=100000, max_nodes=5000000, cache_size=2)

    for n in ([1, 0, 0, 0], [2, 0, 0, 0], [3, 0, 0, 0], [1, 0, 0, 0]):
        assert pack_fn(np.array(n)) is not None

    info = pack_fn.cache_info()
    assert info.maxsize == 2
    assert info.currsize == 2
    assert info.hits == 0
