from fractions import Fraction
import numpy as np
import pytest
from chainscale.errors import ConfigurationError, DimensionError, PreplanExceededError
from chainscale.models import (
    CostReport, ExperimentSpec, Packing, Pattern, Placement, PrePlan, Scenario, ServerMultiset,
    ServiceChain, TraceSeries, VnfType, as_fraction
)
from conftest import make_scenario


def test_as_fraction_reads_decimals_exactly():
    assert as_fraction(0.9) == Fraction(9, 10)
    assert as_fraction("0.8") == Fraction(4, 5)
    assert as_fraction(7) == Fraction(7)

    with pytest.raises(ValueError):
        as_fraction(True)


def test_vnf_type_delta():
    vnf = VnfType(id=1, demand=(4,), capacity_mbps=900, op_cost=4, deploy_cost=18)
    assert vnf.delta == 4
    assert vnf.with_costs(4, 2).delta == 1


@pytest.mark.parametrize("kwargs", [
    {"demand": (), "capacity_mbps": 1, "op_cost": 1, "deploy_cost": 1},
    {"demand": (0,), "capacity_mbps": 1, "op_cost": 1, "deploy_cost": 1},
    {"demand": (1,), "capacity_mbps": 0, "op_cost": 1, "deploy_cost": 1},
    {"demand": (1,), "capacity_mbps": 1, "op_cost": 0, "deploy_cost": 1},
    {"demand": (1,), "capacity_mbps": 1, "op_cost": 1, "deploy_cost": -1},
])
def test_vnf_type_rejects_invalid_values(kwargs):

    with pytest.raises(ValueError):
        VnfType(id=1, **kwargs)


def test_chain_cumulative_gains():
    chain = ServiceChain(id=1, stages=(1, 3, 4), gains=("0.9", "0.8", "1.0"))
    assert chain.cum_gains == (Fraction(1), Fraction(9, 10), Fraction(18, 25))

    with pytest.raises(ValueError):
        ServiceChain(id=1, stages=(1, 1), gains=(1, 1))


def test_scenario_scales_resources_to_integers(vignette_scenario):
    assert vignette_scenario.demand_matrix.tolist() == [[5], [2]]
    assert vignette_scenario.capacity_vector.tolist() == [10]


def test_scenario_validation():

    with pytest.raises(ConfigurationError):
        make_scenario(demands=[[2]], capacity=[1], num_servers=1)

    with pytest.raises(ConfigurationError):
        make_scenario(demands=[[1]], capacity=[1], num_servers=1, chains=[((2,), (1,))])

    with pytest.raises(ConfigurationError):
        Scenario.from_dict({"vnf_types": []})


def test_scenario_from_file(evaluation_scenario):
    assert evaluation_scenario.name == "single_chain"
    assert evaluation_scenario.num_servers == 1000
    assert [vnf.name for vnf in evaluation_scenario.types] == ["firewall", "nat", "ids", "load_balancer"]
    assert evaluation_scenario.max_cost_ratio == 4


def test_with_cost_ratio_keeps_operational_costs(evaluation_scenario):
    scaled = evaluation_scenario.with_cost_ratio(7)

    assert scaled.op_costs == evaluation_scenario.op_costs
    assert scaled.deploy_costs == tuple(7 * c for c in evaluation_scenario.op_costs)
    assert scaled.vnf(3).delta == 7


def test_trace_series_statistics():
    trace = TraceSeries(np.array([[1.0, 3.0], [2.0, 2.0]]))

    assert trace.horizon == 2
    assert trace.num_chains == 2
    assert trace.peak == 3.0
    assert trace.pmr == pytest.approx(1.5)

    with pytest.raises(ValueError):
        TraceSeries(np.array([[-1.0]]))


def test_placement_is_immutable_and_comparable():
    x = Placement.from_rows([[1, 0], [2, 1]], 2)

    assert x.totals().tolist() == [3, 1]
    assert x == Placement(np.array([[1, 0], [2, 1]]))
    assert not x.matrix.flags.writeable

    with pytest.raises(DimensionError):
        Placement(np.zeros(3))


def test_cost_report_totals_are_exact():
    report = CostReport()
    report.add(Fraction(1, 3), Fraction(2, 3))
    report.add(Fraction(1, 3), 0)

    assert report.totals == (Fraction(2, 3), Fraction(2, 3), Fraction(4, 3))
    assert report.rows()[0][0] == 1
    assert report.serialize()["exact"]["total"] == "4/3"


def test_packing_expands_onto_servers():
    packing = Packing(assignments=((Pattern((2, 0)), 2), (Pattern((0, 1)), 1)), num_types=2)

    assert packing.servers == 3
    assert packing.totals().tolist() == [4, 1]
    assert packing.to_placement(4).serialize() == [[2, 0], [2, 0], [0, 1], [0, 0]]

    with pytest.raises(ValueError):
        packing.expand(2)


def test_server_multiset_is_a_stack_bounded_by_its_start():
    multiset = ServerMultiset(1, [0, 0, 1, 2])

    assert multiset.eject(2) == [2, 1]
    multiset.insert([1])
    assert multiset.eject(1) == [1]

    with pytest.raises(ValueError):
        multiset.insert([0])

    with pytest.raises(PreplanExceededError):
        multiset.eject(3)


def test_preplan_serialization_round_trips_the_max_placement():
    plan = PrePlan.from_placement(4, Placement.from_rows([[2, 0], [1, 1]], 2), [1, 2])
    restored = PrePlan.unserialize(plan.serialize())

    assert restored.alpha_max == 4
    assert restored.max_placement == plan.max_placement
    assert restored.multisets[1].serialize() == [0, 0, 1]

    plan.multisets[1].eject(2)
    assert len(plan.multisets[1]) == 1
    assert len(plan.fresh().multisets[1]) == 3


def test_preplan_rejects_a_tampered_cache():
    data = PrePlan.from_placement(4, Placement.from_rows([[2], [1]], 1), [1]).serialize()
    data["multisets"]["1"] = [0, 0, 0]

    with pytest.raises(ValueError):
        PrePlan.unserialize(data)


def test_experiment_spec_validation(tmp_path):

    with pytest.raises(ValueError):
        ExperimentSpec(config_path=tmp_path, algorithm="greedy")

    with pytest.raises(ValueError):
        ExperimentSpec(config_path=tmp_path, algorithm="static", seeds=())

    with pytest.raises(ValueError):
        ExperimentSpec(config_path=tmp_path, algorithm="static", pmr=0.5)
