import json
import numpy as np
import pytest
from chainscale import ChainScale
from chainscale.controllers.BinPackController import pack
from chainscale.controllers.DemandController import demand
from chainscale.controllers.PrePlanController import default_rate_bound, preplan
from chainscale.errors import ConfigurationError, PreplanExceededError
from chainscale.models import ServerMultiset
from conftest import make_scenario


def test_alpha_max_of_a_unit_chain(unit_chain):
    scenario = unit_chain(2)
    plan = preplan(scenario.chain(1), scenario)

    assert plan.alpha_max == 2
    assert not plan.saturated
    assert plan.max_placement.serialize() == [[1], [1]]
    assert plan.multisets[1].serialize() == [0, 1]


def test_rate_unit_rounds_down_to_a_whole_step():
    scenario = make_scenario(demands=[[1]], capacity=[1], num_servers=2, capacity_mbps=[10])

    assert preplan(scenario.chain(1), scenario).alpha_max == 20
    assert preplan(scenario.chain(1), scenario, rate_unit=3).alpha_max == 18


def test_feasible_bound_is_flagged(unit_chain):
    scenario = unit_chain(4)
    plan = preplan(scenario.chain(1), scenario, max_rate_bound=3)

    assert plan.saturated
    assert plan.alpha_max == 3


def test_default_bound_is_infeasible(evaluation_scenario):
    chain = evaluation_scenario.chain(1)
    assert default_rate_bound(chain, evaluation_scenario) > 886000


def test_multisets_only_cover_chain_types(small_three_chains):
    plan = preplan(small_three_chains.chain(1), small_three_chains, rate_unit=100)

    assert sorted(plan.multisets) == [1, 2]
    assert plan.max_placement.totals()[2:].tolist() == [0, 0]
    assert len(plan.multisets[1]) == plan.max_placement.totals()[0]


def test_invalid_arguments(unit_chain):
    scenario = unit_chain(1)

    with pytest.raises(ValueError):
        preplan(scenario.chain(1), scenario, rate_unit=0)

    with pytest.raises(ValueError):
        preplan(scenario.chain(1), scenario, max_rate_bound=0)


def test_controller_caches_the_plan(settings, unit_chain, tmp_path):
    app = ChainScale(unit_chain(3), settings)
    plan = app("preplan").preplan()
    path = app("preplan").save(plan, tmp_path / "plans" / "unit.json")

    loaded = app("preplan").load(path)

    assert loaded.alpha_max == 3
    assert loaded.max_placement == plan.max_placement

    with pytest.raises(ConfigurationError):
        ChainScale(unit_chain(2), settings)("preplan").load(path)


def test_controller_rejects_unreadable_plans(settings, unit_chain, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")

    with pytest.raises(ConfigurationError):
        ChainScale(unit_chain(1), settings)("preplan").load(path)

    path.write_text(json.dumps({"alpha_max": 1}))

    with pytest.raises(ValueError):
        ChainScale(unit_chain(1), settings)("preplan").load(path)


def test_two_servers_of_two_instances_carry_400_mbps():
    scenario = make_scenario(demands=[[2]], capacity=[4], num_servers=2, capacity_mbps=[100])
    plan = preplan(scenario.chain(1), scenario)

    assert plan.alpha_max == 400
    assert plan.max_placement.serialize() == [[2], [2]]


@pytest.mark.parametrize("rate_unit", [1, 7])
def test_bisection_matches_a_linear_scan(rate_unit):
    scenario = make_scenario(
        demands=[[3], [5]], capacity=[16], num_servers=3, capacity_mbps=[40, 70],
        chains=[((1, 2), ("1", "0.5"))]
    )
    chain = scenario.chain(1)

    def fits(units):
        return pack(demand([chain], [units * rate_unit], scenario.types), scenario) is not None

    scanned = max(units for units in range(0, 600 // rate_unit) if fits(units)) * rate_unit

    assert preplan(chain, scenario, max_rate_bound=600, rate_unit=rate_unit).alpha_max == scanned


def test_multiset_behaves_like_a_stack():
    rng = np.random.default_rng(4)
    initial = rng.integers(0, 5, size=30).tolist()
    multiset = ServerMultiset(1, initial)
    reference = list(initial)
    out = []

    for _ in range(500):

        if out and rng.random() < 0.5:
            k = int(rng.integers(1, len(out) + 1))
            back, out = out[:k], out[k:]
            multiset.insert(back)
            reference.extend(back)
        else:
            k = int(rng.integers(0, len(reference) + 1))
            ejected = multiset.eject(k)
            expected = reference[len(reference) - k:][::-1]
            del reference[len(reference) - k:]

            assert ejected == expected
            out.extend(ejected)

        assert multiset.serialize() == reference
        assert all(multiset.as_counter()[s] <= multiset.initial[s] for s in set(initial))

    with pytest.raises(PreplanExceededError):
        multiset.eject(len(reference) + 1)
