import numpy as np
import pytest
from chainscale import ChainScale
from chainscale.controllers.DemandController import check_capacity, slot_cost
from chainscale.controllers.MultiChainController import (
    deployment_weights, match_patterns, max_pattern_counts, run_multi_chain, step_msc
)
from chainscale.errors import ClusterOverloadedError, DimensionError
from chainscale.models import Pattern, Placement
from conftest import make_scenario


@pytest.fixture
def cores():
    return make_scenario(
        demands=[[4], [2], [8], [2]], capacity=[16], num_servers=4,
        op_costs=[4, 2, 8, 2], deploy_costs=[16, 8, 32, 8]
    )


def test_weights_charge_only_new_instances(cores):
    prev = Placement.from_rows([[2, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], 4)
    patterns = np.array([[2, 0, 1, 0], [4, 0, 0, 0]])
    weights = deployment_weights(prev, patterns, cores)

    assert weights[0].tolist() == [0, 64, 64, 64]
    assert weights[1].tolist() == [32, 64, 64, 64]


def test_matching_keeps_patterns_on_their_servers(cores):
    prev = Placement.from_rows([[0, 0, 2, 0], [4, 0, 0, 0], [0, 0, 0, 0], [0, 8, 0, 0]], 4)
    patterns = [Pattern((4, 0, 0, 0)), Pattern((0, 8, 0, 0)), Pattern((0, 0, 2, 0)), Pattern((0, 0, 0, 0))]
    x = match_patterns(prev, patterns, cores)

    assert x == prev
    assert slot_cost(x, prev, cores.types)[1] == 0


def test_matching_needs_one_pattern_per_server(cores):

    with pytest.raises(DimensionError):
        match_patterns(Placement.zeros(4, 4), [Pattern((0, 0, 0, 0))], cores)


def test_step_trims_to_the_demand(cores):
    n = np.array([3, 1, 1, 0])
    x, slack = step_msc(Placement.zeros(4, 4), n, cores, trim=True)

    assert x.totals().tolist() == n.tolist()
    assert check_capacity(x, cores)
    assert np.all(slack >= 0)


def test_untrimmed_step_keeps_the_packing(cores):
    n = np.array([3, 1, 1, 0])
    x, slack = step_msc(Placement.zeros(4, 4), n, cores)

    assert (x.totals() - n).tolist() == slack.tolist()


def test_default_settings_keep_the_packing(settings, small_three_chains):
    app = ChainScale(small_three_chains, settings)
    n = np.array([3, 1, 1, 1])
    packing = app("binpack").pack(n)
    x, slack = app("msc").step(Placement.zeros(small_three_chains.num_servers, 4), n)

    assert x.totals().tolist() == packing.totals().tolist()
    assert slack.tolist() == (packing.totals() - n).tolist()
    assert np.all(slack <= max_pattern_counts(packing, 4) - 1)


def test_ties_put_patterns_on_the_lowest_servers(cores):
    empty = Pattern((0, 0, 0, 0))
    x = match_patterns(Placement.zeros(4, 4), [empty, empty, Pattern((1, 0, 0, 0)), empty], cores)

    assert x.serialize()[0] == [1, 0, 0, 0]
    assert x.totals().tolist() == [1, 0, 0, 0]


def test_matching_grows_a_server_in_place():
    scenario = make_scenario(demands=[[1], [1]], capacity=[4], num_servers=2, deploy_costs=[3, 5])
    prev = Placement.from_rows([[2, 0], [0, 2]], 2)
    x = match_patterns(prev, [Pattern((2, 0)), Pattern((0, 3))], scenario)

    assert x.serialize() == [[2, 0], [0, 3]]
    assert slot_cost(x, prev, scenario.types)[1] == 5


def test_step_reports_overload(cores):

    with pytest.raises(ClusterOverloadedError):
        step_msc(Placement.zeros(4, 4), np.array([0, 0, 9, 0]), cores)


@pytest.mark.parametrize("trim, expected", [(False, [128, 0, 32, 32]), (True, [128, 0, 0, 32])])
def test_run_reuses_servers_across_slots(cores, trim, expected):
    series = np.array([[4, 0, 2, 0], [4, 0, 2, 0], [4, 0, 1, 0], [4, 0, 2, 0]])
    trajectory, slack = run_multi_chain(cores, series, trim=trim)
    prev = Placement.zeros(4, 4)
    deployed = []

    for x in trajectory:
        deployed.append(slot_cost(x, prev, cores.types)[1])
        prev = x

    assert deployed == expected
    assert slack.shape == (4, 4)


def test_run_marks_the_overloaded_slot(cores):
    series = np.array([[1, 0, 0, 0], [0, 0, 9, 0]])

    with pytest.raises(ClusterOverloadedError) as error:
        run_multi_chain(cores, series)

    assert error.value.slot == 2


def test_controller_shares_the_packing_cache(settings, cores):
    app = ChainScale(cores, settings)
    series = np.array([[1, 1, 1, 1], [1, 1, 1, 1]])
    trajectory, _ = app("msc").run(series)

    assert trajectory[0] == trajectory[1]
    assert app("binpack").pack(np.array([1, 1, 1, 1])) is not None
