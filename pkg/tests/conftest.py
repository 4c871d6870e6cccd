from pathlib import Path
from typing import Optional, Sequence
import numpy as np
import pytest
from chainscale import load_settings
from chainscale.controllers.PrePlanController import preplan
from chainscale.models import Cluster, Scenario, ServiceChain, VnfType

PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = PROJECT_ROOT / "scenarios"


def make_scenario(
        demands: Sequence[Sequence], capacity: Sequence, num_servers: int,
        op_costs: Optional[Sequence] = None, deploy_costs: Optional[Sequence] = None,
        capacity_mbps: Optional[Sequence] = None, chains: Optional[Sequence[tuple]] = None,
        name: str = "toy"
) -> Scenario:
    """Small scenario; ``chains`` holds (stages, gains) pairs, one single-stage chain per type by default."""

    count = len(demands)
    op_costs = op_costs or [1] * count
    deploy_costs = deploy_costs or [1] * count
    capacity_mbps = capacity_mbps or [1] * count
    chains = chains or [((i + 1,), (1,)) for i in range(count)]

    types = tuple(
        VnfType(id=i + 1, demand=tuple(demands[i]), capacity_mbps=capacity_mbps[i],
                op_cost=op_costs[i], deploy_cost=deploy_costs[i])
        for i in range(count)
    )
    services = tuple(
        ServiceChain(id=s + 1, stages=tuple(stages), gains=tuple(gains))
        for s, (stages, gains) in enumerate(chains)
    )

    return Scenario(
        types=types, chains=services,
        cluster=Cluster(num_servers=num_servers, capacity=tuple(capacity)), name=name
    )


@pytest.fixture
def settings():
    return load_settings(PROJECT_ROOT / "config.cfg")


@pytest.fixture(scope="session")
def evaluation_scenario() -> Scenario:
    """1000 servers of 16 cores, firewall -> IDS -> load balancer."""
    return Scenario.from_file(SCENARIOS / "single_chain.json")


@pytest.fixture(scope="session")
def small_three_chains() -> Scenario:
    return Scenario.from_file(SCENARIOS / "three_chains_small.json")


@pytest.fixture(scope="session")
def evaluation_preplan(evaluation_scenario):
    return preplan(evaluation_scenario.chain(1), evaluation_scenario, rate_unit=1000)


@pytest.fixture
def vignette_scenario() -> Scenario:
    """Two unit servers; type 1 takes half a server, type 2 a fifth."""

    return make_scenario(
        demands=[["0.5"], ["0.2"]], capacity=["1"], num_servers=2,
        op_costs=[5, 2], deploy_costs=[20, 8]
    )


@pytest.fixture
def vignette_series() -> np.ndarray:
    return np.array([[1, 7], [2, 4], [1, 7]], dtype=np.int64)


@pytest.fixture
def unit_chain():
    """One type filling a whole server, one Mbps per instance, on ``num_servers`` servers."""

    def build(num_servers: int, op_cost=1, deploy_cost=4) -> Scenario:
        return make_scenario(
            demands=[[1]], capacity=[1], num_servers=num_servers,
            op_costs=[op_cost], deploy_costs=[deploy_cost]
        )

    return build
