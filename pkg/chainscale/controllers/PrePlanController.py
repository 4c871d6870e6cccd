import json
import logging
from math import ceil
from pathlib import Path
from typing import Callable, Optional
from chainscale.controllers.BaseController import BaseController
from chainscale.controllers.BinPackController import pack
from chainscale.controllers.DemandController import check_capacity, check_coverage, demand
from chainscale.errors import ConfigurationError
from chainscale.models import DemandVector, Packing, Placement, PrePlan, Scenario, ServiceChain

logger = logging.getLogger(__name__)

PackFunction = Callable[[DemandVector, bool], Optional[Packing]]


def default_rate_bound(chain: ServiceChain, scenario: Scenario, factor: int = 10) -> int:
    """Heuristic MAXRATE: ``factor`` times the rate every server filled with
    one stage type could absorb, summed over the stages."""

    bound = 0
    best_capacity = max(scenario.vnf(stage).capacity_mbps for stage in chain.stages)

    for stage in chain.stages:
        vnf = scenario.vnf(stage)
        per_server = min(
            cap / d for cap, d in zip(scenario.cluster.capacity, vnf.demand) if d > 0
        )
        bound += scenario.num_servers * per_server

    return max(1, ceil(factor * bound * best_capacity))


def preplan(
        chain: ServiceChain, scenario: Scenario, max_rate_bound: Optional[int] = None,
        rate_unit: int = 1, pack_fn: Optional[PackFunction] = None, bound_factor: int = 10
) -> PrePlan:
    """Bisection for the largest supportable input rate of one chain.

    Rates are searched in steps of ``rate_unit`` Mbps. The lower end of the
    search interval is always packable and the upper end never is, until
    they are one step apart.

    Parameters
    ----------
    chain: ServiceChain
        The chain to plan for; other chains of the scenario are ignored
    scenario: Scenario
        Types and cluster
    max_rate_bound: int | None
        Upper end of the search in Mbps; defaults to default_rate_bound
    rate_unit: int
        Granularity of the search in Mbps
    pack_fn: callable | None
        ``pack_fn(n, minimize)``, defaults to binpack.pack on the scenario

    Returns
    -------
    PrePlan
        alpha_max, the MAX placement and the per-type server multisets
    """

    if rate_unit < 1:
        raise ValueError("The rate unit must be at least 1 Mbps.")

    if max_rate_bound is None:
        max_rate_bound = default_rate_bound(chain, scenario, bound_factor)

    if max_rate_bound < 1:
        raise ValueError("The maximum rate bound must be at least 1 Mbps.")

    if pack_fn is None:
        def pack_fn(n, minimize):
            return pack(n, scenario, minimize=minimize)

    def demand_at(units: int) -> DemandVector:
        return demand([chain], [units * rate_unit], scenario.types)

    def feasible(units: int) -> bool:
        return pack_fn(demand_at(units), False) is not None

    low, high = 0, max_rate_bound // rate_unit
    saturated = False

    if feasible(high):
        saturated = True
        low = high
        logger.warning(
            f"Chain {chain.id}: the bound {high * rate_unit} Mbps is itself feasible; "
            f"raise the maximum rate bound."
        )
    else:

        while high - low > 1:
            middle = (low + high) // 2

            if feasible(middle):
                low = middle
            else:
                high = middle

    alpha_max = low * rate_unit
    n_max = demand_at(low)
    packing = pack_fn(n_max, True)
    placement = packing.to_placement(scenario.num_servers)

    if not (check_capacity(placement, scenario) and check_coverage(placement, n_max)):
        raise AssertionError("The MAX placement violates capacity or coverage.")

    logger.info(
        f"Chain {chain.id}: alpha_max {alpha_max} Mbps, demand {n_max.tolist()}, "
        f"{packing.servers} of {scenario.num_servers} servers"
    )

    return PrePlan.from_placement(
        alpha_max, placement, list(chain.stages), saturated=saturated, rate_unit=rate_unit
    )


class PrePlanController(BaseController):
    """Pre-plan Controller

    Computes the MAX placement of a chain and caches it as JSON.

    Methods
    -------
    preplan(chain_id=1, max_rate_bound=None, rate_unit=None)
        Runs the bisection
    save(plan, path)
        Writes the plan as JSON
    load(path)
        Reads a plan written by save and checks it against the scenario
    """

    def __init__(self, scenario: Scenario, settings, binpack=None):

        super().__init__(scenario, settings)

        self._binpack = binpack
        self._rate_unit = settings.getint("preplan", "rate_unit_mbps")
        self._bound_factor = settings.getint("preplan", "bound_factor")

    def preplan(
            self, chain_id: int = 1, max_rate_bound: Optional[int] = None,
            rate_unit: Optional[int] = None
    ) -> PrePlan:

        chain = self.scenario.chain(chain_id)
        pack_fn = self._binpack.pack if self._binpack is not None else None

        return preplan(
            chain, self.scenario, max_rate_bound=max_rate_bound,
            rate_unit=rate_unit or self._rate_unit, pack_fn=pack_fn,
            bound_factor=self._bound_factor
        )

    def save(self, plan: PrePlan, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        with open(path, "w") as file:
            json.dump(plan.serialize(), file)

        self._logger.info(f"Pre-plan written to {path}")

        return path

    def load(self, path: str | Path) -> PrePlan:

        try:
            with open(path, "r") as file:
                plan = PrePlan.unserialize(json.load(file))

        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read pre-plan {path}: {e}") from e

        if plan.max_placement.shape != (self.scenario.num_servers, self.scenario.num_types):
            raise ConfigurationError(
                f"The pre-plan {path} was computed for a different cluster or type set."
            )

        if not check_capacity(plan.max_placement, self.scenario):
            raise ConfigurationError(f"The pre-plan {path} does not fit this cluster.")

        return plan
