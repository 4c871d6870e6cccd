import logging
from fractions import Fraction
from math import ceil
from typing import Iterable, Sequence
import numpy as np
from chainscale.controllers.BaseController import BaseController
from chainscale.errors import ConfigurationError, DimensionError
from chainscale.models import (
    CostReport, DemandVector, Placement, Scenario, ServiceChain, TraceSeries, VnfType, as_fraction
)

logger = logging.getLogger(__name__)


def cumulative_gains(chain: ServiceChain) -> list[Fraction]:
    """Rate factor at each stage of a chain; the first stage sees the raw input."""

    return list(chain.cum_gains)


def demand(chains: Sequence[ServiceChain], rates: Iterable, types: Sequence[VnfType]) -> DemandVector:
    """Minimal instance count of every VNF type for one slot.

    Parameters
    ----------
    chains: Sequence[ServiceChain]
        The chains, row s of ``rates`` belongs to ``chains[s]``
    rates: Iterable
        Input rate of every chain in Mbps
    types: Sequence[VnfType]
        All VNF types ordered by id

    Returns
    -------
    DemandVector
        ceil(sum over chains of cumulative gain * rate / capacity) per type
    """

    rates = [as_fraction(r.item() if isinstance(r, np.generic) else r) for r in rates]

    if len(rates) != len(chains):
        raise DimensionError(f"Got {len(rates)} rates for {len(chains)} chains.")

    inbound = [Fraction(0)] * len(types)

    for chain, rate in zip(chains, rates):

        if rate < 0:
            raise ValueError(f"Chain {chain.id} has a negative input rate.")

        for stage, factor in zip(chain.stages, chain.cum_gains):

            if not 1 <= stage <= len(types):
                raise ConfigurationError(f"Chain {chain.id} references unknown VNF type {stage}.")

            inbound[stage - 1] += factor * rate

    counts = [ceil(load / vnf.capacity_mbps) for load, vnf in zip(inbound, types)]

    return np.asarray(counts, dtype=np.int64)


def demand_series(scenario: Scenario, trace: TraceSeries) -> np.ndarray:
    """T x I matrix of instance demands, one row per slot."""

    if trace.num_chains != scenario.num_chains:
        raise DimensionError(
            f"The trace has {trace.num_chains} chains, the scenario {scenario.num_chains}."
        )

    series = np.zeros((trace.horizon, scenario.num_types), dtype=np.int64)
    cache: dict[tuple, DemandVector] = {}

    for t in range(trace.horizon):
        column = tuple(float(r) for r in trace.column(t))

        if column not in cache:
            cache[column] = demand(scenario.chains, column, scenario.types)

        series[t] = cache[column]

    return series


def slot_cost(x_t: Placement, x_prev: Placement, types: Sequence[VnfType]) -> tuple[Fraction, Fraction]:
    """Operational and deployment cost of moving from ``x_prev`` to ``x_t``.

    Deployment charges every instance launched on a server, so an instance
    moved between servers is paid again even if the type total is unchanged.
    """

    if x_t.shape != x_prev.shape:
        raise DimensionError(f"Placements {x_t.shape} and {x_prev.shape} differ in shape.")

    if x_t.num_types != len(types):
        raise DimensionError(f"The placement has {x_t.num_types} types, expected {len(types)}.")

    running = x_t.totals()
    launched = np.maximum(x_t.matrix - x_prev.matrix, 0).sum(axis=0)

    operational = sum((vnf.op_cost * int(k) for vnf, k in zip(types, running)), Fraction(0))
    deployment = sum((vnf.deploy_cost * int(k) for vnf, k in zip(types, launched)), Fraction(0))

    return operational, deployment


def check_capacity(x: Placement, scenario: Scenario) -> bool:
    """True iff no server exceeds its capacity in any resource."""

    if x.num_types != scenario.num_types:
        raise DimensionError(f"The placement has {x.num_types} types, expected {scenario.num_types}.")

    load = x.matrix @ scenario.demand_matrix

    return bool(np.all(load <= scenario.capacity_vector))


def check_coverage(x: Placement, n: DemandVector) -> bool:

    n = np.asarray(n)

    if n.shape != (x.num_types,):
        raise DimensionError(f"Demand of shape {n.shape} against {x.num_types} types.")

    return bool(np.all(x.totals() >= n))


def accumulate_costs(trajectory: Sequence[Placement], types: Sequence[VnfType]) -> CostReport:
    """Replays slot_cost over a trajectory starting from the empty placement."""

    report = CostReport()

    if not trajectory:
        return report

    prev = Placement.zeros(*trajectory[0].shape)

    for x in trajectory:
        report.add(*slot_cost(x, prev, types))
        prev = x

    return report


def aggregate_deployment(x_t: Placement, x_prev: Placement) -> np.ndarray:
    """Positive part of the change in every type's total, per type."""

    return np.maximum(x_t.totals() - x_prev.totals(), 0)


class DemandController(BaseController):
    """Demand Controller

    Binds the demand and accounting functions to one scenario.

    Methods
    -------
    demand(rates)
        Instance demand of one slot
    series(trace)
        Instance demand of every slot of a trace
    slot_cost(x_t, x_prev)
        Operational and deployment cost of one slot
    check_capacity(x)
        Whether every server respects its capacity
    check_coverage(x, n)
        Whether the placement provides at least n instances
    accumulate(trajectory)
        CostReport of a placement trajectory
    """

    def demand(self, rates: Iterable) -> DemandVector:
        return demand(self.scenario.chains, rates, self.scenario.types)

    def series(self, trace: TraceSeries) -> np.ndarray:
        series = demand_series(self.scenario, trace)
        self._logger.debug(f"Demand series over {trace.horizon} slots, peak {series.max(axis=0).tolist()}")

        return series

    def slot_cost(self, x_t: Placement, x_prev: Placement) -> tuple[Fraction, Fraction]:
        return slot_cost(x_t, x_prev, self.scenario.types)

    def check_capacity(self, x: Placement) -> bool:
        return check_capacity(x, self.scenario)

    def check_coverage(self, x: Placement, n: DemandVector) -> bool:
        return check_coverage(x, n)

    def accumulate(self, trajectory: Sequence[Placement]) -> CostReport:
        return accumulate_costs(trajectory, self.scenario.types)
