import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product
from math import lcm
from typing import Sequence
import numpy as np
from chainscale.controllers.BaseController import BaseController
from chainscale.controllers.DemandController import accumulate_costs
from chainscale.errors import ClusterOverloadedError, DimensionError, RoutingInfeasibleError, ScaleGuardError
from chainscale.models import Placement, Scenario, TraceSeries, VnfType

logger = logging.getLogger(__name__)


def _integer_costs(types: Sequence[VnfType]) -> tuple[int, np.ndarray, np.ndarray]:
    """Common scale and the scaled operational and deployment costs."""

    costs = [vnf.op_cost for vnf in types] + [vnf.deploy_cost for vnf in types]
    scale = lcm(*(c.denominator for c in costs))
    op = np.asarray([int(vnf.op_cost * scale) for vnf in types], dtype=np.int64)
    deploy = np.asarray([int(vnf.deploy_cost * scale) for vnf in types], dtype=np.int64)

    return scale, op, deploy


def schedule_cost(schedule: np.ndarray, vnf: VnfType) -> Fraction:
    """Cost of holding ``schedule[t]`` instances of one type from a cold start."""

    schedule = np.asarray(schedule, dtype=np.int64)
    launched = np.maximum(np.diff(schedule, prepend=0), 0)

    return vnf.op_cost * int(schedule.sum()) + vnf.deploy_cost * int(launched.sum())


def offline_type_schedule(series: Sequence[int], vnf: VnfType) -> tuple[np.ndarray, Fraction]:
    """Offline optimum of one type with the per-server constraints dropped.

    Every instance level k is needed in the slots where the demand reaches
    k. Between two such slots a level stays deployed iff holding it through
    the g idle slots costs no more than redeploying it, g * op <= deploy.

    Parameters
    ----------
    series: Sequence[int]
        Demand n(t) for t = 1..T
    vnf: VnfType
        The type's costs

    Returns
    -------
    tuple[np.ndarray, Fraction]
        The instance count of every slot and its cost
    """

    series = np.asarray(series, dtype=np.int64)

    if series.ndim != 1 or len(series) < 1:
        raise ValueError("An offline schedule needs a demand series of at least one slot.")

    schedule = np.zeros(len(series), dtype=np.int64)

    for level in range(1, int(series.max(initial=0)) + 1):
        needed = np.flatnonzero(series >= level)
        schedule[needed] += 1

        for start, stop in zip(needed[:-1], needed[1:]):
            gap = int(stop - start - 1)

            if gap > 0 and gap * vnf.op_cost <= vnf.deploy_cost:
                schedule[start + 1:stop] += 1

    return schedule, schedule_cost(schedule, vnf)


def dp_type_schedule(series: Sequence[int], vnf: VnfType) -> tuple[np.ndarray, Fraction]:
    """Dynamic program over (slot, instance count); reference for offline_type_schedule."""

    series = np.asarray(series, dtype=np.int64)

    if series.ndim != 1 or len(series) < 1:
        raise ValueError("An offline schedule needs a demand series of at least one slot.")

    scale, op, deploy = _integer_costs([vnf])
    op, deploy = int(op[0]), int(deploy[0])
    levels = np.arange(int(series.max()) + 1)
    # transition[y, x]: deploy cost of going from y to x instances
    transition = deploy * np.maximum(levels[None, :] - levels[:, None], 0)
    infinite = np.iinfo(np.int64).max // 4

    cost = np.where(levels >= series[0], op * levels + deploy * levels, infinite)
    parents = []

    for n in series[1:]:
        total = cost[:, None] + transition
        parent = np.argmin(total, axis=0)
        cost = total[parent, levels] + op * levels
        cost = np.where(levels >= n, cost, infinite)
        parents.append(parent)

    schedule = np.zeros(len(series), dtype=np.int64)
    schedule[-1] = int(np.argmin(cost))
    best = int(cost[schedule[-1]])

    for t in range(len(series) - 1, 0, -1):
        schedule[t - 1] = parents[t - 1][schedule[t]]

    return schedule, Fraction(best, scale)


def offline_schedules(series: np.ndarray, scenario: Scenario) -> np.ndarray:
    """T x I matrix of per-type offline schedules."""

    series = np.asarray(series, dtype=np.int64)

    if series.ndim != 2 or series.shape[1] != scenario.num_types:
        raise DimensionError(f"Demand series of shape {series.shape} for {scenario.num_types} types.")

    schedules = np.zeros_like(series)

    for vnf in scenario.types:
        schedules[:, vnf.id - 1], _ = offline_type_schedule(series[:, vnf.id - 1], vnf)

    return schedules


def offline_lower_bound(series: np.ndarray, scenario: Scenario) -> Fraction:
    """Sum of the per-type offline optima, a lower bound on any placement trajectory."""

    series = np.asarray(series, dtype=np.int64)

    if series.ndim != 2 or series.shape[1] != scenario.num_types:
        raise DimensionError(f"Demand series of shape {series.shape} for {scenario.num_types} types.")

    if len(series) == 0:
        return Fraction(0)

    return sum(
        (offline_type_schedule(series[:, vnf.id - 1], vnf)[1] for vnf in scenario.types),
        Fraction(0)
    )


def exhaustive_offline(
        series: np.ndarray, scenario: Scenario, max_servers: int = 3, max_slots: int = 6,
        max_instances: int = 6, max_states: int = 20000
) -> tuple[list[Placement], Fraction]:
    """Exact offline optimum over all per-server placements, at toy scale.

    States are the covering placements of every slot up to server
    permutation, each kept as a sorted tuple of server rows. Moving between
    two states costs the cheapest deployment over all server permutations.
    A layered shortest path gives the optimum; the trajectory is rebuilt on
    concrete servers afterwards.

    Parameters
    ----------
    series: np.ndarray
        T x I demand
    scenario: Scenario
        Types and cluster
    max_servers, max_slots, max_instances: int
        Scale guard on U, T and the largest per-slot instance total
    max_states: int
        Scale guard on the covering placements of any slot

    Returns
    -------
    tuple[list[Placement], Fraction]
        An optimal trajectory and its cost
    """

    series = np.asarray(series, dtype=np.int64)
    num_servers, num_types = scenario.num_servers, scenario.num_types

    if series.ndim != 2 or series.shape[1] != num_types:
        raise DimensionError(f"Demand series of shape {series.shape} for {num_types} types.")

    horizon = len(series)

    if num_servers > max_servers or horizon > max_slots or int(series.sum(axis=1).max(initial=0)) > max_instances:
        raise ScaleGuardError(
            f"The exhaustive oracle handles at most {max_servers} servers, {max_slots} slots "
            f"and {max_instances} instances per slot; got {num_servers}, {horizon} and "
            f"{int(series.sum(axis=1).max(initial=0))}."
        )

    if horizon == 0:
        return [], Fraction(0)

    if num_servers == 0:

        if series.any():
            raise ClusterOverloadedError("Cluster overloaded: there are no servers.", slot=1)

        return [Placement.zeros(0, num_types)] * horizon, Fraction(0)

    # no server ever needs more instances of a type than the type's peak demand
    peaks = series.max(axis=0)
    demand_matrix, capacity = scenario.demand_matrix, scenario.capacity_vector
    rows = [
        row for row in product(*(range(int(p) + 1) for p in peaks))
        if np.all(np.asarray(row, dtype=np.int64) @ demand_matrix <= capacity)
    ]

    states = []

    for t, n in enumerate(series, start=1):
        layer = [
            combo for combo in combinations_with_replacement(rows, num_servers)
            if np.all(np.sum(combo, axis=0, dtype=np.int64) >= n)
        ]

        if not layer:
            raise ClusterOverloadedError(
                f"Cluster overloaded: demand {n.tolist()} does not fit into {num_servers} servers.", slot=t
            )

        if len(layer) > max_states:
            raise ScaleGuardError(f"Slot {t} has {len(layer)} placements, more than {max_states}.")

        states.append(np.asarray(layer, dtype=np.int64).reshape(len(layer), num_servers, num_types))

    scale, op, deploy = _integer_costs(scenario.types)
    orders = np.asarray(list(permutations(range(num_servers))), dtype=np.int64).reshape(-1, num_servers)

    def transition(prev: np.ndarray, layer: np.ndarray) -> np.ndarray:
        """Cheapest deployment from every prev state to every layer state."""

        # layer[q, orders[k]] places row orders[k][u] of state q on server u
        arranged = layer[:, orders, :]
        costs = np.empty((len(prev), len(layer)), dtype=np.int64)

        for p, rows_p in enumerate(prev):
            launched = np.maximum(arranged - rows_p[None, None, :, :], 0)
            costs[p] = (launched @ deploy).sum(axis=2).min(axis=1)

        return costs

    operational = [(layer @ op).sum(axis=1) for layer in states]
    cost = operational[0] + (states[0] @ deploy).sum(axis=1)
    parents = []

    for t in range(1, horizon):
        total = cost[:, None] + transition(states[t - 1], states[t])
        parent = np.argmin(total, axis=0)
        cost = total[parent, np.arange(len(states[t]))] + operational[t]
        parents.append(parent)

    chosen = [0] * horizon
    chosen[-1] = int(np.argmin(cost))
    best = int(cost[chosen[-1]])

    for t in range(horizon - 1, 0, -1):
        chosen[t - 1] = int(parents[t - 1][chosen[t]])

    trajectory = []
    current = np.zeros((num_servers, num_types), dtype=np.int64)

    for t in range(horizon):
        state = states[t][chosen[t]]
        arranged = state[orders]
        launched = (np.maximum(arranged - current[None, :, :], 0) @ deploy).sum(axis=1)
        current = arranged[int(np.argmin(launched))]
        trajectory.append(Placement(current))

    total = accumulate_costs(trajectory, scenario.types).total

    if total != Fraction(best, scale):
        raise AssertionError(f"Rebuilt trajectory costs {total}, the search found {Fraction(best, scale)}.")

    logger.debug(f"Exhaustive optimum {total} over {sum(len(s) for s in states)} states")

    return trajectory, total


@dataclass
class RoutingSolution:
    """Chain flows of one slot under proportional splitting.

    Attributes
    ----------
    slot: int
        1-based slot
    flows: dict[int, list[np.ndarray]]
        Per chain id: the source to first-stage vector over servers, one
        servers x servers matrix per consecutive stage pair, and the
        last-stage to sink vector
    inflow: dict[int, np.ndarray]
        Per type id, traffic arriving at each server summed over chains
    coverage_residual: float
        Largest relative gap between a chain's input and what the source sends
    conservation_residual: float
        Largest relative gap between gain-scaled inflow and outflow at a server
    capacity_residual: float
        Largest relative excess of a server's inflow over its instances' capacity
    """

    slot: int
    flows: dict[int, list[np.ndarray]] = field(default_factory=dict)
    inflow: dict[int, np.ndarray] = field(default_factory=dict)
    coverage_residual: float = 0.0
    conservation_residual: float = 0.0
    capacity_residual: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(self.coverage_residual, self.conservation_residual, self.capacity_residual)


def proportional_routing(
        trajectory: Sequence[Placement], scenario: Scenario, trace: TraceSeries
) -> list[RoutingSolution]:
    """Route every chain's traffic over a placement trajectory.

    Traffic leaving a server towards the next stage of type j is split over
    the servers v in proportion to x_vj * b_j, their share of the deployed
    type-j capacity.
    """

    if len(trajectory) != trace.horizon:
        raise DimensionError(f"{len(trajectory)} placements for {trace.horizon} slots.")

    if trace.num_chains != scenario.num_chains:
        raise DimensionError(f"The trace has {trace.num_chains} chains, the scenario {scenario.num_chains}.")

    rate_capacity = np.asarray([float(vnf.capacity_mbps) for vnf in scenario.types])
    solutions = []

    for t, x in enumerate(trajectory, start=1):
        capacity = x.matrix * rate_capacity[None, :]
        deployed = capacity.sum(axis=0)
        solution = RoutingSolution(slot=t)
        inflow = np.zeros_like(capacity)

        def shares(type_id: int, traffic: float, chain_id: int) -> np.ndarray:

            if deployed[type_id - 1] <= 0:

                if traffic > 0:
                    raise RoutingInfeasibleError(
                        f"Slot {t}: chain {chain_id} sends {traffic:.6g} Mbps to VNF type "
                        f"{type_id}, which has no instances."
                    )

                return np.zeros(x.num_servers)

            return capacity[:, type_id - 1] / deployed[type_id - 1]

        for chain, rate in zip(scenario.chains, trace.column(t - 1)):
            rate = float(rate)
            scale = max(rate, 1.0)
            first = chain.stages[0]
            source = rate * shares(first, rate, chain.id)
            flows = [source]
            arriving = source
            solution.coverage_residual = max(solution.coverage_residual, abs(source.sum() - rate) / scale)

            for k, stage in enumerate(chain.stages):
                inflow[:, stage - 1] += arriving
                leaving = arriving * float(chain.gains[k])

                if k + 1 < len(chain.stages):
                    nxt = chain.stages[k + 1]
                    matrix = leaving[:, None] * shares(nxt, float(leaving.sum()), chain.id)[None, :]
                    sent = matrix.sum(axis=1)
                    arriving = matrix.sum(axis=0)
                else:
                    matrix = leaving
                    sent = leaving

                solution.conservation_residual = max(
                    solution.conservation_residual, float(np.abs(sent - leaving).max(initial=0.0)) / scale
                )
                flows.append(matrix)

            solution.flows[chain.id] = flows

        excess = np.maximum(inflow - capacity, 0.0)
        solution.capacity_residual = float((excess / np.maximum(deployed, 1.0)[None, :]).max(initial=0.0))
        solution.inflow = {vnf.id: inflow[:, vnf.id - 1] for vnf in scenario.types}
        solutions.append(solution)

    return solutions


def routing_objective(
        trajectory: Sequence[Placement], solutions: Sequence[RoutingSolution],
        scenario: Scenario, tolerance: float = 1e-9
) -> Fraction:
    """Objective of the joint placement and routing problem.

    Routing carries no cost, so a feasible routing leaves the placement
    objective unchanged.
    """

    for solution in solutions:

        if solution.max_residual > tolerance:
            raise RoutingInfeasibleError(
                f"Slot {solution.slot}: routing residual {solution.max_residual:.3g} above {tolerance}."
            )

    return accumulate_costs(trajectory, scenario.types).total


class OfflineController(BaseController):
    """Offline Controller

    Offline oracles for the bound scenario.

    Methods
    -------
    lower_bound(series)
        Sum of the per-type offline optima
    schedules(series)
        Per-type offline schedules as a T x I matrix
    exhaustive(series)
        Exact optimum over per-server placements, toy scale only
    routing(trajectory, trace)
        Proportional routing and its residuals
    """

    def lower_bound(self, series: np.ndarray) -> Fraction:
        bound = offline_lower_bound(series, self.scenario)
        self._logger.debug(f"Offline lower bound {float(bound):.6g} over {len(series)} slots")

        return bound

    def schedules(self, series: np.ndarray) -> np.ndarray:
        return offline_schedules(series, self.scenario)

    def exhaustive(self, series: np.ndarray, **guards) -> tuple[list[Placement], Fraction]:
        return exhaustive_offline(series, self.scenario, **guards)

    def routing(self, trajectory: Sequence[Placement], trace: TraceSeries) -> list[RoutingSolution]:
        return proportional_routing(trajectory, self.scenario, trace)
