import logging
from typing import Callable, Optional, Sequence
import numpy as np
from scipy.optimize import linear_sum_assignment
from chainscale.controllers.BaseController import BaseController
from chainscale.controllers.BinPackController import pack, trim_packing
from chainscale.errors import ClusterOverloadedError, DimensionError
from chainscale.models import DemandVector, Packing, Pattern, Placement, Scenario

logger = logging.getLogger(__name__)

PackFunction = Callable[[DemandVector], Optional[Packing]]


def deployment_weights(prev: Placement, patterns: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Integer-scaled cost of placing pattern j on server u given ``prev``.

    Entry (j, u) is the sum over types of the deployment cost times the
    instances pattern j adds beyond what server u already runs.
    """

    _, weights = scenario.deploy_weights
    launched = np.maximum(patterns[:, None, :] - prev.matrix[None, :, :], 0)

    return launched @ weights


def match_patterns(prev: Placement, patterns: Sequence[Pattern], scenario: Scenario) -> Placement:
    """Assign one pattern per server at minimum total deployment cost.

    Parameters
    ----------
    prev: Placement
        The previous slot's placement
    patterns: Sequence[Pattern]
        Exactly one pattern per server, padded with empty patterns
    scenario: Scenario
        Supplies the deployment costs

    Returns
    -------
    Placement
        Server sigma(j) runs pattern j; among equally cheap assignments the
        one putting non-empty patterns on the lowest server indices
    """

    if len(patterns) != prev.num_servers:
        raise DimensionError(f"{len(patterns)} patterns for {prev.num_servers} servers.")

    if prev.num_types != scenario.num_types:
        raise DimensionError(f"The placement has {prev.num_types} types, expected {scenario.num_types}.")

    if not patterns:
        return Placement.zeros(0, scenario.num_types)

    vectors = np.asarray([p.counts for p in patterns], dtype=np.int64).reshape(-1, scenario.num_types)
    cost = deployment_weights(prev, vectors, scenario)

    # secondary key: server index of every non-empty pattern, worth less than one cost unit in total
    num_servers = prev.num_servers
    occupied = vectors.any(axis=1).astype(np.int64)
    tie = occupied[:, None] * np.arange(num_servers, dtype=np.int64)[None, :]
    rows, servers = linear_sum_assignment(cost * (num_servers * (num_servers - 1) // 2 + 1) + tie)

    matrix = np.zeros_like(prev.matrix)
    matrix[servers] = vectors[rows]

    return Placement(matrix)


def max_pattern_counts(packing: Packing, num_types: int) -> np.ndarray:
    counts = np.zeros(num_types, dtype=np.int64)

    for pattern, _ in packing:
        counts = np.maximum(counts, pattern.counts)

    return counts


def step_msc(
        prev: Placement, n_t: DemandVector, scenario: Scenario,
        pack_fn: Optional[PackFunction] = None, trim: bool = False
) -> tuple[Placement, np.ndarray]:
    """One slot of the multi-chain online algorithm.

    Packs ``n_t`` into the fewest servers, optionally trims the surplus so
    exactly ``n_t`` instances remain, and matches the patterns to servers.

    Returns
    -------
    tuple[Placement, np.ndarray]
        The placement and the surplus of the untrimmed packing over n_t
    """

    n_t = np.asarray(n_t, dtype=np.int64)

    if pack_fn is None:
        def pack_fn(n):
            return pack(n, scenario)

    packing = pack_fn(n_t)

    if packing is None:
        raise ClusterOverloadedError(
            f"Cluster overloaded: demand {n_t.tolist()} does not fit into {scenario.num_servers} servers."
        )

    slack = packing.totals() - n_t
    allowed = np.where(n_t > 0, max_pattern_counts(packing, scenario.num_types) - 1, 0)

    if np.any(slack > allowed):
        logger.warning(f"Packing surplus {slack.tolist()} exceeds one pattern for demand {n_t.tolist()}")

    if trim:
        packing = trim_packing(packing, n_t, scenario)

    placement = match_patterns(prev, packing.expand(scenario.num_servers), scenario)

    return placement, slack


def run_multi_chain(
        scenario: Scenario, demand_series: np.ndarray,
        pack_fn: Optional[PackFunction] = None, trim: bool = False
) -> tuple[list[Placement], np.ndarray]:
    """Placement trajectory and per-slot packing surplus over a demand series."""

    prev = Placement.zeros(scenario.num_servers, scenario.num_types)
    trajectory = []
    slack = np.zeros((len(demand_series), scenario.num_types), dtype=np.int64)

    for t, n_t in enumerate(demand_series, start=1):

        try:
            prev, slack[t - 1] = step_msc(prev, n_t, scenario, pack_fn, trim)

        except ClusterOverloadedError as e:
            e.slot = t
            raise

        trajectory.append(prev)

    return trajectory, slack


class MultiChainController(BaseController):
    """Multi Chain Controller

    Repacks the pooled demand of all chains every slot and maps patterns
    onto servers by minimum-weight matching.

    Methods
    -------
    step(prev, n_t)
        One slot of the algorithm
    run(demand_series)
        The placement trajectory and packing surplus over a demand series
    """

    def __init__(self, scenario: Scenario, settings, binpack=None):

        super().__init__(scenario, settings)

        self._binpack = binpack
        self._trim = settings.getboolean("msc", "trim_surplus")

    def _pack_fn(self) -> Optional[PackFunction]:
        return self._binpack.pack if self._binpack is not None else None

    def step(self, prev: Placement, n_t: DemandVector) -> tuple[Placement, np.ndarray]:
        return step_msc(prev, n_t, self.scenario, self._pack_fn(), self._trim)

    def run(self, demand_series: np.ndarray) -> tuple[list[Placement], np.ndarray]:
        trajectory, slack = run_multi_chain(self.scenario, demand_series, self._pack_fn(), self._trim)
        self._logger.info(
            f"Multi-chain run: {len(trajectory)} slots, total surplus {slack.sum(axis=0).tolist()}"
        )

        return trajectory, slack
