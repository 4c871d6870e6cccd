import logging
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional
import numpy as np
import pybnb
from chainscale.controllers.BaseController import BaseController
from chainscale.errors import PatternSpaceError
from chainscale.models import DemandVector, Packing, Pattern, Scenario

logger = logging.getLogger(__name__)

MAX_PATTERNS = 100000
MAX_NODES = 5000000


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def make_pattern(counts: Iterable[int], scenario: Scenario) -> Pattern:
    """Pattern with its exact resource load."""

    counts = tuple(int(c) for c in counts)
    load = tuple(
        sum((c * vnf.demand[r] for c, vnf in zip(counts, scenario.types)), Fraction(0))
        for r in range(scenario.cluster.num_resources)
    )

    return Pattern(counts=counts, load=load)


def enumerate_patterns(
        scenario: Scenario, restrict_to: Iterable[int], max_patterns: int = MAX_PATTERNS
) -> list[Pattern]:
    """All maximal feasible server patterns over the given VNF type ids.

    A pattern is maximal when no instance of any restricted type can be
    added without exceeding a server's capacity. Counts of types outside
    ``restrict_to`` are zero. The result is sorted lexicographically.

    Parameters
    ----------
    scenario: Scenario
        Supplies the integer-scaled demands and capacity
    restrict_to: Iterable[int]
        VNF type ids the patterns may use, non-empty
    max_patterns: int
        Enumeration aborts with PatternSpaceError beyond this many patterns

    Returns
    -------
    list[Pattern]
        Maximal patterns in ascending lexicographic order
    """

    order = sorted({int(type_id) - 1 for type_id in restrict_to})

    if not order:
        raise ValueError("Pattern enumeration needs at least one VNF type.")

    if order[0] < 0 or order[-1] >= scenario.num_types:
        raise ValueError("Pattern enumeration restricted to unknown VNF types.")

    demand = [tuple(int(v) for v in row) for row in scenario.demand_matrix]
    capacity = tuple(int(c) for c in scenario.capacity_vector)
    found: list[tuple[int, ...]] = []
    counts = [0] * scenario.num_types

    def fits(i: int, remaining: tuple[int, ...]) -> int:
        limits = [rem // d for rem, d in zip(remaining, demand[i]) if d > 0]
        return min(limits) if limits else 0

    def extend(k: int, remaining: tuple[int, ...]):

        if k == len(order):

            if all(fits(i, remaining) == 0 for i in order):
                found.append(tuple(counts))

                if len(found) > max_patterns:
                    raise PatternSpaceError(
                        f"More than {max_patterns} maximal patterns over types "
                        f"{[i + 1 for i in order]}; raise [binpack] max_patterns."
                    )

            return

        i = order[k]
        most = fits(i, remaining)
        # the last type must take all the room that is left
        start = most if k == len(order) - 1 else 0

        for c in range(start, most + 1):
            counts[i] = c
            extend(k + 1, tuple(rem - c * d for rem, d in zip(remaining, demand[i])))

        counts[i] = 0

    extend(0, capacity)
    found.sort()

    return [make_pattern(c, scenario) for c in found]


class PatternPacking(pybnb.Problem):
    """Branch-and-bound over pattern multiplicities.

    Patterns are taken in descending lexicographic order; a node fixes the
    multiplicity of every pattern before ``level`` and branches on the next
    one, largest useful multiplicity first. A node is infeasible when its
    servers plus the lower bound on the residual demand exceed the cluster.
    The lower bound is the larger of the per-resource volume bound and, per
    type, the residual count over the largest count any remaining pattern
    offers.
    """

    def __init__(self, n: DemandVector, scenario: Scenario, patterns: list[Pattern]):
        self._catalog = sorted(patterns, reverse=True)
        self._vectors = [p.counts for p in self._catalog]
        self._demand = [tuple(int(v) for v in row) for row in scenario.demand_matrix]
        self._capacity = [int(c) for c in scenario.capacity_vector]
        self._num_servers = scenario.num_servers
        self._types = range(scenario.num_types)

        # suffix[k][i]: most instances of type i any pattern from k onwards holds
        self._suffix = [[0] * scenario.num_types for _ in range(len(self._vectors) + 1)]

        for k in range(len(self._vectors) - 1, -1, -1):
            self._suffix[k] = [max(a, b) for a, b in zip(self._suffix[k + 1], self._vectors[k])]

        self._level = 0
        self._residual = tuple(int(v) for v in n)
        self._used = 0
        self._choice: tuple = ()

    @property
    def catalog(self) -> list[Pattern]:
        return self._catalog

    def residual_bound(self, residual: tuple[int, ...], level: int) -> Optional[int]:
        """Servers still needed for ``residual`` using patterns from ``level``; None if none suffice."""

        volume = max(
            _ceil_div(sum(residual[i] * self._demand[i][r] for i in self._types), capacity)
            for r, capacity in enumerate(self._capacity)
        )
        per_type = 0

        for i in self._types:

            if residual[i] > 0:

                if self._suffix[level][i] == 0:
                    return None

                per_type = max(per_type, _ceil_div(residual[i], self._suffix[level][i]))

        return max(volume, per_type)

    def sense(self):
        return pybnb.minimize

    def objective(self):

        if any(self._residual):
            return self.infeasible_objective()

        return self._used

    def bound(self):
        lower = self.residual_bound(self._residual, self._level)

        if lower is None or self._used + lower > self._num_servers:
            return self.infeasible_objective()

        return self._used + lower

    def save_state(self, node):
        node.state = (self._level, self._residual, self._used, self._choice)

    def load_state(self, node):
        self._level, self._residual, self._used, self._choice = node.state

    def branch(self):

        if not any(self._residual) or self._level == len(self._vectors):
            return

        vector = self._vectors[self._level]
        useful = max(
            (_ceil_div(r, v) for r, v in zip(self._residual, vector) if r > 0 and v > 0),
            default=0
        )
        useful = min(useful, self._num_servers - self._used)

        for c in range(useful, -1, -1):
            child = pybnb.Node()
            child.state = (
                self._level + 1,
                tuple(max(r - c * v, 0) for r, v in zip(self._residual, vector)),
                self._used + c,
                self._choice + ((self._level, c),) if c else self._choice
            )
            yield child


def pack(
        n: DemandVector, scenario: Scenario, patterns: Optional[list[Pattern]] = None,
        minimize: bool = True, max_patterns: int = MAX_PATTERNS, max_nodes: int = MAX_NODES
) -> Optional[Packing]:
    """Cover the instance counts ``n`` with at most U server patterns.

    Solves PatternPacking serially with a depth-first queue, so the packing
    returned for a demand vector is always the same one.

    Parameters
    ----------
    n: DemandVector
        Instances required of every type
    scenario: Scenario
        Types and cluster
    patterns: list[Pattern] | None
        Maximal patterns over the types with n > 0; enumerated when omitted
    minimize: bool
        Return the minimum-server packing; otherwise the first packing that
        fits into U servers
    max_patterns: int
        Guard for the pattern enumeration
    max_nodes: int
        Guard for the search; exceeding it raises PatternSpaceError

    Returns
    -------
    Packing | None
        None when U servers cannot host n
    """

    n = np.asarray(n, dtype=np.int64)
    num_types = scenario.num_types

    if n.shape != (num_types,):
        raise ValueError(f"Demand of shape {n.shape} for {num_types} VNF types.")

    if np.any(n < 0):
        raise ValueError("Instance demand cannot be negative.")

    if not n.any():
        return Packing(assignments=(), num_types=num_types)

    if scenario.num_servers == 0:
        return None

    if patterns is None:
        patterns = enumerate_patterns(scenario, [i + 1 for i in np.flatnonzero(n)], max_patterns)

    problem = PatternPacking(n, scenario, patterns)
    root = tuple(int(v) for v in n)
    root_bound = problem.residual_bound(root, 0)

    if root_bound is None or root_bound > scenario.num_servers:
        return None

    results = pybnb.Solver(comm=None).solve(
        problem, queue_strategy="depth", node_limit=max_nodes,
        objective_stop=root_bound if minimize else scenario.num_servers,
        absolute_gap=0, relative_gap=0, log=None, disable_signal_handlers=True
    )

    if results.termination_condition == pybnb.TerminationCondition.node_limit:
        raise PatternSpaceError(
            f"Packing search exceeded {max_nodes} nodes for demand {root}; raise [binpack] max_nodes."
        )

    if results.best_node is None:
        return None

    _, _, servers, choice = results.best_node.state
    logger.debug(f"Packed {root} into {servers} servers after {results.nodes} nodes")

    return Packing(
        assignments=tuple((problem.catalog[k], c) for k, c in choice),
        num_types=num_types
    )


def trim_packing(packing: Packing, n: DemandVector, scenario: Scenario) -> Packing:
    """Remove surplus instances so the packing provides exactly ``n``.

    Surplus is taken from the last servers of the expansion first. Removing
    instances never adds load, so every trimmed pattern stays feasible.
    Servers left empty are dropped.
    """

    n = np.asarray(n, dtype=np.int64)
    surplus = packing.totals() - n

    if np.any(surplus < 0):
        raise ValueError("Cannot trim a packing that does not cover the demand.")

    rows = [list(p.counts) for p in packing.expand(packing.servers)]

    for row in reversed(rows):

        for i in np.flatnonzero(surplus):
            taken = min(int(surplus[i]), row[i])
            row[i] -= taken
            surplus[i] -= taken

        if not surplus.any():
            break

    assignments: list[tuple[Pattern, int]] = []

    for row in rows:

        if not any(row):
            continue

        if assignments and list(assignments[-1][0].counts) == row:
            pattern, multiplicity = assignments[-1]
            assignments[-1] = (pattern, multiplicity + 1)
        else:
            assignments.append((make_pattern(row, scenario), 1))

    return Packing(assignments=tuple(assignments), num_types=packing.num_types)


class BinPackController(BaseController):
    """Bin Pack Controller

    Packs instance demands of the bound scenario, caching the pattern
    catalog of every set of demanded types and the packings of the most
    recent demand vectors ([binpack] cache_size).

    Methods
    -------
    patterns(type_ids)
        Maximal patterns over the given VNF type ids
    pack(n, minimize=True)
        Packing of n into the cluster, or None
    trim(packing, n)
        The packing reduced to exactly n instances
    """

    def __init__(self, scenario: Scenario, settings):

        super().__init__(scenario, settings)

        self._max_patterns = settings.getint("binpack", "max_patterns")
        self._max_nodes = settings.getint("binpack", "max_nodes")
        self._catalogs: dict[frozenset, list[Pattern]] = {}
        self._cached_pack = lru_cache(maxsize=settings.getint("binpack", "cache_size"))(self._pack)

    def patterns(self, type_ids: Iterable[int]) -> list[Pattern]:
        key = frozenset(int(i) for i in type_ids)

        if key not in self._catalogs:
            self._catalogs[key] = enumerate_patterns(self.scenario, key, self._max_patterns)
            self._logger.debug(f"{len(self._catalogs[key])} maximal patterns over types {sorted(key)}")

        return self._catalogs[key]

    def _pack(self, counts: tuple[int, ...], minimize: bool) -> Optional[Packing]:
        n = np.asarray(counts, dtype=np.int64)
        demanded = [i + 1 for i in np.flatnonzero(n)]
        patterns = self.patterns(demanded) if demanded else []

        return pack(
            n, self.scenario, patterns=patterns, minimize=minimize,
            max_patterns=self._max_patterns, max_nodes=self._max_nodes
        )

    def pack(self, n: DemandVector, minimize: bool = True) -> Optional[Packing]:
        return self._cached_pack(tuple(int(v) for v in n), minimize)

    def trim(self, packing: Packing, n: DemandVector) -> Packing:
        return trim_packing(packing, n, self.scenario)
