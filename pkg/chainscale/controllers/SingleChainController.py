import logging
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from chainscale.controllers.BaseController import BaseController
from chainscale.errors import DimensionError, PreplanExceededError
from chainscale.models import DemandVector, InstanceRecord, InstanceState, Placement, PrePlan, Scenario

logger = logging.getLogger(__name__)


def deadline_pmf(delta: int) -> np.ndarray:
    """Probability of every removal deadline j = 1..delta, index j - 1.

    P(j) = ((delta - 1) / delta) ** (delta - j) / (delta * (1 - (1 - 1 / delta) ** delta))
    """

    if delta < 1:
        raise ValueError("The break-even horizon must be at least 1.")

    if delta == 1:
        return np.ones(1)

    j = np.arange(1, delta + 1, dtype=np.float64)
    ratio = (delta - 1) / delta

    return ratio ** (delta - j) / (delta * (1.0 - ratio ** delta))


def sample_deadline(delta: int, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from deadline_pmf."""

    if delta == 1:
        return 1

    cdf = np.cumsum(deadline_pmf(delta))
    j = int(np.searchsorted(cdf, rng.random(), side="right")) + 1

    return min(j, delta)


def has_migration(prev: Placement, cur: Placement) -> bool:
    """True if some type grows on one server while shrinking on another."""

    if prev.shape != cur.shape:
        raise DimensionError(f"Placements {prev.shape} and {cur.shape} differ in shape.")

    diff = cur.matrix - prev.matrix

    return bool(np.any((diff > 0).any(axis=0) & (diff < 0).any(axis=0)))


@dataclass
class SscState:
    """Mutable state of the single-chain online algorithm.

    Running instances of a type are kept in activation order and idle ones
    in idling order, so the most recent of either is at the end of its list.

    Attributes
    ----------
    preplan: PrePlan
        The MAX placement and the multisets still available
    scenario: Scenario
        Types and cluster
    rng: np.random.Generator
        Source of the removal deadlines
    running: dict[int, list[InstanceRecord]]
        Running instances per type id
    idle: dict[int, list[InstanceRecord]]
        Idle instances per type id
    n_prev: np.ndarray
        Demand of the last processed slot
    matrix: np.ndarray
        Servers x types count of running and idle instances
    """

    preplan: PrePlan
    scenario: Scenario
    rng: np.random.Generator
    running: dict[int, list[InstanceRecord]] = field(default_factory=dict)
    idle: dict[int, list[InstanceRecord]] = field(default_factory=dict)
    n_prev: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None
    sequence: int = 0

    @classmethod
    def create(cls, preplan: PrePlan, scenario: Scenario, seed: int) -> "SscState":
        type_ids = [vnf.id for vnf in scenario.types]

        return cls(
            preplan=preplan.fresh(), scenario=scenario,
            rng=np.random.default_rng(seed),
            running={i: [] for i in type_ids}, idle={i: [] for i in type_ids},
            n_prev=np.zeros(scenario.num_types, dtype=np.int64),
            matrix=np.zeros((scenario.num_servers, scenario.num_types), dtype=np.int64)
        )

    def x_total(self, type_id: int) -> int:
        return len(self.running[type_id]) + len(self.idle[type_id])

    @property
    def instance_count(self) -> int:
        return sum(self.x_total(vnf.id) for vnf in self.scenario.types)

    def placement(self) -> Placement:
        return Placement(self.matrix)


def _activate(state: SscState, record: InstanceRecord) -> None:
    state.sequence += 1
    record.activate(state.sequence)
    state.running[record.type_id].append(record)


def step(state: SscState, n_t: DemandVector) -> Placement:
    """Process one slot of demand and return the slot's placement.

    Per type, with x the deployed count and n_prev the previous demand:
    when n_t >= x every idle instance resumes and the shortfall is deployed
    on servers ejected from the multiset; when n_prev <= n_t < x the most
    recently idled instances resume; otherwise the most recently activated
    instances go idle with a fresh deadline. Afterwards the counter of every
    instance already idle before this slot advances, and those whose counter
    reached the deadline are removed, their servers returned to the multiset.
    An instance idled in slot t with deadline j stays placed through slot
    t + j - 1 and is gone in slot t + j unless it resumed.
    """

    n_t = np.asarray(n_t, dtype=np.int64)

    if n_t.shape != (state.scenario.num_types,):
        raise DimensionError(f"Demand of shape {n_t.shape} for {state.scenario.num_types} types.")

    # per type, idle[:carried] were idle before this slot
    carried: dict[int, int] = {}

    for vnf in state.scenario.types:
        i = vnf.id
        n = int(n_t[i - 1])
        n_prev = int(state.n_prev[i - 1])
        running, idle = state.running[i], state.idle[i]
        x_prev = len(running) + len(idle)

        if n >= x_prev:

            while idle:
                _activate(state, idle.pop())

            if n > x_prev:
                multiset = state.preplan.multisets.get(i)

                if multiset is None:
                    raise PreplanExceededError(
                        f"Demand exceeds pre-planned maximum: VNF type {i} is not part of the plan."
                    )

                for server_id in multiset.eject(n - x_prev):
                    state.matrix[server_id, i - 1] += 1
                    _activate(state, InstanceRecord(
                        type_id=i, server_id=server_id, state=InstanceState.RUNNING, activation_seq=0
                    ))

        elif n >= n_prev:

            for _ in range(n - n_prev):
                _activate(state, idle.pop())

        carried[i] = len(idle)

        if n < n_prev:

            for _ in range(n_prev - n):
                record = running.pop()
                record.idle(sample_deadline(vnf.delta, state.rng))
                idle.append(record)

    for vnf in state.scenario.types:
        i = vnf.id
        idle = state.idle[i]
        kept = []
        expired = []

        for record in idle[:carried[i]]:
            record.counter += 1

            if record.counter >= record.deadline:
                expired.append(record)
            else:
                kept.append(record)

        if expired:
            state.idle[i] = kept + idle[carried[i]:]

            for record in expired:
                state.matrix[record.server_id, i - 1] -= 1

            state.preplan.multisets[i].insert([record.server_id for record in expired])

    state.n_prev = n_t.copy()

    return state.placement()


def run_single_chain(
        preplan: PrePlan, scenario: Scenario, demand_series: np.ndarray, seed: int
) -> list[Placement]:
    """Placement trajectory of the online algorithm over a demand series."""

    state = SscState.create(preplan, scenario, seed)
    trajectory = []

    for t, n_t in enumerate(demand_series, start=1):

        try:
            trajectory.append(step(state, n_t))

        except PreplanExceededError as e:
            e.slot = t
            raise

    return trajectory


class SingleChainController(BaseController):
    """Single Chain Controller

    Runs the randomized online algorithm on the single chain of the bound
    scenario.

    Methods
    -------
    state(preplan, seed=None)
        A fresh algorithm state
    run(preplan, demand_series, seed=None)
        The placement trajectory over a demand series
    """

    def __init__(self, scenario: Scenario, settings):

        super().__init__(scenario, settings)

        self._seed = settings.getint("ssc", "seed")

    def state(self, preplan: PrePlan, seed: Optional[int] = None) -> SscState:
        return SscState.create(preplan, self.scenario, self._seed if seed is None else seed)

    def run(self, preplan: PrePlan, demand_series: np.ndarray, seed: Optional[int] = None) -> list[Placement]:
        seed = self._seed if seed is None else seed
        trajectory = run_single_chain(preplan, self.scenario, demand_series, seed)
        self._logger.info(f"Single-chain run, seed {seed}: {len(trajectory)} slots")

        return trajectory
