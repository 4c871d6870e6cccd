from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
import numpy as np
from chainscale.models.CostReport import CostReport

ALGORITHMS = ("ssc_online", "msc_online", "static", "myopic", "offline_lb", "exhaustive")


@dataclass(frozen=True)
class SyntheticTraceParams:
    """Parameters of the generated workload when no trace file is given."""

    horizon: int = 1000
    peak_mbps: float = 400000.0
    pmr: float = 4.27
    slots_per_day: int = 24
    weekly_amplitude: float = 0.3
    noise_sigma: float = 0.25
    seed: int = 0


@dataclass(frozen=True)
class ExperimentSpec:
    """The ExperimentSpec class describes one simulate invocation.

    Attributes
    ----------
    config_path: Path
        Scenario JSON file
    algorithm: str
        One of ssc_online, msc_online, static, myopic, offline_lb, exhaustive
    seeds: tuple[int, ...]
        One run per seed
    output_path: Path | None
        Directory for the JSON report, per-slot CSVs and the run ledger
    trace_path: Path | None
        CSV trace; None selects the synthetic generator
    synthetic: SyntheticTraceParams
        Generator parameters, also the peak used to normalize a CSV trace
    pmr: float | None
        Target peak-to-mean ratio applied after loading; None keeps the trace's
    cost_ratio: float | None
        Deployment to operational cost ratio override; None keeps the scenario's
    chain_id: int
        Chain simulated by ssc_online when the scenario holds several
    rate_unit: int
        Bisection granularity of the pre-planning step, in Mbps
    preplan_path: Path | None
        Pre-plan JSON written by the preplan command; ssc_online only
    """

    config_path: Path
    algorithm: str
    seeds: tuple[int, ...] = (0,)
    output_path: Optional[Path] = None
    trace_path: Optional[Path] = None
    synthetic: SyntheticTraceParams = field(default_factory=SyntheticTraceParams)
    pmr: Optional[float] = None
    cost_ratio: Optional[float] = None
    chain_id: int = 1
    rate_unit: int = 1
    preplan_path: Optional[Path] = None

    def __post_init__(self):

        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"Unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}."
            )

        if not self.seeds:
            raise ValueError("An experiment needs at least one seed.")

        if self.pmr is not None and self.pmr < 1:
            raise ValueError("The peak-to-mean ratio cannot be below 1.")

        if self.rate_unit < 1:
            raise ValueError("The rate unit must be at least 1 Mbps.")

        if self.preplan_path is not None and self.algorithm != "ssc_online":
            raise ValueError("A cached pre-plan only applies to ssc_online.")


@dataclass(frozen=True)
class ViolationEvent:
    slot: int
    kind: str
    message: str

    def serialize(self) -> dict:
        return {"slot": self.slot, "kind": self.kind, "message": self.message}


@dataclass
class RunResult:
    """The RunResult class holds the outcome of one (algorithm, seed) run.

    Attributes
    ----------
    algorithm: str
        The algorithm label
    seed: int
        The seed of the run
    cost: CostReport
        Per-slot and cumulative costs
    digest: str
        sha256 over the placement trajectory
    demand: np.ndarray
        T x I instance demand per slot
    instances: np.ndarray
        T x I deployed instances per slot (column sums of the placements)
    slack: np.ndarray
        T x I surplus of the raw packing over the demand (multi-chain only)
    violations: list[ViolationEvent]
        Capacity or pre-plan violations; the run stops at the first one
    slot_seconds: list[float]
        Wall-clock time of every slot decision
    lower_bound: float | None
        Offline lower bound of the same demand series
    static_cost: float | None
        Cost of static peak provisioning on the same demand series
    """

    algorithm: str
    seed: int
    cost: CostReport
    digest: str
    demand: np.ndarray
    instances: np.ndarray
    slack: Optional[np.ndarray] = None
    violations: list[ViolationEvent] = field(default_factory=list)
    slot_seconds: list[float] = field(default_factory=list)
    lower_bound: Optional[float] = None
    static_cost: Optional[float] = None

    @property
    def completed(self) -> bool:
        return not self.violations

    @property
    def competitive_ratio(self) -> Optional[float]:

        if not self.lower_bound:
            return None

        return float(self.cost.total) / self.lower_bound

    @property
    def cost_saving(self) -> Optional[float]:

        if not self.static_cost:
            return None

        return 1.0 - float(self.cost.total) / self.static_cost

    def serialize(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "cost": self.cost.serialize(),
            "digest": self.digest,
            "completed": self.completed,
            "violations": [v.serialize() for v in self.violations],
            "lower_bound": self.lower_bound,
            "static_cost": self.static_cost,
            "competitive_ratio": self.competitive_ratio,
            "cost_saving": self.cost_saving,
            "packing_surplus": self.slack.sum(axis=0).tolist() if self.slack is not None else None,
            "mean_slot_seconds": float(np.mean(self.slot_seconds)) if self.slot_seconds else 0.0,
        }
