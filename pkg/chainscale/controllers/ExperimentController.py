import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional
import numpy as np
from sqlalchemy import create_engine
from sqlalchemy.orm import Session
from chainscale.controllers.BaseController import BaseController
from chainscale.controllers.BinPackController import pack, trim_packing
from chainscale.controllers.DemandController import (
    accumulate_costs, aggregate_deployment, check_capacity, check_coverage, demand, demand_series, slot_cost
)
from chainscale.controllers.MultiChainController import run_multi_chain, step_msc
from chainscale.controllers.OfflineController import exhaustive_offline, offline_lower_bound, offline_schedules
from chainscale.controllers.PrePlanController import PrePlanController, preplan
from chainscale.controllers.SingleChainController import SscState, has_migration, step
from chainscale.controllers.TraceController import load_trace, pmr_rescale, synthesize_trace
from chainscale.errors import ClusterOverloadedError, ConfigurationError, InvariantViolation, PreplanExceededError
from chainscale.models import (
    Base, CostReport, DemandVector, ExperimentSpec, Packing, Placement, PrePlan, RunRecord, RunResult,
    Scenario, TraceSeries, ViolationEvent
)

logger = logging.getLogger(__name__)


def cost_saving(cost: float, static_cost: float) -> float:
    """Fraction of the static provisioning cost an algorithm saves."""

    if static_cost <= 0:
        raise ValueError("The static cost must be positive.")

    return 1.0 - float(cost) / float(static_cost)


def competitive_ratio(cost: float, lower_bound: float) -> float:
    """Cost over the offline lower bound; 1 when both are zero."""

    if lower_bound <= 0:

        if cost > 0:
            raise ValueError("A positive cost has no ratio against a zero lower bound.")

        return 1.0

    return float(cost) / float(lower_bound)


def caching_pack(
        scenario: Scenario, max_patterns: int, max_nodes: int, cache_size: int = 4096
) -> Callable[[DemandVector], Optional[Packing]]:
    """binpack.pack remembering the packings of the last ``cache_size`` demand vectors."""

    @lru_cache(maxsize=cache_size)
    def packed(counts: tuple[int, ...]) -> Optional[Packing]:
        return pack(np.asarray(counts, dtype=np.int64), scenario, max_patterns=max_patterns, max_nodes=max_nodes)

    def pack_fn(n: DemandVector) -> Optional[Packing]:
        return packed(tuple(int(v) for v in n))

    pack_fn.cache_info = packed.cache_info

    return pack_fn


def static_trajectory(
        trace: TraceSeries, scenario: Scenario,
        pack_fn: Optional[Callable[[DemandVector], Optional[Packing]]] = None
) -> list[Placement]:
    """The placement for every chain's peak rate, held for the whole horizon."""

    n_peak = demand(scenario.chains, trace.rates.max(axis=1), scenario.types)
    packing = pack_fn(n_peak) if pack_fn is not None else pack(n_peak, scenario)

    if packing is None:
        raise ClusterOverloadedError(
            f"Cluster overloaded: peak demand {n_peak.tolist()} does not fit into "
            f"{scenario.num_servers} servers.", slot=1
        )

    placement = trim_packing(packing, n_peak, scenario).to_placement(scenario.num_servers)

    return [placement] * trace.horizon


def static_baseline(
        trace: TraceSeries, scenario: Scenario,
        pack_fn: Optional[Callable[[DemandVector], Optional[Packing]]] = None
) -> CostReport:
    """Cost of provisioning the peak demand throughout, deployed once."""

    return accumulate_costs(static_trajectory(trace, scenario, pack_fn), scenario.types)


def myopic_baseline(
        trace: TraceSeries, scenario: Scenario,
        pack_fn: Optional[Callable[[DemandVector], Optional[Packing]]] = None, trim: bool = False
) -> CostReport:
    """Per-slot repacking matched against the previous slot, without lookahead."""

    trajectory, _ = run_multi_chain(scenario, demand_series(scenario, trace), pack_fn, trim)

    return accumulate_costs(trajectory, scenario.types)


@dataclass(frozen=True)
class RunJob:
    """Everything one worker needs to simulate an (algorithm, seed) pair."""

    algorithm: str
    seed: int
    scenario: Scenario
    series: np.ndarray
    static: Optional[list[Placement]] = None
    preplan: Optional[PrePlan] = None
    trim_surplus: bool = False
    max_patterns: int = 100000
    max_nodes: int = 5000000
    cache_size: int = 4096
    lower_bound: Optional[float] = None
    static_cost: Optional[float] = None


def check_slot(
        prev: Placement, x: Placement, n: DemandVector, scenario: Scenario, online_single: bool
) -> Optional[str]:
    """Name of the first invariant the transition breaks, if any."""

    if x.shape != (scenario.num_servers, scenario.num_types):
        return "shape"

    if not check_coverage(x, n):
        return "coverage"

    if not check_capacity(x, scenario):
        return "capacity"

    if online_single:

        if has_migration(prev, x):
            return "migration"

        per_server = np.maximum(x.matrix - prev.matrix, 0).sum(axis=0)

        if not np.array_equal(per_server, aggregate_deployment(x, prev)):
            return "aggregate_deployment"

    return None


def _placement_steps(
        job: RunJob, slack: np.ndarray
) -> Callable[[int, DemandVector, Placement], Placement]:
    """Per-slot decision function of a placement algorithm; multi-chain steps fill ``slack``."""

    scenario = job.scenario

    if job.algorithm == "ssc_online":
        state = SscState.create(job.preplan, scenario, job.seed)

        return lambda t, n, prev: step(state, n)

    if job.algorithm in ("msc_online", "myopic"):
        pack_fn = caching_pack(scenario, job.max_patterns, job.max_nodes, job.cache_size)

        def repack(t: int, n: DemandVector, prev: Placement) -> Placement:
            x, slack[t - 1] = step_msc(prev, n, scenario, pack_fn, job.trim_surplus)
            return x

        return repack

    if job.algorithm == "static":

        def hold(t: int, n: DemandVector, prev: Placement) -> Placement:

            if job.static is None:
                raise ClusterOverloadedError("Cluster overloaded: the peak demand does not fit.", slot=t)

            return job.static[t - 1]

        return hold

    raise ValueError(f"{job.algorithm} is not a placement algorithm.")


def _exhaustive_steps(job: RunJob) -> Callable[[int, DemandVector, Placement], Placement]:
    """Replays the exact offline trajectory, or fails at the first slot when none exists."""

    try:
        trajectory, _ = exhaustive_offline(job.series, job.scenario)

    except ClusterOverloadedError as e:
        message = f"No feasible offline trajectory; slot {e.slot}: {e}"

        def replay(t: int, n: DemandVector, prev: Placement) -> Placement:
            raise ClusterOverloadedError(message, slot=t)

        return replay

    return lambda t, n, prev: trajectory[t - 1]


def execute_run(job: RunJob) -> RunResult:
    """Simulate one (algorithm, seed) pair with inline invariant checks.

    A capacity or pre-plan violation ends the run; the result then holds the
    costs of the slots processed before it.
    """

    scenario = job.scenario
    hasher = hashlib.sha256()
    report = CostReport()
    violations: list[ViolationEvent] = []
    slot_seconds: list[float] = []
    series = np.asarray(job.series, dtype=np.int64)
    instances = np.zeros_like(series)
    slack = np.zeros_like(series)

    if job.algorithm == "offline_lb":
        schedules = offline_schedules(series, scenario)
        prev = np.zeros(scenario.num_types, dtype=np.int64)

        for t, x in enumerate(schedules):
            launched = np.maximum(x - prev, 0)
            report.add(
                sum((vnf.op_cost * int(k) for vnf, k in zip(scenario.types, x)), Fraction(0)),
                sum((vnf.deploy_cost * int(k) for vnf, k in zip(scenario.types, launched)), Fraction(0))
            )
            prev = x

        hasher.update(np.ascontiguousarray(schedules, dtype="<i8").tobytes())
        instances = schedules

    else:

        if job.algorithm == "exhaustive":
            decide = _exhaustive_steps(job)
        else:
            decide = _placement_steps(job, slack)

        prev = Placement.zeros(scenario.num_servers, scenario.num_types)
        trajectory = []

        for t, n in enumerate(series, start=1):
            started = time.perf_counter()

            try:
                x = decide(t, n, prev)

            except ClusterOverloadedError as e:
                violations.append(ViolationEvent(slot=t, kind="cluster_overloaded", message=str(e)))
                break

            except PreplanExceededError as e:
                violations.append(ViolationEvent(slot=t, kind="preplan_exceeded", message=str(e)))
                break

            slot_seconds.append(time.perf_counter() - started)
            broken = check_slot(prev, x, n, scenario, job.algorithm == "ssc_online")

            if broken is not None:
                violations.append(ViolationEvent(slot=t, kind=broken, message=f"Slot {t} breaks {broken}."))
                break

            report.add(*slot_cost(x, prev, scenario.types))
            x.digest_into(hasher)
            instances[t - 1] = x.totals()
            trajectory.append(x)
            prev = x

        if accumulate_costs(trajectory, scenario.types).per_slot != report.per_slot:
            raise InvariantViolation("Per-slot costs differ from the re-accumulated trajectory costs.")

    result = RunResult(
        algorithm=job.algorithm, seed=job.seed, cost=report, digest=hasher.hexdigest(),
        demand=series, instances=instances[:len(report)],
        slack=slack[:len(report)] if job.algorithm in ("msc_online", "myopic") else None, violations=violations,
        slot_seconds=slot_seconds, lower_bound=job.lower_bound, static_cost=job.static_cost
    )

    if result.completed and job.lower_bound is not None and float(report.total) < job.lower_bound * (1 - 1e-12):
        raise InvariantViolation(
            f"{job.algorithm} seed {job.seed} costs {float(report.total)}, below the lower bound {job.lower_bound}."
        )

    return result


class ExperimentController(BaseController):
    """Experiment Controller

    Runs an ExperimentSpec over its seeds, in a process pool when the
    settings ask for more than one worker, and writes the JSON report, the
    per-slot CSV files and the run ledger.

    Methods
    -------
    prepare(spec)
        The scenario and trace a spec describes
    single_chain_plan(spec, scenario)
        The pre-plan of an ssc_online run, loaded from a cache when given
    run(spec)
        Simulates every seed and writes the outputs
    write(spec, scenario, trace, results)
        Writes report.json, one CSV per run and the ledger rows
    """

    def __init__(self, scenario: Optional[Scenario], settings):

        super().__init__(scenario, settings)

        self._workers = settings.getint("simulation", "workers")
        self._database = settings.get("simulation", "database")
        self._trim = settings.getboolean("msc", "trim_surplus")
        self._max_patterns = settings.getint("binpack", "max_patterns")
        self._max_nodes = settings.getint("binpack", "max_nodes")
        self._cache_size = settings.getint("binpack", "cache_size")

    def prepare(self, spec: ExperimentSpec) -> tuple[Scenario, TraceSeries]:
        scenario = Scenario.from_file(spec.config_path)

        if spec.cost_ratio is not None:
            scenario = scenario.with_cost_ratio(spec.cost_ratio)

        if spec.trace_path is not None:
            trace = load_trace(spec.trace_path, spec.synthetic.peak_mbps, scenario.num_chains)
        else:
            params = spec.synthetic
            trace = synthesize_trace(
                scenario.num_chains, params.horizon, params.peak_mbps, params.pmr, params.seed,
                slots_per_day=params.slots_per_day, weekly_amplitude=params.weekly_amplitude,
                noise_sigma=params.noise_sigma
            )

        if spec.algorithm == "ssc_online" and scenario.num_chains > 1:
            trace = TraceSeries(trace.rates[spec.chain_id - 1:spec.chain_id])
            scenario = scenario.single_chain(spec.chain_id)

        if spec.pmr is not None:
            trace = pmr_rescale(trace, spec.pmr)

        return scenario, trace

    def single_chain_plan(self, spec: ExperimentSpec, scenario: Scenario) -> PrePlan:
        """The pre-plan cached at ``preplan_path``, or a fresh bisection."""

        if spec.preplan_path is None:
            return preplan(
                scenario.chain(1), scenario, rate_unit=spec.rate_unit,
                pack_fn=lambda n, minimize: pack(
                    n, scenario, minimize=minimize, max_patterns=self._max_patterns, max_nodes=self._max_nodes
                )
            )

        plan = PrePlanController(scenario, self._settings).load(spec.preplan_path)

        if not set(plan.multisets) <= set(scenario.chain(1).stages):
            raise ConfigurationError(
                f"The pre-plan {spec.preplan_path} holds types {sorted(plan.multisets)} "
                f"outside the chain {list(scenario.chain(1).stages)}."
            )

        self._logger.info(f"Pre-plan loaded from {spec.preplan_path}, alpha_max {plan.alpha_max} Mbps")

        return plan

    def run(self, spec: ExperimentSpec) -> list[RunResult]:
        scenario, trace = self.prepare(spec)
        series = demand_series(scenario, trace)
        lower_bound = float(offline_lower_bound(series, scenario))
        pack_fn = caching_pack(scenario, self._max_patterns, self._max_nodes, self._cache_size)

        try:
            static = static_trajectory(trace, scenario, pack_fn)
            static_cost = float(accumulate_costs(static, scenario.types).total)

        except ClusterOverloadedError:
            self._logger.warning("The peak demand does not fit the cluster; static provisioning is unavailable.")
            static, static_cost = None, None

        plan = None

        if spec.algorithm == "ssc_online":
            plan = self.single_chain_plan(spec, scenario)

        jobs = [
            RunJob(
                algorithm=spec.algorithm, seed=seed, scenario=scenario, series=series,
                static=static, preplan=plan, trim_surplus=self._trim,
                max_patterns=self._max_patterns, max_nodes=self._max_nodes, cache_size=self._cache_size,
                lower_bound=lower_bound, static_cost=static_cost
            )
            for seed in spec.seeds
        ]

        self._logger.info(
            f"Running {spec.algorithm} on {scenario.name} over {trace.horizon} slots, "
            f"{len(jobs)} seeds, PMR {trace.pmr:.4g}, cost ratio {float(scenario.max_cost_ratio):.4g}"
        )

        if self._workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self._workers) as pool:
                results = list(pool.map(execute_run, jobs))
        else:
            results = [execute_run(job) for job in jobs]

        for result in results:
            self._logger.info(
                f"{result.algorithm} seed {result.seed}: total {float(result.cost.total):.6g}, "
                f"digest {result.digest[:12]}, completed {result.completed}"
            )

            for event in result.violations:
                self._logger.warning(f"{result.algorithm} seed {result.seed} slot {event.slot}: {event.message}")

        if spec.output_path is not None:
            self.write(spec, scenario, trace, results)

        return results

    def write(self, spec: ExperimentSpec, scenario: Scenario, trace: TraceSeries, results: list[RunResult]) -> Path:
        out = Path(spec.output_path)
        out.mkdir(parents=True, exist_ok=True)

        report = {
            "scenario": scenario.name,
            "algorithm": spec.algorithm,
            "seeds": list(spec.seeds),
            "horizon": trace.horizon,
            "pmr": trace.pmr,
            "cost_ratio": float(scenario.max_cost_ratio),
            "runs": [result.serialize() for result in results],
        }

        with open(out / "report.json", "w") as file:
            json.dump(report, file, indent=2)

        types = [vnf.id for vnf in scenario.types]

        for result in results:

            with open(out / f"{result.algorithm}_seed{result.seed}.csv", "w", newline="") as file:
                writer = csv.writer(file)
                writer.writerow(
                    ["slot", "op_cost", "deploy_cost", "total"]
                    + [f"n_{i}" for i in types] + [f"x_{i}" for i in types]
                )

                for (slot, op, dep, total), n, x in zip(result.cost.rows(), result.demand, result.instances):
                    writer.writerow([slot, op, dep, total] + n.tolist() + x.tolist())

        self.persist(out / self._database, scenario, trace, results)

        return out

    def persist(self, database: Path, scenario: Scenario, trace: TraceSeries, results: list[RunResult]) -> None:
        engine = create_engine(f"sqlite:///{database}")
        Base.metadata.create_all(engine)

        with Session(bind=engine, expire_on_commit=False) as session:

            try:

                for result in results:
                    operational, deployment, total = result.cost.totals
                    session.add(RunRecord(
                        scenario=scenario.name, algorithm=result.algorithm, seed=result.seed,
                        cost_ratio=float(scenario.max_cost_ratio), pmr=trace.pmr,
                        horizon=len(result.cost), operational=float(operational),
                        deployment=float(deployment), total=float(total), total_exact=str(total),
                        lower_bound=result.lower_bound, static_cost=result.static_cost,
                        digest=result.digest, completed=result.completed,
                        violations=len(result.violations)
                    ))

            except Exception as e:
                session.rollback()
                raise e

            else:
                session.commit()

        engine.dispose()
        self._logger.info(f"{len(results)} runs recorded in {database}")
