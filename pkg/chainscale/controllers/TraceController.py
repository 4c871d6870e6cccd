import csv
import logging
from pathlib import Path
from typing import Optional
import numpy as np
from scipy.optimize import brentq
from chainscale.controllers.BaseController import BaseController
from chainscale.errors import ConfigurationError, PmrUnreachableError
from chainscale.models import SyntheticTraceParams, TraceSeries

logger = logging.getLogger(__name__)

PMR_TOLERANCE = 1e-3


def normalize_peak(trace: TraceSeries, peak_mbps: float) -> TraceSeries:
    """Linear rescale so the largest entry equals ``peak_mbps``."""

    if peak_mbps <= 0:
        raise ValueError("The peak rate must be positive.")

    peak = trace.peak

    if peak == 0:
        return trace

    return TraceSeries(trace.rates / peak * peak_mbps)


def load_trace(path: str | Path, peak_mbps: Optional[float], num_chains: int) -> TraceSeries:
    """Read a ``slot,chain_id,rate`` CSV into a chains x slots trace.

    Slots must run contiguously from 1 and every slot must give a rate for
    each of the ``num_chains`` chains. With ``peak_mbps`` set the rates are
    rescaled so their maximum equals it.
    """

    path = Path(path)
    entries: dict[tuple[int, int], float] = {}

    try:
        with open(path, "r", newline="") as file:
            reader = csv.DictReader(file)

            if reader.fieldnames is None or not {"slot", "chain_id", "rate"} <= set(reader.fieldnames):
                raise ConfigurationError(f"Trace {path} needs the columns slot, chain_id and rate.")

            for line, row in enumerate(reader, start=2):

                try:
                    slot, chain_id, rate = int(row["slot"]), int(row["chain_id"]), float(row["rate"])

                except (TypeError, ValueError) as e:
                    raise ConfigurationError(f"Trace {path} line {line}: {e}") from e

                if not 1 <= chain_id <= num_chains:
                    raise ConfigurationError(f"Trace {path} line {line}: unknown chain id {chain_id}.")

                if rate < 0 or not np.isfinite(rate):
                    raise ConfigurationError(f"Trace {path} line {line}: invalid rate {rate}.")

                if (slot, chain_id) in entries:
                    raise ConfigurationError(
                        f"Trace {path} line {line}: slot {slot} repeats chain {chain_id}."
                    )

                entries[(slot, chain_id)] = rate

    except OSError as e:
        raise ConfigurationError(f"Cannot read trace {path}: {e}") from e

    slots = sorted({slot for slot, _ in entries})

    if not slots:
        raise ConfigurationError(f"Trace {path} has no rows.")

    if slots != list(range(1, len(slots) + 1)):
        raise ConfigurationError(f"Trace {path}: slots must run contiguously from 1.")

    rates = np.zeros((num_chains, len(slots)))

    for slot in slots:

        for chain_id in range(1, num_chains + 1):

            if (slot, chain_id) not in entries:
                raise ConfigurationError(f"Trace {path}: slot {slot} has no rate for chain {chain_id}.")

            rates[chain_id - 1, slot - 1] = entries[(slot, chain_id)]

    trace = TraceSeries(rates)

    return normalize_peak(trace, peak_mbps) if peak_mbps else trace


def write_trace(trace: TraceSeries, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["slot", "chain_id", "rate"])

        for t in range(trace.horizon):

            for s in range(trace.num_chains):
                writer.writerow([t + 1, s + 1, repr(float(trace.rates[s, t]))])

    return path


def fit_pmr_exponent(trace: TraceSeries, target_pmr: float) -> tuple[float, float]:
    """Exponent and factor with peak/mean of K * rate ** gamma equal to the target.

    The mean of the trace is preserved. Returns (1, 1) when the trace
    already has the target ratio.
    """

    if target_pmr < 1:
        raise PmrUnreachableError("The peak-to-mean ratio cannot be below 1.")

    if trace.peak <= 0:
        raise PmrUnreachableError("A trace without traffic has no peak-to-mean ratio.")

    if np.isclose(trace.pmr, target_pmr, rtol=1e-9, atol=0.0):
        return 1.0, 1.0

    unit = trace.rates / trace.peak
    positive = unit[unit > 0]
    size = unit.size

    def log_pmr(gamma: float) -> float:
        # max of unit ** gamma is 1, so the ratio is the inverse mean
        return -np.log(np.sum(positive ** gamma) / size)

    target = np.log(target_pmr)
    floor = np.log(size / positive.size)

    if target <= floor:
        raise PmrUnreachableError(
            f"Peak-to-mean ratio {target_pmr} is below {np.exp(floor):.6g}, the limit of this trace."
        )

    low, high = 1e-9, 1.0

    while log_pmr(high) < target:
        low, high = high, high * 2

        if high > 1e4:
            raise PmrUnreachableError(
                f"Peak-to-mean ratio {target_pmr} is out of reach; the trace saturates at "
                f"{np.exp(log_pmr(high / 2)):.6g}."
            )

    if log_pmr(low) > target:
        raise PmrUnreachableError(f"Peak-to-mean ratio {target_pmr} is out of reach for this trace.")

    gamma = brentq(lambda g: log_pmr(g) - target, low, high, xtol=1e-12, rtol=1e-12)
    mean_power = np.sum(positive ** gamma) / size
    factor = float(np.exp(np.log(trace.mean) - gamma * np.log(trace.peak) - np.log(mean_power)))

    return float(gamma), factor


def pmr_rescale(trace: TraceSeries, target_pmr: float) -> TraceSeries:
    """Reshape the trace to the target peak-to-mean ratio at constant mean.

    A target of 1 gives the constant trace at the original mean.
    """

    if target_pmr < 1:
        raise PmrUnreachableError("The peak-to-mean ratio cannot be below 1.")

    if target_pmr == 1:
        return TraceSeries(np.full(trace.rates.shape, trace.mean))

    gamma, factor = fit_pmr_exponent(trace, target_pmr)

    if gamma == 1.0 and factor == 1.0:
        return trace

    unit = trace.rates / trace.peak
    rescaled = unit ** gamma
    rescaled *= trace.mean / rescaled.mean()
    result = TraceSeries(rescaled)

    if abs(result.pmr - target_pmr) > PMR_TOLERANCE * target_pmr:
        raise PmrUnreachableError(
            f"Rescaling reached a peak-to-mean ratio of {result.pmr:.6g}, not {target_pmr}."
        )

    logger.debug(f"PMR {trace.pmr:.4g} -> {result.pmr:.4g} with gamma {gamma:.6g}, K {factor:.6g}")

    return result


def synthesize_trace(
        num_chains: int, horizon: int, peak_mbps: float, pmr: float, seed: int,
        slots_per_day: int = 24, weekly_amplitude: float = 0.3, noise_sigma: float = 0.25
) -> TraceSeries:
    """A diurnal workload with weekly modulation and lognormal noise.

    Every chain gets its own phase. The result is rescaled to the target
    peak-to-mean ratio and then to the target peak.
    """

    if num_chains < 1 or horizon < 1:
        raise ValueError("A synthetic trace needs at least one chain and one slot.")

    if slots_per_day < 1:
        raise ValueError("A day must have at least one slot.")

    rng = np.random.default_rng(seed)
    t = np.arange(horizon, dtype=np.float64)
    phases = rng.uniform(0.0, 2 * np.pi, size=(num_chains, 1))
    diurnal = 1.0 + 0.8 * np.sin(2 * np.pi * t[None, :] / slots_per_day + phases)
    weekly = 1.0 + weekly_amplitude * np.sin(2 * np.pi * t / (7 * slots_per_day))
    noise = rng.lognormal(mean=0.0, sigma=noise_sigma, size=(num_chains, horizon))

    trace = TraceSeries(diurnal * weekly[None, :] * noise)

    return normalize_peak(pmr_rescale(trace, pmr), peak_mbps)


class TraceController(BaseController):
    """Trace Controller

    Methods
    -------
    load(path, peak_mbps=None)
        Reads a CSV trace for the chains of the bound scenario
    synthesize(params)
        Generates a trace for the chains of the bound scenario
    rescale(trace, pmr)
        Applies a peak-to-mean ratio
    save(trace, path)
        Writes a trace as CSV
    """

    def load(self, path: str | Path, peak_mbps: Optional[float] = None) -> TraceSeries:
        trace = load_trace(path, peak_mbps, self.scenario.num_chains)
        self._logger.info(f"Loaded {trace.horizon} slots from {path}, PMR {trace.pmr:.4g}")

        return trace

    def synthesize(self, params: SyntheticTraceParams) -> TraceSeries:
        return synthesize_trace(
            self.scenario.num_chains, params.horizon, params.peak_mbps, params.pmr, params.seed,
            slots_per_day=params.slots_per_day, weekly_amplitude=params.weekly_amplitude,
            noise_sigma=params.noise_sigma
        )

    def rescale(self, trace: TraceSeries, pmr: float) -> TraceSeries:
        return pmr_rescale(trace, pmr)

    def save(self, trace: TraceSeries, path: str | Path) -> Path:
        return write_trace(trace, path)
