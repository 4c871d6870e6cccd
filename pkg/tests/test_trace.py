import numpy as np
import pytest
from chainscale import ChainScale
from chainscale.controllers.TraceController import (
    fit_pmr_exponent, load_trace, normalize_peak, pmr_rescale, synthesize_trace, write_trace
)
from chainscale.errors import ConfigurationError, PmrUnreachableError
from chainscale.models import SyntheticTraceParams, TraceSeries


def write_csv(path, rows, header="slot,chain_id,rate"):
    path.write_text("\n".join([header] + [",".join(map(str, row)) for row in rows]) + "\n")
    return path


def test_load_orders_rows_by_slot_and_chain(tmp_path):
    path = write_csv(tmp_path / "trace.csv", [(2, 1, 30), (1, 2, 5), (1, 1, 10), (2, 2, 15)])
    trace = load_trace(path, None, 2)

    assert trace.rates.tolist() == [[10.0, 30.0], [5.0, 15.0]]


def test_load_normalizes_the_peak(tmp_path):
    path = write_csv(tmp_path / "trace.csv", [(1, 1, 10), (2, 1, 40)])
    trace = load_trace(path, 400000.0, 1)

    assert trace.peak == pytest.approx(400000.0)
    assert trace.rates[0, 0] == pytest.approx(100000.0)


@pytest.mark.parametrize("rows, header", [
    ([(1, 1, 10)], "slot,rate"),
    ([(1, 3, 10)], "slot,chain_id,rate"),
    ([(1, 1, -5)], "slot,chain_id,rate"),
    ([(1, 1, 5), (1, 1, 6)], "slot,chain_id,rate"),
    ([(1, 1, 5), (3, 1, 6)], "slot,chain_id,rate"),
    ([(1, 1, "fast")], "slot,chain_id,rate"),
])
def test_load_rejects_malformed_traces(tmp_path, rows, header):

    with pytest.raises(ConfigurationError):
        load_trace(write_csv(tmp_path / "trace.csv", rows, header), None, 2)


def test_load_requires_every_chain_in_every_slot(tmp_path):
    path = write_csv(tmp_path / "trace.csv", [(1, 1, 5), (1, 2, 5), (2, 1, 5)])

    with pytest.raises(ConfigurationError):
        load_trace(path, None, 2)


def test_missing_file_is_a_configuration_error(tmp_path):

    with pytest.raises(ConfigurationError):
        load_trace(tmp_path / "absent.csv", None, 1)


def test_written_trace_loads_back(tmp_path):
    trace = TraceSeries(np.array([[1.5, 2.25], [0.0, 7.0]]))
    loaded = load_trace(write_trace(trace, tmp_path / "out" / "trace.csv"), None, 2)

    assert np.array_equal(loaded.rates, trace.rates)


def test_normalize_peak_leaves_silence_alone():
    silent = TraceSeries(np.zeros((1, 3)))
    assert normalize_peak(silent, 10.0) is silent


@pytest.mark.parametrize("target", [1.5, 2.0, 4.27, 10.0])
def test_pmr_rescale_hits_the_target_and_keeps_the_mean(target):
    trace = synthesize_trace(2, 500, 1000.0, 3.0, seed=4)
    rescaled = pmr_rescale(trace, target)

    assert rescaled.pmr == pytest.approx(target, rel=1e-3)
    assert rescaled.mean == pytest.approx(trace.mean, rel=1e-9)


def test_pmr_of_one_is_constant():
    trace = TraceSeries(np.array([[1.0, 2.0, 3.0]]))
    flat = pmr_rescale(trace, 1.0)

    assert flat.rates.tolist() == [[2.0, 2.0, 2.0]]


def test_fit_keeps_a_trace_already_on_target():
    trace = TraceSeries(np.array([[1.0, 3.0]]))
    assert fit_pmr_exponent(trace, 1.5) == (1.0, 1.0)


def test_unreachable_ratios():

    with pytest.raises(PmrUnreachableError):
        pmr_rescale(TraceSeries(np.array([[1.0, 2.0]])), 0.5)

    with pytest.raises(PmrUnreachableError):
        pmr_rescale(TraceSeries(np.zeros((1, 4))), 2.0)

    # two positive entries out of four: the ratio cannot drop below 2
    with pytest.raises(PmrUnreachableError):
        pmr_rescale(TraceSeries(np.array([[0.0, 1.0, 0.0, 3.0]])), 1.5)


def test_synthetic_trace_is_seeded():
    first = synthesize_trace(3, 200, 400000.0, 4.27, seed=9)
    second = synthesize_trace(3, 200, 400000.0, 4.27, seed=9)

    assert np.array_equal(first.rates, second.rates)
    assert first.peak == pytest.approx(400000.0)
    assert first.pmr == pytest.approx(4.27, rel=1e-3)
    assert not np.array_equal(first.rates, synthesize_trace(3, 200, 400000.0, 4.27, seed=10).rates)


def test_controller_synthesizes_one_row_per_chain(settings, small_three_chains):
    trace = ChainScale(small_three_chains, settings)("trace").synthesize(
        SyntheticTraceParams(horizon=48, peak_mbps=15000.0, pmr=2.0)
    )

    assert trace.rates.shape == (3, 48)
    assert trace.peak == pytest.approx(15000.0)


def test_normalizing_twice_changes_nothing(tmp_path):
    rng = np.random.default_rng(9)
    rows = [(t, s, round(float(rng.uniform(0, 90)), 3)) for t in range(1, 25) for s in (1, 2)]
    once = load_trace(write_csv(tmp_path / "raw.csv", rows), 15000.0, 2)
    twice = load_trace(write_trace(once, tmp_path / "normalized.csv"), 15000.0, 2)

    assert once.peak == pytest.approx(15000.0)
    assert np.allclose(twice.rates, once.rates, rtol=1e-12)
