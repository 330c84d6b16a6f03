import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dewetting.diagnostics import (COLUMNS, CSVSink, DiagnosticsRecord, ListSink, RunMonitor,
                                   convergence_order, dissipation_budget, make_record,
                                   read_series, relative_area_loss, write_series)
from dewetting.errors import NonPositiveError
from dewetting.shapes import shape
from dewetting.solver import SimParams, StopRule, evolve


@pytest.fixture(scope="module")
def short_run():
    sink = ListSink()
    p = SimParams.from_angle(5 * math.pi / 6, 0.05)
    evolve(shape("shape2", 32), p, StopRule(max_steps=60, energy_rate=None), sink)
    return sink.records, p


def test_record_fields():
    c = shape("shape2", 16)
    r = make_record(0, 0.0, c, 0.2, 5.0, 10.0, None)
    assert tuple(r.__dataclass_fields__) == COLUMNS
    assert r.x_l == -3.0 and r.x_r == 3.0
    assert r.theta_l == pytest.approx(r.theta_r)


def test_relative_area_loss():
    assert relative_area_loss(0.9, 1.0) == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        relative_area_loss(1.0, 0.0)


def test_series_round_trip_is_exact(tmp_path, short_run):
    records, _ = short_run
    path = write_series(records, tmp_path / "s.csv")
    back = read_series(path)
    assert back == records
    assert back[0].D is None


def test_csv_sink_flushes_and_keeps(tmp_path, short_run):
    records, _ = short_run
    with CSVSink(tmp_path / "a.csv", flush_every=7, keep=True) as sink:
        for r in records[:10]:
            sink.emit(r)
    assert sink.records == records[:10]
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == ",".join(COLUMNS)


def test_csv_sink_unwritable(tmp_path):
    with pytest.raises(OSError):
        CSVSink(tmp_path / "missing" / "x.csv")


def test_read_series_checks_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("step,t\n0,0\n")
    with pytest.raises(ValueError):
        read_series(p)


@given(st.floats(1e-6, 1.0), st.floats(0.5, 3.0), st.integers(2, 6))
def test_convergence_order_recovers_power(e0, p, k):
    errs = [(2.0**-j, e0 * 2.0 ** (-p * j)) for j in range(k)]
    np.testing.assert_allclose(convergence_order(errs), p, rtol=1e-9)


def test_convergence_order_validation():
    with pytest.raises(ValueError):
        convergence_order([(0.1, 1.0)])
    with pytest.raises(NonPositiveError):
        convergence_order([(0.1, 1.0), (0.05, 0.0)])
    with pytest.raises(ValueError):
        convergence_order([(0.1, 1.0), (0.03, 0.5)])


def test_dissipation_budget_holds(short_run):
    records, p = short_run
    lhs, rhs = dissipation_budget(records, p.tau, p.eta)
    assert len(lhs) == len(records) - 1
    assert np.all(lhs <= rhs * (1 + 1e-10))
    assert lhs[-1] > 0


def test_monitor_agrees_with_batch_budget(short_run):
    records, p = short_run
    mon = RunMonitor(p.tau, p.eta)
    for r in records:
        mon.emit(r)
    lhs, rhs = dissipation_budget(records, p.tau, p.eta)
    assert mon.steps == len(records) - 1
    assert mon.budget_ok and mon.energy_ok
    assert mon.budget_ratio == pytest.approx(np.max(lhs / rhs))
    assert mon.max_Psi == max(r.Psi for r in records)


def _rec(step, W, D=0.0, x_l=-1.0, x_r=1.0):
    return DiagnosticsRecord(step, step * 0.1, 1.0, 0.0, W, W, 1.0, D, 1.0, 1.0, x_l, x_r)


def test_monitor_flags_energy_increase_and_budget_breach():
    mon = RunMonitor(0.1, 100.0)
    mon.emit(_rec(0, 10.0, None))
    mon.emit(_rec(1, 9.0, D=1.0))     # dissipates 10 per unit time, budget 1: fine
    mon.emit(_rec(2, 9.5, D=1e-12))   # energy goes up
    assert mon.energy_violations == 1 and not mon.energy_ok
    mon2 = RunMonitor(0.1, 100.0)
    mon2.emit(_rec(0, 10.0, None))
    mon2.emit(_rec(1, 9.99, D=1.0))   # claims more dissipation than the energy drop
    assert not mon2.budget_ok


def test_monitor_first_small_D():
    mon = RunMonitor(0.1, 100.0, small_D=1e-3)
    mon.emit(_rec(0, 10.0, None))
    for k, D in enumerate([1.0, 1e-2, 1e-4, 1e-6], start=1):
        mon.emit(_rec(k, 10.0 - k, D))
    assert mon.first_small_D_step == 3
