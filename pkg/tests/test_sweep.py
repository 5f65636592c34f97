import pytest
from hypothesis import given, settings, strategies as st

from afmtj_lab.sweep import (CSV_HEADER, CalibrationProblem, CalibrationTarget, SweepConfig,
                             SweepRow, SweepTable, calibrate, emit_results, read_results,
                             simulate_targets, voltage_sweep)

finite = st.floats(1e-3, 1e5, allow_nan=False)
row = st.builds(lambda d, v, lat, en, sw: SweepRow(d, v, lat if sw else None,
                                                   en if sw else None, sw),
                st.sampled_from(["AFMTJ", "MTJ"]), st.floats(0.01, 2.0), finite, finite,
                st.booleans())


@settings(max_examples=100, deadline=None)
@given(st.lists(row, max_size=10))
def test_csv_and_json_roundtrip(rows):
    t = SweepTable(rows)
    assert SweepTable.from_csv(t.to_csv()) == t
    assert SweepTable.from_json(t.to_json()) == t


def test_csv_header_and_empty_cells():
    t = SweepTable([SweepRow("MTJ", 0.1), SweepRow("AFMTJ", 1.0, 150.0, 50.0, True)])
    lines = t.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "device,voltage_V,latency_ps,energy_fJ,switched"
    assert lines[1] == "AFMTJ,1.0,150.0,50.0,true"
    assert lines[2] == "MTJ,0.1,,,false"


def test_emit_and_read(tmp_path):
    t = SweepTable([SweepRow("AFMTJ", 1.0, 150.0, 50.0, True)])
    for fmt in ("csv", "json"):
        p = emit_results(t, fmt, tmp_path / f"s.{fmt}")
        assert read_results(p) == t
    with pytest.raises(ValueError):
        emit_results(t, "xml", tmp_path / "s.xml")


def test_sweep_config_validation(afmtj):
    with pytest.raises(ValueError):
        SweepConfig({"AFMTJ": afmtj}, (0.5, 0.5))
    with pytest.raises(ValueError):
        SweepConfig({}, (0.5,))
    assert list(SweepConfig([afmtj], (1,)).devices) == ["AFMTJ"]


def test_sweep_marks_unswitched_and_parallel_matches(afmtj):
    cfg = SweepConfig({"AFMTJ": afmtj}, (0.05, 1.0), pulse_width=400e-12)
    t1 = voltage_sweep(cfg)
    assert not t1.get("AFMTJ", 0.05).switched
    assert t1.get("AFMTJ", 1.0).switched
    assert voltage_sweep(cfg, jobs=2) == t1


def test_target_validation():
    with pytest.raises(ValueError):
        CalibrationTarget(1.0, "power", 1.0)
    with pytest.raises(ValueError):
        CalibrationTarget(1.0, "latency", -1.0)
    with pytest.raises(ValueError):
        CalibrationProblem(("eta", "r_p"), (CalibrationTarget(1.0, "latency", 1e-10),))
    with pytest.raises(ValueError):
        CalibrationProblem(("alpha",), (CalibrationTarget(1.0, "latency", 1e-10),))


def test_calibration_recovers_known_efficiency(afmtj):
    probe = CalibrationProblem((), (CalibrationTarget(1.0, "latency", 1.0),
                                    CalibrationTarget(1.0, "energy", 1.0)))
    lat, en = simulate_targets(afmtj, probe)
    targets = (CalibrationTarget(1.0, "latency", lat), CalibrationTarget(1.0, "energy", en))
    prob = CalibrationProblem(("eta",), targets, tolerance=1e-3, max_evals=80)
    res = calibrate(prob, afmtj.with_values(eta=afmtj.efficiency * 1.25))
    assert res.converged
    assert res.device.efficiency == pytest.approx(afmtj.efficiency, rel=1e-3)
    rep = res.report()
    assert rep["converged"] and len(rep["residuals"]) == 2


def test_calibration_with_nothing_free(afmtj):
    prob = CalibrationProblem((), (CalibrationTarget(1.0, "latency", 1e-9),))
    res = calibrate(prob, afmtj)
    assert res.device == afmtj and res.n_evals == 1
    assert not res.converged  # latency is far from 1 ns


def test_unreachable_target_does_not_converge(afmtj):
    # 1 fs write latency is out of reach; the fit must report failure, not raise
    prob = CalibrationProblem(("eta",), (CalibrationTarget(1.0, "latency", 1e-15),),
                              max_evals=15, pulse_width=300e-12)
    res = calibrate(prob, afmtj)
    assert not res.converged and res.n_evals <= 17
