import csv
import json

import pytest

from afmtj_lab.cli import main
from afmtj_lab.util import data_path

DEVICES = {"AFMTJ": str(data_path("devices/afmtj_calibrated.json")),
           "MTJ": str(data_path("devices/mtj_calibrated.json"))}


def cfg(tmp_path, raw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return str(p)


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main(list(argv) + ["--out", str(out)]), out


def test_logic_and_imc_happy_path(tmp_path, capsys):
    code, out = run(tmp_path, "logic")
    assert code == 0
    rows = list(csv.DictReader(open(out / "logic_truth.csv")))
    assert len(rows) == 6 * 2 * 4
    assert all(r["out"] == r["expected"] for r in rows)
    code, out = run(tmp_path, "imc")
    assert code == 0 and (out / "fig4_report.csv").exists()
    man = json.loads((out / "run-manifest.json").read_text())
    assert man["subcommand"] == "imc" and "fig4_report.csv" in man["outputs"]
    assert "average speedup" in capsys.readouterr().out


def test_sweep_writes_curves(tmp_path):
    c = cfg(tmp_path, {"devices": DEVICES, "voltages_V": [0.9, 1.0],
                       "references": {"fig3": str(data_path("reference/fig3.json"))}})
    code, out = run(tmp_path, "sweep", "--config", c, "--format", "json")
    assert code == 0
    for name in ("sweep.json", "fig3_latency.csv", "fig3_energy.csv", "device_cards.json"):
        assert (out / name).exists()
    header = (out / "fig3_latency.csv").read_text().splitlines()[0]
    assert header == "voltage_V,AFMTJ,MTJ,AFMTJ_ref,MTJ_ref"


def test_write_sim(tmp_path):
    c = cfg(tmp_path, {"devices": {"AFMTJ": DEVICES["AFMTJ"]}, "pulse": {"width_ps": 400}})
    code, out = run(tmp_path, "write-sim", "--config", c)
    assert code == 0
    summary = json.loads((out / "write_summary.json").read_text())
    assert summary["AFMTJ"]["switched"] and summary["AFMTJ"]["read_bit_after"] == 0


def test_invalid_input_exits_1(tmp_path, capsys):
    assert run(tmp_path, "logic", "--config", cfg(tmp_path, {"foo": 1}))[0] == 1
    assert "foo" in capsys.readouterr().err
    assert run(tmp_path, "logic", "--jobs", "0")[0] == 1
    assert run(tmp_path, "logic", "--seed", "-1")[0] == 1
    assert run(tmp_path, "logic", "--config", str(tmp_path / "nope.json"))[0] == 1
    assert run(tmp_path, "sweep", "--config", cfg(tmp_path, {}))[0] == 1


def test_bad_env_jobs(tmp_path, monkeypatch):
    monkeypatch.setenv("AFMTJ_LAB_JOBS", "many")
    assert run(tmp_path, "logic")[0] == 1


def test_numerical_failure_exits_2(tmp_path):
    # tolerance that no step at dt_min can meet
    c = cfg(tmp_path, {"devices": {"AFMTJ": DEVICES["AFMTJ"]},
                       "solver": {"dt_min_ps": 1.0, "dt_base_ps": 1.0, "rel_tol": 1e-30}})
    assert run(tmp_path, "write-sim", "--config", c)[0] == 2


def test_unconverged_calibration_exits_3(tmp_path):
    c = cfg(tmp_path, {"pulse": {"width_ps": 300}, "calibration": {"AFMTJ": {
        "base": DEVICES["AFMTJ"], "free": ["eta"], "max_evals": 3,
        "targets": [{"voltage_V": 1.0, "observable": "latency", "value_ps": 0.001}]}}})
    code, out = run(tmp_path, "calibrate", "--config", c)
    assert code == 3
    rep = json.loads((out / "calibration_report.json").read_text())
    assert rep["AFMTJ"]["converged"] is False


def test_same_seed_same_bytes(tmp_path):
    c = cfg(tmp_path, {"devices": {"AFMTJ": DEVICES["AFMTJ"]}, "pulse": {"width_ps": 200},
                       "solver": {"temperature_K": 300.0}})
    outs = []
    for i in range(2):
        d = tmp_path / f"o{i}"
        assert main(["write-sim", "--config", c, "--out", str(d), "--seed", "9"]) == 0
        outs.append((d / "trajectory_AFMTJ.csv").read_bytes())
    assert outs[0] == outs[1]
    d = tmp_path / "o2"
    main(["write-sim", "--config", c, "--out", str(d), "--seed", "10"])
    assert (d / "trajectory_AFMTJ.csv").read_bytes() != outs[0]


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "afmtj-lab" in capsys.readouterr().out
