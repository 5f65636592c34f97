import json

import pytest

from afmtj_lab.config import ConfigError, load_config
from afmtj_lab.util import data_path

DEVICE = str(data_path("devices/afmtj_calibrated.json"))


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_shipped_config_loads():
    s = load_config()
    assert set(s.devices) == {"AFMTJ", "MTJ"}
    assert s.devices["AFMTJ"].material.Ms == 6e5
    assert s.voltages == (0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2)
    assert s.solver.dt_base == pytest.approx(0.1e-12)
    assert set(s.calibration) == {"AFMTJ", "MTJ"}
    assert len(s.imc.profiles) == 6 and len(s.imc.cards) == 2


def test_unknown_top_level_key(tmp_path):
    with pytest.raises(ConfigError, match="foo"):
        load_config(write(tmp_path, {"foo": 1}))


def test_unknown_device_key_names_path(tmp_path):
    dev = json.loads(open(DEVICE).read())
    dev["foo"] = 3
    with pytest.raises(ConfigError, match=r"devices\.AFMTJ.*foo"):
        load_config(write(tmp_path, {"devices": {"AFMTJ": dev}}))


def test_tmr_out_of_range(tmp_path):
    dev = dict(json.loads(open(DEVICE).read()), tmr=6.0)
    with pytest.raises(ConfigError, match="5"):
        load_config(write(tmp_path, {"devices": {"AFMTJ": dev}}))
    with pytest.raises(ConfigError, match=r"logic\.tmr"):
        load_config(write(tmp_path, {"logic": {"r_p_ohm": 2900, "tmr": 6.0}}))


def test_malformed_json(tmp_path):
    with pytest.raises(ConfigError, match="malformed JSON"):
        load_config(write(tmp_path, '{"devices": '))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_device_kind_must_match_label(tmp_path):
    with pytest.raises(ConfigError, match="describes a AFMTJ"):
        load_config(write(tmp_path, {"devices": {"MTJ": DEVICE}}))


@pytest.mark.parametrize("raw,where", [
    ({"voltages_V": [0.5, 0.4]}, "voltages_V"),
    ({"solver": {"dt_min_ps": 5.0}}, "solver"),
    ({"solver": {"rel_tol": "tight"}}, "rel_tol"),
    ({"pulse": {"polarity": 2}}, "polarity"),
    ({"read": {"v_read_V": 0.5}}, "v_read_V"),
    ({"logic": {"r_p_ohm": 2900, "tmr": 0.8, "tmr_grid": [0.5, 7.0]}}, "tmr_grid"),
    ({"calibration": {"X": {"base": DEVICE, "free": ["alpha"], "targets": []}}}, "free"),
])
def test_rejections_name_the_key(tmp_path, raw, where):
    with pytest.raises(ConfigError, match=where):
        load_config(write(tmp_path, raw))


def test_relative_paths_resolve_next_to_config(tmp_path):
    (tmp_path / "dev").mkdir()
    (tmp_path / "dev" / "a.json").write_text(open(DEVICE).read())
    s = load_config(write(tmp_path, {"devices": {"AFMTJ": "dev/a.json"}}))
    assert s.devices["AFMTJ"].kind.value == "AFMTJ"


def test_with_seed_propagates():
    s = load_config().with_seed(42)
    assert s.solver.rng_seed == 42
    assert all(p.solver.rng_seed == 42 for _, p in s.calibration.values())
