import csv
import io

import numpy as np
import pytest

from afmtj_lab.acceptance import mirror_deviation
from afmtj_lab.integrator import Trajectory
from afmtj_lab.transient import (PulseSpec, ReadDisturbError, TRAJECTORY_HEADER,
                                 export_trajectory, run_read, run_write, write_energy)
from afmtj_lab.device import write_initial_state


def test_pulse_validation():
    assert PulseSpec(0.8, polarity=-1).voltage == -0.8
    for kw in (dict(amplitude=-1), dict(amplitude=1, width=0), dict(amplitude=1, polarity=0)):
        with pytest.raises(ValueError):
            PulseSpec(**kw)


def _flat(times, current):
    n = len(times)
    return Trajectory(times, np.tile([[0, 0, 1.0], [0, 0, -1.0]], (n, 1, 1)),
                      np.full(n, 1.0), np.asarray(current, float))


def test_energy_constant_current():
    traj = _flat(np.linspace(0, 10e-12, 11), np.full(11, 2e-4))
    # V I t = 0.5 * 2e-4 * 7.3e-12
    assert write_energy(traj, 0.5, 7.3e-12) == pytest.approx(7.3e-16, rel=1e-12)


def test_energy_linear_current_is_exact():
    t = np.linspace(0, 10e-12, 11)
    traj = _flat(t, 1e-4 * t / 10e-12)
    # integral of V * I0 t / T from 0 to L = V I0 L^2 / (2T)
    assert write_energy(traj, 1.0, 6.5e-12) == pytest.approx(1e-4 * 6.5e-12**2 / 2e-11, rel=1e-12)
    with pytest.raises(ValueError):
        write_energy(traj, 1.0, 11e-12)


def test_zero_amplitude_never_switches(afmtj):
    res = run_write(afmtj, PulseSpec(0.0, 100e-12))
    assert not res.switched and res.energy is None


def test_write_switches_and_energy_bounded(afmtj, mtj):
    for dev in (afmtj, mtj):
        res = run_write(dev, PulseSpec(1.0, 5e-9))
        assert res.switched
        lat = res.latency
        r_p, r_ap = dev.resistance.r_p, dev.resistance.r_ap
        # ohmic bias: V^2 L / R_ap <= E <= V^2 L / R_p
        assert lat / r_ap <= res.energy <= lat / r_p
        assert res.final_state.m1[2] < -0.9


def test_wrong_polarity_does_not_switch(afmtj):
    res = run_write(afmtj, PulseSpec(1.0, 1e-9, polarity=1),
                    initial=write_initial_state(afmtj.kind, up=True))
    assert not res.switched


def test_latency_falls_with_voltage(afmtj):
    lats = [run_write(afmtj, PulseSpec(v, 2e-9)).latency for v in (0.6, 0.9, 1.2)]
    assert lats[0] > lats[1] > lats[2]


def test_mirror_symmetry_with_zero_tmr(afmtj):
    dz, full, a, b = mirror_deviation(afmtj.with_values(tmr=0.0), pulse_width=500e-12)
    assert dz <= 1e-9 and full <= 1e-9
    assert a.latency == b.latency and a.energy == b.energy


def test_read_bits_and_disturb(afmtj, mtj):
    for dev in (afmtj, mtj):
        p = run_read(dev, 0.1)
        assert p.bit == 1 and not p.disturbed
        assert p.current == pytest.approx(0.1 / dev.resistance.r_p, rel=1e-3)
        ap = run_read(dev, 0.1, state=write_initial_state(dev.kind, up=False, tilt_deg=0.0))
        assert ap.bit == 0
    with pytest.raises(ReadDisturbError):
        run_read(afmtj, 0.3)


def test_trajectory_export(afmtj, tmp_path):
    res = run_write(afmtj, PulseSpec(1.0, 50e-12))
    path = tmp_path / "t.csv"
    export_trajectory(res.trajectory, path, afmtj.kind)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == TRAJECTORY_HEADER
    assert len(rows) == len(res.trajectory) + 1
    assert float(rows[-1][0]) == pytest.approx(50.0)
