import numpy as np
import pytest

from afmtj_lab.device import resistance_series, write_initial_state
from afmtj_lab.integrator import (NumericalError, SolverOptions, StiffnessError, ThermalSpec,
                                  Trajectory, integrate_adaptive, rk4_step, sample_thermal_field,
                                  step_normals, thermal_sigma)
from afmtj_lab.magdyn import MaterialParams, gilbert_rhs, llg_rhs_array
from afmtj_lab.transient import simulate
from afmtj_lab.acceptance import larmor_frequency, rk4_halving_ratio

PS = 1e-12
GAMMA_MU0 = 1.76085962784e11 * 1.25663706127e-6


def precession(h):
    hv = np.array([0.0, 0.0, h])
    return lambda t, y, hth: np.stack([gilbert_rhs(m, hv, np.zeros(3), 0.0) for m in y])


@pytest.mark.parametrize("kw", [dict(dt_min=1e-12, dt_base=1e-13), dict(rel_tol=0),
                                dict(t_end=0), dict(temperature=-1), dict(rng_seed=-1),
                                dict(sample_interval=0)])
def test_solver_options_validation(kw):
    with pytest.raises(ValueError):
        SolverOptions(**kw)


def test_sample_times_include_end():
    t = SolverOptions(t_end=2.5e-12, sample_interval=1e-12).sample_times()
    assert np.allclose(t, [0, 1e-12, 2e-12, 2.5e-12])


def test_trajectory_rejects_bad_shapes():
    with pytest.raises(ValueError):
        Trajectory([0, 1], np.zeros((3, 2, 3)))
    with pytest.raises(ValueError):
        Trajectory([0, 0], np.zeros((2, 2, 3)))


def test_larmor_frequency_at_01_ps():
    # mu0 H = 0.1 T -> 2.8025 GHz
    f, f0 = larmor_frequency(0.1, 0.1 * PS, periods=1)
    assert f0 == pytest.approx(2.8024951386e9, rel=1e-9)
    assert abs(f - f0) / f0 < 1e-3


def test_rk4_fourth_order():
    assert 12 <= rk4_halving_ratio() <= 20


def test_rk4_step_renormalizes_and_reports_drift():
    y = np.array([[1.0, 0, 0], [1.0, 0, 0]])
    s, drift = rk4_step(precession(1e5), y, 1e-12)
    assert np.allclose(np.linalg.norm(s.as_array(), axis=1), 1.0, atol=1e-15)
    assert 0 < drift < 1e-3
    with pytest.raises(ValueError):
        rk4_step(precession(1e7), y, 0.0)


def test_rk4_step_raises_on_nonfinite():
    y = np.array([[1.0, 0, 0], [1.0, 0, 0]])
    with pytest.raises(NumericalError):
        rk4_step(lambda t, v, h: np.full((2, 3), np.nan), y, 1e-12)


def test_adaptive_precession_phase():
    h = 0.05 / 1.25663706127e-6
    opts = SolverOptions(t_end=200 * PS, rel_tol=1e-9)
    traj = integrate_adaptive(precession(h), np.array([[1.0, 0, 0], [0, 1.0, 0]]), opts)
    w = GAMMA_MU0 * h
    t = traj.times
    exact = np.stack([np.cos(w * t), np.sin(w * t), 0 * t], axis=1)
    assert np.max(np.abs(traj.states[:, 0] - exact)) < 1e-6
    assert traj.stats.accepted > 0 and traj.stats.max_drift < 1e-6


def test_stiffness_error_at_dt_min():
    opts = SolverOptions(t_end=10 * PS, dt_min=1 * PS, dt_base=1 * PS, rel_tol=1e-30)
    with pytest.raises(StiffnessError):
        integrate_adaptive(precession(1e6), np.array([[1.0, 0, 0], [1.0, 0, 0]]), opts)


def test_thermal_sigma_closed_form():
    # 2 alpha kB T / (gamma mu0^2 Ms V dt), alpha 0.01, 300 K, 6e5 A/m, 50x50x1 nm^3, 0.1 ps
    s = thermal_sigma(0.01, 6e5, 50e-9 * 50e-9 * 1e-9, 300.0, 0.1 * PS)
    assert s == pytest.approx(44565.56377319392, rel=1e-9)
    assert thermal_sigma(0.01, 6e5, 1e-24, 0.0, 1e-13) == 0.0
    with pytest.raises(ValueError):
        thermal_sigma(0.01, 6e5, 1e-24, 300.0, 0.0)


def test_thermal_sample_variance():
    mat = MaterialParams.from_cgs(600, 0.01, 0.6)
    vol, dt = 1e-24, 1e-13
    rng = np.random.default_rng(0)
    x = np.array([sample_thermal_field(mat, vol, 300.0, dt, rng) for _ in range(20000)])
    sig2 = thermal_sigma(0.01, 6e5, vol, 300.0, dt) ** 2
    assert abs(x.var() / sig2 - 1) < 0.05
    assert abs(x.mean()) < 0.05 * np.sqrt(sig2)


def test_zero_temperature_draws_nothing():
    mat = MaterialParams.from_cgs(600, 0.01, 0.6)
    rng = np.random.default_rng(0)
    before = rng.bit_generator.state
    assert not np.any(sample_thermal_field(mat, 1e-24, 0.0, 1e-13, rng))
    assert rng.bit_generator.state == before


def test_step_normals_are_keyed_by_step():
    block = step_normals(7, 10, 5)
    assert block.shape == (5, 6)
    assert np.array_equal(block[3], step_normals(7, 13)[0])
    assert not np.array_equal(step_normals(8, 13)[0], block[3])


def _numpy_rhs(dev, voltage):
    area, lz = dev.geometry.area, dev.geometry.lz
    p1, p2 = np.array(dev.p1), np.array(dev.p2)

    def f(t, y, hth):
        r = resistance_series(y[None], dev)[0]
        j = voltage / (r * area)
        return llg_rhs_array(y, dev.material, dev.exchange, j, p1, p2, hth, thickness=lz,
                             efficiency=dev.efficiency, exchange_channel="field",
                             single=dev.single)
    return f


@pytest.mark.parametrize("label", ["afmtj", "mtj"])
@pytest.mark.parametrize("temperature", [0.0, 300.0])
def test_kernel_matches_numpy_reference(label, temperature, request):
    dev = request.getfixturevalue(label)
    opts = SolverOptions(t_end=150 * PS, temperature=temperature, rng_seed=11)
    init = write_initial_state(dev.kind)
    thermal = ThermalSpec(dev.material.alpha, dev.material.Ms, dev.geometry.volume,
                          temperature, seed=11)
    ref = integrate_adaptive(_numpy_rhs(dev, -1.0), init, opts, thermal)
    got = simulate(dev, -1.0, init, opts)
    assert np.array_equal(ref.times, got.times)
    assert np.max(np.abs(ref.states - got.states)) < 1e-9
    assert got.stats.accepted == ref.stats.accepted
    assert got.stats.rejected == ref.stats.rejected
