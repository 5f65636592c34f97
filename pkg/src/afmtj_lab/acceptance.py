"""Acceptance checks, one per criterion, shared by ``afmtj-lab validate`` and the test suite.

Criteria 1-3 compare a freshly calibrated model against the reference write
curves; criterion 8 is a regression harness over the shipped profiles and
cards. Everything else is an oracle or property check on the numerical core.
"""

import contextlib
import filecmp
import io
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bitline import SenseConfig, truth_table
from .constants import CONST, PS
from .device import DeviceKind, write_initial_state
from .integrator import rk4_step, sample_thermal_field, thermal_sigma
from .imc import speedup_report
from .magdyn import ExchangeParams, MaterialParams, exchange_torque, gilbert_rhs, normalize
from .sweep import SweepConfig, calibrate, voltage_sweep
from .transient import PulseSpec, run_write, simulate
from . import _kernel

LATENCY_TOL = 0.15
TARGET_TOL = 0.10
ENERGY_TOL = 0.15
MTJ_ENERGY_VOLTAGES = (0.5, 0.9, 1.0, 1.2)
LATENCY_RATIO_BAND = (6.4, 9.6)
ENERGY_RATIO_BAND = (7.2, 10.8)
BAR_TOL = 0.05
CARD_RTOL = 1e-9
LOGIC_TRUTH = {"nand": lambda a, b: int(not (a and b)), "xor": lambda a, b: a ^ b}
REPRO_COMMANDS = ("write-sim", "sweep", "calibrate", "logic", "imc")


@dataclass
class Check:
    criterion: int
    name: str
    parts: list = field(default_factory=list)  # (label, ok, detail)

    def add(self, label, ok, detail=""):
        self.parts.append((label, bool(ok), detail))

    @property
    def passed(self):
        return bool(self.parts) and all(ok for _, ok, _ in self.parts)

    @property
    def detail(self):
        bad = [f"{lab}: {d}" for lab, ok, d in self.parts if not ok]
        if bad:
            return f"{len(bad)}/{len(self.parts)} failed; " + "; ".join(bad)
        return f"{len(self.parts)} checks ok"

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  [{self.criterion}] {self.name}: {self.detail}"


def _rel(sim, ref):
    return (sim - ref) / ref


class Context:
    """Lazily computed artifacts shared by several criteria."""

    def __init__(self, setup, jobs=1):
        self.setup = setup
        self.jobs = jobs
        self._cal = None
        self._table = None

    @property
    def fig3(self):
        return self.setup.references["fig3"]

    @property
    def fig4(self):
        return self.setup.references["fig4"]

    def calibrations(self):
        if self._cal is None:
            self._cal = {k: calibrate(p, b) for k, (b, p) in sorted(self.setup.calibration.items())}
        return self._cal

    def table(self):
        """Sweep of the freshly calibrated devices."""
        if self._table is None:
            s = self.setup
            devs = {k: r.device for k, r in self.calibrations().items()}
            cfg = SweepConfig(devs, s.voltages, s.solver, s.crit, s.pulse_width, s.polarity)
            self._table = voltage_sweep(cfg, jobs=self.jobs)
        return self._table


def _ref_value(fig3, label, key, v):
    vs = fig3["voltage_V"]
    for i, x in enumerate(vs):
        if abs(x - v) < 1e-9:
            return fig3[label][key][i]
    return None


# -- criteria 1-3: calibrated reproduction of the write curves ---------------

def check_latency(ctx):
    c = Check(1, "write latency after calibration (+-15% all points, +-10% fitted targets)")
    for label, res in ctx.calibrations().items():
        for t, sim, r in res.residuals:
            ok = r is not None and abs(r) <= TARGET_TOL
            c.add(f"{label} target {t.observable}@{t.voltage:g}V", ok,
                  "no switch" if r is None else f"{r:+.1%}")
    table = ctx.table()
    for label in ctx.calibrations():
        for v in ctx.setup.voltages:
            ref = _ref_value(ctx.fig3, label, "latency_ps", v)
            if ref is None:
                continue
            row = table.get(label, v)
            if not row.switched:
                c.add(f"{label} {v:g}V", False, "no switch")
                continue
            r = _rel(row.latency_ps, ref)
            c.add(f"{label} {v:g}V", abs(r) <= LATENCY_TOL,
                  f"{row.latency_ps:.1f} ps vs {ref} ps ({r:+.1%})")
    return c


def check_energy(ctx):
    c = Check(2, "write energy after calibration (+-15%; MTJ at 0.5/0.9/1.0/1.2 V)")
    table = ctx.table()
    for label in ctx.calibrations():
        volts = ctx.setup.voltages if label == "AFMTJ" else MTJ_ENERGY_VOLTAGES
        for v in volts:
            ref = _ref_value(ctx.fig3, label, "energy_fJ", v)
            row = table.get(label, v)
            if ref is None or not row.switched:
                c.add(f"{label} {v:g}V", False, "no reference" if ref is None else "no switch")
                continue
            r = _rel(row.energy_fJ, ref)
            c.add(f"{label} {v:g}V", abs(r) <= ENERGY_TOL,
                  f"{row.energy_fJ:.2f} fJ vs {ref} fJ ({r:+.1%})")
    return c


def check_ratios(ctx):
    c = Check(3, "MTJ/AFMTJ ratios at 1.0 V")
    table = ctx.table()
    a, m = table.get("AFMTJ", 1.0), table.get("MTJ", 1.0)
    if not (a.switched and m.switched):
        c.add("switching", False, "a device did not switch at 1.0 V")
        return c
    for name, ratio, (lo, hi) in (("latency", m.latency_ps / a.latency_ps, LATENCY_RATIO_BAND),
                                  ("energy", m.energy_fJ / a.energy_fJ, ENERGY_RATIO_BAND)):
        c.add(name, lo <= ratio <= hi, f"{ratio:.2f}x not in [{lo}, {hi}]"
              if not lo <= ratio <= hi else f"{ratio:.2f}x")
    return c


# -- criterion 4: numerical core ---------------------------------------------

def _precession_rhs(h):
    hv = np.array([0.0, 0.0, h])

    def f(t, y, hth):
        return np.stack([gilbert_rhs(y[0], hv, np.zeros(3), 0.0),
                         gilbert_rhs(y[1], hv, np.zeros(3), 0.0)])
    return f


def larmor_frequency(mu0_h=0.1, dt=0.1 * PS, periods=2):
    """Precession frequency measured from an undamped RK4 run."""
    h = mu0_h / CONST.mu0
    f0 = CONST.gamma_mu0 * h / (2 * np.pi)
    n = int(round(periods / (f0 * dt)))
    rhs = _precession_rhs(h)
    y = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    phase = [0.0]
    state = y
    for k in range(n):
        s, _ = rk4_step(rhs, state, dt, k * dt)
        state = s.as_array()
        phase.append(np.arctan2(state[0, 1], state[0, 0]))
    unwrapped = np.unwrap(np.array(phase))
    return unwrapped[-1] / (2 * np.pi * n * dt), f0


def rk4_halving_ratio(mu0_h=0.1, n_steps=40):
    """End-point error of one precession period in N steps over the error in 2N."""
    h = mu0_h / CONST.mu0
    period = 2 * np.pi / (CONST.gamma_mu0 * h)
    rhs = _precession_rhs(h)
    errs = []
    for n in (n_steps, 2 * n_steps):
        dt = period / n
        state = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        for k in range(n):
            s, _ = rk4_step(rhs, state, dt, k * dt)
            state = s.as_array()
        errs.append(np.linalg.norm(state[0] - [1.0, 0.0, 0.0]))
    return errs[0] / errs[1]


def orthogonality_worst(devices, n=100_000, seed=1):
    """Worst |m . dm/dt| / |dm/dt| over random states, biases and thermal fields."""
    rng = np.random.default_rng(seed)
    devs = list(devices)
    worst = 0.0
    out = np.empty(6)
    for i in range(n):
        dev = devs[i % len(devs)]
        par = dev.kernel_params(rng.uniform(-1.5, 1.5))
        y = normalize(rng.standard_normal((2, 3))).reshape(6)
        hth = rng.standard_normal(6) * 1e5
        _kernel.rhs(y, hth, par, out)
        for s in range(1 if dev.single else 2):
            m, d = y[3 * s:3 * s + 3], out[3 * s:3 * s + 3]
            nd = np.linalg.norm(d)
            if nd > 0:
                worst = max(worst, abs(np.dot(m, d)) / nd)
    return worst


def check_numerics(ctx):
    c = Check(4, "numerical-core oracles")
    f, f0 = larmor_frequency()
    err = abs(f - f0) / f0
    c.add("Larmor frequency", err < 1e-3, f"{f / 1e9:.5f} GHz vs {f0 / 1e9:.5f} GHz ({err:.1e})")
    ratio = rk4_halving_ratio()
    c.add("RK4 halving ratio", 12 <= ratio <= 20, f"{ratio:.2f}")
    devs = [r.device for r in ctx.calibrations().values()]
    worst = orthogonality_worst(devs)
    c.add("RHS orthogonality", worst <= 1e-12, f"{worst:.1e}")
    s = ctx.setup
    drift = 0.0
    for dev in devs:
        for v in s.voltages:
            res = run_write(dev, PulseSpec(v, s.pulse_width, s.polarity), s.solver, s.crit)
            drift = max(drift, res.trajectory.stats.max_drift)
    c.add("norm drift per step", drift <= 1e-6, f"{drift:.1e}")
    return c


# -- criterion 5: physics properties ------------------------------------------

def mirror_deviation(device, voltage=1.0, pulse_width=1e-9, opts=None, crit=None):
    """Largest difference between a write and its mirrored counterpart.

    Flipping the pulse polarity and the starting orientation maps the
    trajectory through a half turn about x, so z (and y) components change
    sign. Returns ``(max z deviation, max full-state deviation, run, mirror run)``.
    Needs a device with tmr = 0: with a finite TMR the two runs see different
    resistances and the bias currents differ.
    """
    a = run_write(device, PulseSpec(voltage, pulse_width, -1), opts, crit)
    b = run_write(device, PulseSpec(voltage, pulse_width, +1), opts, crit)
    sa, sb = a.trajectory.states, b.trajectory.states
    if sa.shape != sb.shape:
        return np.inf, np.inf, a, b
    dz = float(np.max(np.abs(sa[..., 2] + sb[..., 2])))
    full = float(np.max(np.abs(sa * np.array([1.0, -1.0, -1.0]) - sb)))
    return dz, full, a, b


def check_physics(ctx):
    c = Check(5, "physics properties")
    rng = np.random.default_rng(2)
    ex = ExchangeParams(omega_E=3.7e11)
    bad = 0
    for _ in range(10_000):
        m1, m2 = normalize(rng.standard_normal((2, 3)))
        if not np.array_equal(exchange_torque(m1, m2, ex), -exchange_torque(m2, m1, ex)):
            bad += 1
    c.add("exchange antisymmetry", bad == 0, f"{bad} inexact pairs of 10000")

    cals = ctx.calibrations()
    afm = cals["AFMTJ"].device if "AFMTJ" in cals else ctx.setup.devices["AFMTJ"]
    opts = ctx.setup.solver.replace(t_end=1e-9, temperature=0.0)
    traj = simulate(afm, 0.0, write_initial_state(DeviceKind.AFMTJ, tilt_deg=1.0), opts)
    dots = np.einsum("ij,ij->i", traj.states[:, 0], traj.states[:, 1])
    c.add("ground state", dots.max() <= -0.999, f"max m1.m2 = {dots.max():.6f}")

    dev = afm.with_values(tmr=0.0).replace(temperature=0.0)
    dz, full, a, b = mirror_deviation(dev, opts=ctx.setup.solver.replace(temperature=0.0),
                                      crit=ctx.setup.crit)
    same = a.latency == b.latency and a.energy == b.energy
    c.add("polarity mirror", dz <= 1e-9 and full <= 1e-9 and same,
          f"max |dz| {dz:.1e}, full state {full:.1e}, latency {a.latency} vs {b.latency}")
    return c


# -- criterion 6: thermal field -----------------------------------------------

def thermal_variance_error(n=100_000, temperature=300.0, seed=3):
    mat = MaterialParams.from_cgs(600, 0.01, 0.6)
    volume, dt = 50e-9 * 50e-9 * 1e-9, 0.1 * PS
    rng = np.random.default_rng(seed)
    draws = np.array([sample_thermal_field(mat, volume, temperature, dt, rng) for _ in range(n)])
    var = draws.var()
    sig2 = thermal_sigma(mat.alpha, mat.Ms, volume, temperature, dt) ** 2
    return abs(var - sig2) / sig2


def check_thermal(ctx):
    c = Check(6, "thermal statistics")
    err = thermal_variance_error()
    c.add("variance at 300 K", err <= 0.05, f"relative error {err:.2%}")
    rng = np.random.default_rng(4)
    before = rng.bit_generator.state
    mat = MaterialParams.from_cgs(600, 0.01, 0.6)
    h = [sample_thermal_field(mat, 1e-24, 0.0, 1e-13, rng) for _ in range(100)]
    untouched = rng.bit_generator.state == before and not np.any(h)
    c.add("T = 0 draws", untouched, "generator state unchanged" if untouched else "draws consumed")
    return c


# -- criterion 7: bitline logic -----------------------------------------------

def check_logic(ctx):
    c = Check(7, "bitline NAND/XOR truth tables")
    lg = ctx.setup.logic
    for tmr in sorted(set(lg.tmr_grid) | {lg.rmodel.tmr}):
        rmodel = lg.rmodel.__class__(lg.rmodel.r_p, tmr)
        try:
            cfg = SenseConfig.auto(rmodel, lg.sense.v_read, lg.sense.margin_floor)
        except ValueError as exc:
            c.add(f"tmr {tmr:g}", False, str(exc))
            continue
        for op, fn in LOGIC_TRUTH.items():
            rows = truth_table(op, rmodel, cfg)
            wrong = [(r.a, r.b) for r in rows if r.out != fn(r.a, r.b)]
            margin = min(r.margin for r in rows)
            c.add(f"{op} tmr {tmr:g}", not wrong and margin > 0,
                  f"wrong rows {wrong}, min margin {margin * 1e6:.2f} uS")
    return c


# -- criterion 8: system-level regression -------------------------------------

def check_imc(ctx):
    c = Check(8, "in-memory speedup/energy regression (+-5% on 28 bars)")
    im, ref = ctx.setup.imc, ctx.fig4
    rep = speedup_report(im.profiles, im.cards, im.hierarchy, im.cpu)
    for metric in ("speedup", "energy_savings"):
        for dev in rep.devices():
            for w, target in zip(ref["workloads"], ref[metric][dev]):
                got = getattr(rep.get(w, dev), metric)
                c.add(f"{dev} {w} {metric}", abs(_rel(got, target)) <= BAR_TOL,
                      f"{got:.3f} vs {target} ({_rel(got, target):+.1%})")
            got, target = rep.average(dev, metric), ref[f"{metric}_average"][dev]
            c.add(f"{dev} average {metric}", abs(_rel(got, target)) <= BAR_TOL,
                  f"{got:.3f} vs {target} ({_rel(got, target):+.1%})")
    es = rep.get("bnn", "MTJ").energy_savings
    c.add("MTJ bnn energy savings < 1", es < 1, f"{es:.3f}")
    for w in ref["workloads"]:
        a, m = rep.get(w, "AFMTJ").speedup, rep.get(w, "MTJ").speedup
        c.add(f"{w} AFMTJ faster than MTJ", a > m, f"{a:.2f} vs {m:.2f}")

    # the shipped cards must be what the shipped devices produce at v_nom
    s = ctx.setup
    cfg = SweepConfig(s.devices, (im.v_nom,), s.solver, s.crit, s.pulse_width, s.polarity)
    table = voltage_sweep(cfg)
    for card in im.cards:
        row = table.get(card.label, im.v_nom)
        ok = row.switched and np.isclose(row.latency_ps * PS, card.t_write, rtol=CARD_RTOL, atol=0) \
            and np.isclose(row.energy_fJ * 1e-15, card.e_write, rtol=CARD_RTOL, atol=0)
        c.add(f"{card.label} card matches sweep", ok,
              f"card {card.t_write / PS:.3f} ps / {card.e_write * 1e15:.3f} fJ, "
              f"sweep {row.latency_ps} ps / {row.energy_fJ} fJ")
    return c


# -- criterion 9: reproducibility ----------------------------------------------

def _data_files(d):
    return sorted(p.name for p in Path(d).iterdir() if p.name != "run-manifest.json")


def check_repro(ctx, commands=REPRO_COMMANDS):
    from .cli import main
    c = Check(9, "byte-identical reruns")
    cfg = ctx.setup.source
    seed = str(ctx.setup.solver.rng_seed)
    with tempfile.TemporaryDirectory() as tmp:
        for cmd in commands:
            dirs = [Path(tmp) / f"{cmd}-{i}" for i in (0, 1)]
            with contextlib.redirect_stdout(io.StringIO()):
                codes = [main([cmd, "--config", cfg, "--out", str(d), "--seed", seed])
                         for d in dirs]
            files = _data_files(dirs[0])
            same = files == _data_files(dirs[1]) and bool(files)
            diff = [f for f in files if not filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False)]
            c.add(cmd, same and not diff and codes[0] == codes[1],
                  f"exit {codes}, differing {diff}")

    s = ctx.setup
    dev = s.devices.get("AFMTJ") or next(iter(s.devices.values()))
    opts = s.solver.replace(temperature=300.0, t_end=200e-12, rng_seed=s.solver.rng_seed + 7)
    init = write_initial_state(dev.kind)
    t1 = simulate(dev, -1.0, init, opts)
    t2 = simulate(dev, -1.0, init, opts)
    c.add("seeded thermal run", np.array_equal(t1.states, t2.states), "trajectories differ")
    return c


CRITERIA = {1: check_latency, 2: check_energy, 3: check_ratios, 4: check_numerics,
            5: check_physics, 6: check_thermal, 7: check_logic, 8: check_imc, 9: check_repro}


def run_all(setup, jobs=1, only=None):
    ctx = Context(setup, jobs)
    return [CRITERIA[k](ctx) for k in sorted(only or CRITERIA)]
