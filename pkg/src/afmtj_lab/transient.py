"""Write and read transients: pulse -> resistance-dependent current -> torque -> trajectory."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .device import (SwitchCriterion, detect_switch, order_z, resistance_series,
                     write_initial_state)
from .integrator import (NumericalError, SolverOptions, StepStats, StiffnessError,
                         Trajectory, step_normals, thermal_sigma)
from .util import atomic_write_text

READ_CEILING = 0.2  # V
READ_WINDOW = 100e-12  # s
NOISE_CHUNK = 4096


class ReadDisturbError(ValueError):
    """Read bias above the configured disturb ceiling."""


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular voltage pulse.

    ``polarity=-1`` drives current from the free layer into the fixed layer,
    which pushes the parallel (+z) state toward antiparallel.
    """

    amplitude: float
    width: float = 5e-9
    polarity: int = -1

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("pulse amplitude must be >= 0")
        if not self.width > 0:
            raise ValueError("pulse width must be positive")
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")

    @property
    def voltage(self):
        return self.polarity * self.amplitude


@dataclass
class TransientResult:
    trajectory: Trajectory
    latency: float = None
    energy: float = None
    voltage: float = 0.0

    @property
    def switched(self):
        return self.latency is not None

    @property
    def final_state(self):
        return self.trajectory.state(-1)


def simulate(device, voltage, initial, opts):
    """Integrate the device under constant bias ``voltage`` with circuit coupling.

    Returns a :class:`Trajectory` with per-sample resistance and current.
    """
    par = device.kernel_params(voltage)
    y = np.ascontiguousarray(initial.as_array().reshape(6), dtype=float)
    ts = opts.sample_times()
    samples = np.zeros((len(ts), 6))
    samples[0] = y
    stats = np.array([0.0, 0.0, np.inf, 0.0, 0.0])
    temperature = opts.temperature if opts.temperature > 0 else device.temperature
    if temperature > 0:
        sigma_unit = thermal_sigma(device.material.alpha, device.material.Ms,
                                   device.geometry.volume, temperature, 1.0)
    else:
        sigma_unit = 0.0
    t, dt, isample, k = 0.0, opts.dt_base, 1, 0
    noise = np.zeros((0, 6))
    while True:
        if sigma_unit > 0:
            noise = step_normals(opts.rng_seed, k, NOISE_CHUNK)
        status, t, dt, isample, k = _kernel.integrate(
            y, t, dt, isample, k, par, opts.t_end, opts.dt_min, opts.dt_max,
            opts.rel_tol, ts, samples, noise, sigma_unit, stats)
        if status != _kernel.NEED_NOISE:
            break
    if status == _kernel.STIFF:
        raise StiffnessError("error above tolerance at dt_min", t=t, state=y.reshape(2, 3))
    if status == _kernel.NONFINITE:
        raise NumericalError("non-finite state", t=t, state=y.reshape(2, 3))
    states = samples[:isample].reshape(-1, 2, 3)
    r = resistance_series(states, device)
    st = StepStats(int(stats[0]), int(stats[1]), stats[2], stats[3], stats[4])
    return Trajectory(ts[:isample], states, r, voltage / r, st)


def write_energy(traj, pulse, latency):
    """Trapezoidal integral of V*I over ``[0, latency]`` in joules.

    ``pulse`` is a :class:`PulseSpec` or the applied voltage itself.
    """
    voltage = pulse.voltage if isinstance(pulse, PulseSpec) else float(pulse)
    t = traj.times
    if latency < t[0] or latency > t[-1]:
        raise ValueError(f"latency {latency!r} outside the trajectory span")
    p = voltage * traj.current
    n = np.searchsorted(t, latency, side="right")
    e = np.trapezoid(p[:n], t[:n]) if n > 1 else 0.0
    if n < len(t) and latency > t[n - 1]:
        p_end = np.interp(latency, t, p)
        e += 0.5 * (p[n - 1] + p_end) * (latency - t[n - 1])
    return float(e)


def run_write(device, pulse, opts=None, crit=None, initial=None):
    """Apply ``pulse`` to ``device`` and extract latency and write energy.

    The default start state is the one the pulse polarity writes away from,
    tilted by 1 degree in the x-z plane.
    """
    crit = crit or SwitchCriterion()
    opts = (opts or SolverOptions()).replace(t_end=pulse.width)
    if initial is None:
        initial = write_initial_state(device.kind, up=pulse.polarity < 0)
    traj = simulate(device, pulse.voltage, initial, opts)
    latency = detect_switch(traj, crit, device.kind) if pulse.amplitude > 0 else None
    energy = None if latency is None else write_energy(traj, pulse.voltage, latency)
    return TransientResult(traj, latency, energy, pulse.voltage)


@dataclass(frozen=True)
class ReadResult:
    bit: int
    current: float
    disturbed: bool
    resistance: float


def run_read(device, v_read, opts=None, state=None, ceiling=READ_CEILING,
             disturb_tol=0.05):
    """Low-bias read: simulate a 100 ps window and compare R against sqrt(r_p r_ap).

    ``bit`` is 1 for the low-resistance (parallel) state.
    """
    if abs(v_read) > ceiling:
        raise ReadDisturbError(f"read voltage {v_read} V exceeds the disturb ceiling {ceiling} V")
    if state is None:
        state = write_initial_state(device.kind, up=True, tilt_deg=0.0)
    opts = (opts or SolverOptions()).replace(t_end=READ_WINDOW)
    traj = simulate(device, v_read, state, opts)
    r = float(np.mean(traj.resistance))
    i = float(np.mean(traj.current))
    lz = order_z(traj, device.kind)
    disturbed = bool(np.max(np.abs(lz - lz[0])) > disturb_tol)
    r_ref = np.sqrt(device.resistance.r_p * device.resistance.r_ap)
    return ReadResult(int(r < r_ref), i, disturbed, r)


TRAJECTORY_HEADER = ["t_ps", "m1x", "m1y", "m1z", "m2x", "m2y", "m2z", "lz", "R_ohm", "I_uA"]


def trajectory_csv(traj, kind):
    lz = order_z(traj, kind)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for i, t in enumerate(traj.times):
        m = traj.states[i].reshape(6)
        w.writerow([repr(float(t * 1e12)), *(repr(float(x)) for x in m),
                    repr(float(lz[i])), repr(float(traj.resistance[i])),
                    repr(float(traj.current[i] * 1e6))])
    return buf.getvalue()


def export_trajectory(traj, path, kind):
    return atomic_write_text(path, trajectory_csv(traj, kind))
