"""Adaptive RK4 time stepping and the stochastic thermal field.

Step control is step doubling: one step of ``dt`` is compared against two of
``dt/2``; the two-half-step result is kept. Both sublattice vectors are
renormalized after every accepted step and the drift before renormalization
is recorded.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import CONST, PS
from .magdyn import SublatticeState


class NumericalError(RuntimeError):
    """Non-finite values appeared during integration."""

    def __init__(self, msg, t=None, state=None):
        super().__init__(msg if t is None else f"{msg} at t = {t:.6e} s")
        self.t = t
        self.state = state


class StiffnessError(NumericalError):
    """The error tolerance cannot be met at the minimum step."""


@dataclass(frozen=True)
class SolverOptions:
    t_end: float = 5e-9
    dt_base: float = 0.1 * PS
    dt_min: float = 0.01 * PS
    dt_max: float = 1.0 * PS
    rel_tol: float = 1e-7
    sample_interval: float = 1.0 * PS
    temperature: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_base <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_base <= dt_max, got "
                             f"{self.dt_min}, {self.dt_base}, {self.dt_max}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")

    def replace(self, **kw):
        from dataclasses import replace
        return replace(self, **kw)

    def sample_times(self):
        n = int(np.floor(self.t_end / self.sample_interval + 1e-9))
        t = np.arange(n + 1) * self.sample_interval
        if self.t_end - t[-1] > 1e-9 * self.sample_interval:
            t = np.append(t, self.t_end)
        return t


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    dt_lo: float = np.inf
    dt_hi: float = 0.0
    max_drift: float = 0.0


@dataclass
class Trajectory:
    """Sampled magnetization history.

    ``states`` has shape ``(n, 2, 3)``; ``resistance`` and ``current`` are
    filled in by the transient layer (NaN otherwise).
    """

    times: np.ndarray
    states: np.ndarray
    resistance: np.ndarray = None
    current: np.ndarray = None
    stats: StepStats = field(default_factory=StepStats)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 2, 3)
        n = len(self.times)
        if self.states.shape[0] != n:
            raise ValueError("times and states differ in length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.resistance is None:
            self.resistance = np.full(n, np.nan)
        if self.current is None:
            self.current = np.full(n, np.nan)
        if len(self.resistance) != n or len(self.current) != n:
            raise ValueError("aux arrays must match the number of samples")

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return SublatticeState.from_array(self.states[i])


@dataclass(frozen=True)
class ThermalSpec:
    """Thermal-field source for one trajectory.

    ``volume`` is the sublattice volume in m^3. Standard normals for accepted
    step ``k`` come from a Philox stream keyed by ``(seed, k)``, so rejected
    and retried steps reuse the same draw rescaled to the new ``dt``.
    """

    alpha: float
    Ms: float
    volume: float
    temperature: float = 0.0
    seed: int = 0

    @property
    def active(self):
        return self.temperature > 0


def thermal_sigma(alpha, Ms, volume, temperature, dt):
    """Per-component standard deviation of the thermal field, A/m."""
    if temperature < 0 or volume <= 0 or dt <= 0:
        raise ValueError("need T >= 0, V > 0, dt > 0")
    var = 2 * alpha * CONST.kB * temperature / (CONST.gamma * CONST.mu0**2 * Ms * volume * dt)
    return np.sqrt(var)


def sample_thermal_field(mat, volume, temperature, dt, rng):
    """One ``(2, 3)`` thermal-field draw. Consumes no draws when T = 0."""
    if temperature == 0:
        return np.zeros((2, 3))
    sig = thermal_sigma(mat.alpha, mat.Ms, volume, temperature, dt)
    return sig * rng.standard_normal((2, 3))


def step_normals(seed, step, count=1):
    """Standard normals for steps ``step .. step+count-1``, shape ``(count, 6)``."""
    out = np.empty((count, 6))
    for i in range(count):
        bg = np.random.Philox(key=int(seed), counter=int(step + i))
        out[i] = np.random.Generator(bg).standard_normal(6)
    return out


def rk4_increment(f, t, y, dt):
    """Classical RK4 on a flat array; no normalization."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _renormalize(y):
    n = np.linalg.norm(y, axis=-1)
    drift = float(np.max(np.abs(n - 1.0)))
    return y / n[:, None], drift


def _as_array(state):
    if isinstance(state, SublatticeState):
        return state.as_array()
    return np.asarray(state, dtype=float).reshape(2, 3)


def _check(y, t):
    if not np.all(np.isfinite(y)):
        raise NumericalError("non-finite state", t=t, state=y)


def rk4_step(rhs, state, dt, t=0.0, h_thermal=None):
    """One RK4 step of ``rhs(t, y, h_thermal) -> dy/dt`` followed by renormalization.

    Returns ``(new_state, drift)`` where ``drift`` is the largest deviation of
    a sublattice norm from 1 before renormalization.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    hth = np.zeros((2, 3)) if h_thermal is None else h_thermal
    y = rk4_increment(lambda s, v: rhs(s, v, hth), t, _as_array(state), dt)
    _check(y, t)
    y, drift = _renormalize(y)
    return SublatticeState.from_array(y), drift


def integrate_adaptive(rhs, initial, opts, thermal=None):
    """Integrate ``rhs(t, y, h_thermal)`` from ``initial`` to ``opts.t_end``.

    Reference implementation in numpy; the write path uses the compiled
    equivalent in ``_kernel``.
    """
    y = _as_array(initial).copy()
    ts = opts.sample_times()
    out = np.empty((len(ts), 2, 3))
    out[0] = y
    isample = 1
    stats = StepStats()
    t, dt, k = 0.0, opts.dt_base, 0
    use_noise = thermal is not None and thermal.active
    zero = np.zeros((2, 3))

    while isample < len(ts) and t < opts.t_end:
        remaining = opts.t_end - t
        h = dt if dt <= remaining else max(remaining, opts.dt_min)
        if use_noise:
            sig = thermal_sigma(thermal.alpha, thermal.Ms, thermal.volume,
                                thermal.temperature, h)
            hth = sig * step_normals(thermal.seed, k)[0].reshape(2, 3)
        else:
            hth = zero

        def f(s, v):
            return rhs(s, v, hth)

        full = rk4_increment(f, t, y, h)
        mid = rk4_increment(f, t, y, 0.5 * h)
        new = rk4_increment(f, t + 0.5 * h, mid, 0.5 * h)
        _check(full, t)
        _check(new, t)
        err = float(np.max(np.abs(full - new)))
        if err > opts.rel_tol:
            if h <= opts.dt_min:
                raise StiffnessError(
                    f"error {err:.3e} above tolerance at dt_min", t=t, state=y)
            dt = max(0.5 * h, opts.dt_min)
            stats.rejected += 1
            continue
        new, drift = _renormalize(new)
        stats.accepted += 1
        stats.max_drift = max(stats.max_drift, drift)
        stats.dt_lo = min(stats.dt_lo, h)
        stats.dt_hi = max(stats.dt_hi, h)
        t_new = t + h
        while isample < len(ts) and ts[isample] <= t_new:
            w = (ts[isample] - t) / h
            out[isample] = _renormalize(y + w * (new - y))[0]
            isample += 1
        y, t, k = new, t_new, k + 1
        if err < opts.rel_tol / 32:
            dt = min(2 * h, opts.dt_max)
        else:
            dt = max(h, opts.dt_min)

    return Trajectory(ts[:isample], out[:isample], stats=stats)
