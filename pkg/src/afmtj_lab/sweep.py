"""Voltage sweeps, Nelder-Mead calibration against reference curves, result emission."""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .device import DeviceKind, SwitchCriterion
from .integrator import NumericalError, SolverOptions
from .transient import PulseSpec, run_write
from .util import atomic_write_text

log = logging.getLogger(__name__)

DEFAULT_VOLTAGES = tuple(np.round(np.arange(0.5, 1.21, 0.1), 1))
CSV_HEADER = ["device", "voltage_V", "latency_ps", "energy_fJ", "switched"]


@dataclass(frozen=True)
class SweepConfig:
    devices: dict  # label -> DeviceParams
    voltages: tuple = DEFAULT_VOLTAGES
    solver: SolverOptions = field(default_factory=SolverOptions)
    crit: SwitchCriterion = field(default_factory=SwitchCriterion)
    pulse_width: float = 5e-9
    polarity: int = -1
    output: str = None

    def __post_init__(self):
        v = tuple(float(x) for x in self.voltages)
        if not v:
            raise ValueError("voltage list is empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("voltages must be strictly increasing")
        if not self.devices:
            raise ValueError("no devices to sweep")
        devices = self.devices
        if not isinstance(devices, dict):
            devices = {d.kind.value: d for d in devices}
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "devices", dict(devices))


@dataclass(frozen=True)
class SweepRow:
    device: str
    voltage: float
    latency_ps: float = None
    energy_fJ: float = None
    switched: bool = False


@dataclass
class SweepTable:
    rows: list

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: (r.device, r.voltage))

    def __eq__(self, other):
        return isinstance(other, SweepTable) and self.rows == other.rows

    def __len__(self):
        return len(self.rows)

    def get(self, device, voltage):
        for r in self.rows:
            if r.device == device and abs(r.voltage - voltage) < 1e-9:
                return r
        raise KeyError((device, voltage))

    def series(self, device):
        rows = [r for r in self.rows if r.device == device]
        nan = float("nan")
        return (np.array([r.voltage for r in rows]),
                np.array([nan if r.latency_ps is None else r.latency_ps for r in rows]),
                np.array([nan if r.energy_fJ is None else r.energy_fJ for r in rows]))

    # -- serialization ----------------------------------------------------

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.device, repr(r.voltage),
                        "" if r.latency_ps is None else repr(r.latency_ps),
                        "" if r.energy_fJ is None else repr(r.energy_fJ),
                        "true" if r.switched else "false"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rd = csv.reader(io.StringIO(text))
        header = next(rd)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected sweep CSV header {header}")
        rows = []
        for dev, v, lat, en, sw in rd:
            rows.append(SweepRow(dev, float(v), float(lat) if lat else None,
                                 float(en) if en else None, sw == "true"))
        return cls(rows)

    def to_json(self):
        return json.dumps({"rows": [asdict(r) for r in self.rows]}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls([SweepRow(**r) for r in json.loads(text)["rows"]])


def _run_point(args):
    label, device, v, solver, crit, width, polarity = args
    pulse = PulseSpec(v, width, polarity)
    try:
        res = run_write(device, pulse, solver, crit)
    except NumericalError as exc:
        log.warning("%s at %.2f V failed: %s", label, v, exc)
        return SweepRow(label, v)
    if not res.switched:
        return SweepRow(label, v)
    return SweepRow(label, v, res.latency * 1e12, res.energy * 1e15, True)


def voltage_sweep(cfg, jobs=1):
    """One write transient per (device, voltage); failures become unswitched rows."""
    tasks = [(label, dev, v, cfg.solver, cfg.crit, cfg.pulse_width, cfg.polarity)
             for label, dev in sorted(cfg.devices.items()) for v in cfg.voltages]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_run_point, tasks))
    else:
        rows = [_run_point(t) for t in tasks]
    return SweepTable(rows)


def emit_results(table, fmt, path):
    if fmt == "csv":
        text = table.to_csv()
    elif fmt == "json":
        text = table.to_json()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    atomic_write_text(path, text)
    return path


def read_results(path):
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return SweepTable.from_json(text)
    return SweepTable.from_csv(text)


# -- calibration ---------------------------------------------------------

OBSERVABLES = ("latency", "energy")
FREE_PARAMS = ("omega_E", "Hk", "r_p", "eta")


@dataclass(frozen=True)
class CalibrationTarget:
    voltage: float
    observable: str
    value: float  # s for latency, J for energy
    weight: float = 1.0

    def __post_init__(self):
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}")
        if not self.value > 0 or not self.weight > 0:
            raise ValueError("target value and weight must be positive")


@dataclass(frozen=True)
class CalibrationProblem:
    free: tuple
    targets: tuple
    tolerance: float = 0.10
    max_evals: int = 500
    solver: SolverOptions = field(default_factory=SolverOptions)
    crit: SwitchCriterion = field(default_factory=SwitchCriterion)
    pulse_width: float = 5e-9
    polarity: int = -1

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "targets", tuple(self.targets))
        for p in self.free:
            if p not in FREE_PARAMS:
                raise ValueError(f"cannot calibrate {p!r}; choose from {FREE_PARAMS}")
        if len(self.targets) < len(self.free):
            raise ValueError("need at least as many targets as free parameters")


@dataclass
class CalibrationResult:
    device: object
    residuals: list  # (target, simulated value or None, relative residual)
    converged: bool
    n_evals: int
    objective: float

    def report(self):
        return {
            "converged": self.converged,
            "n_evals": self.n_evals,
            "objective": self.objective,
            "parameters": self.device.to_dict(),
            "residuals": [
                {"voltage_V": t.voltage, "observable": t.observable,
                 "target": t.value, "simulated": s, "relative_residual": r}
                for t, s, r in self.residuals
            ],
        }


MISS_PENALTY = 1e3


def _lower_bound(name, base):
    # keep the MTJ perpendicular: Hk must stay above the demag field
    if name == "Hk" and base.kind is DeviceKind.MTJ:
        return base.material.Nz * base.material.Ms
    return 0.0


def simulate_targets(device, problem):
    """Simulated value for each target (None when the device did not switch)."""
    out = []
    cache = {}
    for t in problem.targets:
        if t.voltage not in cache:
            pulse = PulseSpec(t.voltage, problem.pulse_width, problem.polarity)
            try:
                cache[t.voltage] = run_write(device, pulse, problem.solver, problem.crit)
            except NumericalError:
                cache[t.voltage] = None
        res = cache[t.voltage]
        if res is None or not res.switched:
            out.append(None)
        else:
            out.append(res.latency if t.observable == "latency" else res.energy)
    return out


def _residuals(device, problem):
    sims = simulate_targets(device, problem)
    res = [None if s is None else (s - t.value) / t.value for s, t in zip(sims, problem.targets)]
    if any(r is None for r in res):
        obj = MISS_PENALTY
    else:
        obj = float(sum(t.weight * r * r for t, r in zip(problem.targets, res)))
    return sims, res, obj


def calibrate(problem, base, initial_step=0.2):
    """Fit ``problem.free`` on ``base`` by Nelder-Mead over log-parameters.

    Minimizes the weighted sum of squared relative residuals. Returns the
    best point found; ``converged`` means every residual is within
    ``problem.tolerance``.
    """
    lows = [_lower_bound(p, base) for p in problem.free]
    x0 = np.array([np.log(base.value(p) - lo) for p, lo in zip(problem.free, lows)])

    def device_at(x):
        return base.with_values(**{p: lo + float(np.exp(xi))
                                   for p, lo, xi in zip(problem.free, lows, x)})

    n_evals = 0
    if problem.free:
        def f(x):
            nonlocal n_evals
            n_evals += 1
            try:
                dev = device_at(x)
            except ValueError:
                return MISS_PENALTY
            return _residuals(dev, problem)[2]

        simplex = np.vstack([x0] + [x0 + initial_step * e for e in np.eye(len(x0))])
        opt = minimize(f, x0, method="Nelder-Mead",
                       options={"maxfev": problem.max_evals, "initial_simplex": simplex,
                                "xatol": 1e-9, "fatol": 1e-16})
        best = device_at(opt.x)
    else:
        best = base
    sims, res, obj = _residuals(best, problem)
    n_evals += 1
    converged = all(r is not None and abs(r) <= problem.tolerance for r in res)
    return CalibrationResult(best, list(zip(problem.targets, sims, res)), converged,
                             n_evals, obj)
