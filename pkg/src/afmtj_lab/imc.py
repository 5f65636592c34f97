"""Analytical in-memory-computing evaluator: device cards + workload profiles -> speedup and energy.

Each bulk operation costs one sense/activation plus one write phase (except
reads) plus controller overhead, spread over the columns of the hierarchy
level the workload runs in. Whatever cannot be offloaded stays on the CPU.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

PRIMITIVES = ("xor", "nand", "write", "read")
WRITE_PHASES = {"xor": 1, "nand": 1, "write": 1, "read": 0}
WORKLOADS = ("bnn", "img-grayscale", "img-threshold", "mac", "mat_add", "rmse")
REPORT_HEADER = ["workload", "device", "t_cpu_s", "e_cpu_J", "t_imc_s", "e_imc_J",
                 "speedup", "energy_savings"]
PROFILE_KEYS = ("name", "level", "cpu_cycles", "cpu_energy_J", "bulk_ops", "bits_per_op",
                "residual_cpu_cycles")


class ImcConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceCard:
    label: str
    t_write: float
    e_write: float
    t_sense: float
    e_sense: float

    def __post_init__(self):
        if min(self.t_write, self.e_write, self.t_sense, self.e_sense) <= 0:
            raise ImcConfigError(f"card {self.label}: all timings and energies must be positive")

    @classmethod
    def from_sweep(cls, table, label, t_sense, e_sense, v_nom=1.0):
        row = table.get(label, v_nom)
        if not row.switched:
            raise ImcConfigError(f"{label} did not switch at {v_nom} V; no card")
        return cls(label, row.latency_ps * 1e-12, row.energy_fJ * 1e-15, t_sense, e_sense)

    def to_dict(self):
        return {"label": self.label, "t_write_ps": self.t_write * 1e12,
                "e_write_fJ": self.e_write * 1e15, "t_sense_ps": self.t_sense * 1e12,
                "e_sense_fJ": self.e_sense * 1e15}

    @classmethod
    def from_dict(cls, d):
        return cls(d["label"], d["t_write_ps"] * 1e-12, d["e_write_fJ"] * 1e-15,
                   d["t_sense_ps"] * 1e-12, d["e_sense_fJ"] * 1e-15)


@dataclass(frozen=True)
class Level:
    name: str
    capacity: int  # bytes
    parallel_width: int


@dataclass(frozen=True)
class HierarchyConfig:
    levels: tuple
    t_ctrl: float = 0.0
    e_ctrl: float = 0.0

    def __post_init__(self):
        levels = tuple(lv if isinstance(lv, Level) else Level(**lv) for lv in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ImcConfigError("hierarchy needs at least one level")
        caps = [lv.capacity for lv in levels]
        if any(b <= a for a, b in zip(caps, caps[1:])):
            raise ImcConfigError("level capacities must increase down the hierarchy")
        if any(lv.parallel_width < 1 for lv in levels):
            raise ImcConfigError("parallel width must be >= 1")
        if self.t_ctrl < 0 or self.e_ctrl < 0:
            raise ImcConfigError("controller overheads must be >= 0")

    def level(self, name):
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise ImcConfigError(f"workload mapped to unknown level {name!r}")


@dataclass(frozen=True)
class CpuBaseline:
    f_cpu: float = 2e9
    avg_power: float = 1.2

    def __post_init__(self):
        if not (self.f_cpu > 0 and self.avg_power > 0):
            raise ImcConfigError("CPU frequency and power must be positive")


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    level: str
    cpu_cycles: float
    bulk_ops: dict
    bits_per_op: float
    residual_cpu_cycles: float = 0.0
    cpu_energy: float = None

    def __post_init__(self):
        unknown = set(self.bulk_ops) - set(PRIMITIVES)
        if unknown:
            raise ImcConfigError(f"{self.name}: unmapped primitive(s) {sorted(unknown)}")
        ops = {p: self.bulk_ops.get(p, 0) for p in PRIMITIVES}
        object.__setattr__(self, "bulk_ops", ops)
        if min(ops.values()) < 0 or self.cpu_cycles < 0 or self.bits_per_op < 0:
            raise ImcConfigError(f"{self.name}: counts must be >= 0")
        if not 0 <= self.residual_cpu_cycles <= self.cpu_cycles:
            raise ImcConfigError(f"{self.name}: residual cycles must lie in [0, cpu_cycles]")
        if self.cpu_energy is not None and self.cpu_energy < 0:
            raise ImcConfigError(f"{self.name}: cpu energy must be >= 0")

    def scaled(self, k):
        """The same workload run ``k`` times over: counts scale, bits per op do not."""
        return WorkloadProfile(self.name, self.level, self.cpu_cycles * k,
                               {p: n * k for p, n in self.bulk_ops.items()},
                               self.bits_per_op, self.residual_cpu_cycles * k,
                               None if self.cpu_energy is None else self.cpu_energy * k)

    def to_dict(self):
        return {"name": self.name, "level": self.level, "cpu_cycles": self.cpu_cycles,
                "cpu_energy_J": self.cpu_energy, "bulk_ops": dict(self.bulk_ops),
                "bits_per_op": self.bits_per_op,
                "residual_cpu_cycles": self.residual_cpu_cycles}

    @classmethod
    def from_dict(cls, d, where="profile"):
        from .config import check_keys
        check_keys(d, PROFILE_KEYS, (), where)
        check_keys(d["bulk_ops"], (), PRIMITIVES, f"{where}.bulk_ops")
        return cls(d["name"], d["level"], d["cpu_cycles"], d["bulk_ops"], d["bits_per_op"],
                   d["residual_cpu_cycles"], d["cpu_energy_J"])


def estimate_cpu(profile, base):
    t = profile.cpu_cycles / base.f_cpu
    e = profile.cpu_energy if profile.cpu_energy is not None else base.avg_power * t
    return t, e


def estimate_imc(profile, card, hier, base):
    width = hier.level(profile.level).parallel_width
    t_cpu, e_cpu = estimate_cpu(profile, base)
    t = e = 0.0
    for op, n in profile.bulk_ops.items():
        w = WRITE_PHASES[op]
        t += n * (card.t_sense + w * card.t_write + hier.t_ctrl)
        e += n * (profile.bits_per_op * (w * card.e_write + card.e_sense) + hier.e_ctrl)
    t = t / width + profile.residual_cpu_cycles / base.f_cpu
    if profile.cpu_cycles > 0:
        e += e_cpu * profile.residual_cpu_cycles / profile.cpu_cycles
    return t, e


@dataclass(frozen=True)
class ReportRow:
    workload: str
    device: str
    t_cpu: float
    e_cpu: float
    t_imc: float
    e_imc: float

    @property
    def speedup(self):
        return self.t_cpu / self.t_imc

    @property
    def energy_savings(self):
        return self.e_cpu / self.e_imc


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def devices(self):
        return sorted({r.device for r in self.rows})

    def get(self, workload, device):
        for r in self.rows:
            if r.workload == workload and r.device == device:
                return r
        raise KeyError((workload, device))

    def average(self, device, metric):
        return float(np.mean([getattr(r, metric) for r in self.rows if r.device == device]))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow([r.workload, r.device, repr(r.t_cpu), repr(r.e_cpu), repr(r.t_imc),
                        repr(r.e_imc), repr(r.speedup), repr(r.energy_savings)])
        for dev in self.devices():
            w.writerow(["average", dev, "", "", "", "", repr(self.average(dev, "speedup")),
                        repr(self.average(dev, "energy_savings"))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rd = csv.reader(io.StringIO(text))
        if next(rd) != REPORT_HEADER:
            raise ValueError("unexpected report header")
        rows = [ReportRow(w, d, *map(float, vals[:4]))
                for w, d, *vals in rd if w != "average"]
        return cls(rows)

    def to_json(self):
        out = {"rows": [dict(asdict(r), speedup=r.speedup, energy_savings=r.energy_savings)
                        for r in self.rows],
               "average": {d: {"speedup": self.average(d, "speedup"),
                               "energy_savings": self.average(d, "energy_savings")}
                           for d in self.devices()}}
        return json.dumps(out, indent=2) + "\n"


def speedup_report(profiles, cards, hier, base):
    names = [p.name for p in profiles]
    missing = [w for w in WORKLOADS if w not in names]
    if missing:
        raise ImcConfigError(f"missing workload profiles: {missing}")
    rows = []
    for p in profiles:
        t_cpu, e_cpu = estimate_cpu(p, base)
        for card in cards:
            t, e = estimate_imc(p, card, hier, base)
            rows.append(ReportRow(p.name, card.label, t_cpu, e_cpu, t, e))
    return EvalReport(rows)


# -- offline profile fitting ----------------------------------------------

def fit_profile(name, level, targets, cards, hier, base, cpu_cycles, mix):
    """Solve the linear cost model for a profile that hits four bar heights.

    ``targets`` is ``{label: (speedup, energy_savings)}`` for exactly two
    cards; ``mix`` splits the write-phase ops among xor/nand/write. The
    write-phase op count follows from the speedup difference and the bits per
    op from the energy difference; reads and residual CPU cycles then absorb
    what is left of both budgets for the first card. Raises when that
    requires negative counts.
    """
    ca, cb = cards
    (sa, esa), (sb, esb) = targets[ca.label], targets[cb.label]
    width = hier.level(level).parallel_width
    f = base.f_cpu
    t_cpu = cpu_cycles / f
    e_cpu = base.avg_power * t_cpu

    n_w = round(width * (t_cpu / sb - t_cpu / sa) / (cb.t_write - ca.t_write))
    bits = (e_cpu / esb - e_cpu / esa) / (cb.e_write - ca.e_write) / n_w
    tau = (ca.t_sense + hier.t_ctrl) / width
    e_op = bits * ca.e_sense + hier.e_ctrl
    rhs_t = t_cpu / sa - n_w * (tau + ca.t_write / width)
    rhs_e = e_cpu / esa - n_w * (bits * ca.e_write + e_op)
    a = np.array([[tau, 1.0 / f], [e_op, e_cpu / cpu_cycles]])
    n_r, resid = np.linalg.solve(a, [rhs_t, rhs_e])
    n_r, resid = round(n_r), round(resid)
    if n_r < 0 or not 0 <= resid <= cpu_cycles:
        raise ImcConfigError(
            f"{name}: targets need negative counts (reads {n_r}, residual {resid})")
    split = {op: int(np.floor(n_w * mix.get(op, 0.0))) for op in ("xor", "nand", "write")}
    split["write"] += n_w - sum(split.values())
    return WorkloadProfile(name, level, cpu_cycles, dict(split, read=n_r), bits, resid, e_cpu)
