"""Run configuration: fail-closed JSON ingestion with unit conversion.

Config files use nm, emu/cm^3, ps and fJ; everything is converted to SI here
and every module invariant is checked before a simulation starts. Relative
paths resolve against the directory of the file that names them.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bitline import DEFAULT_MARGIN_FLOOR, SenseConfig, SenseError
from .device import DeviceParams, ResistanceModel, SwitchCriterion
from .imc import (CpuBaseline, DeviceCard, HierarchyConfig, ImcConfigError, Level,
                  WorkloadProfile)
from .integrator import SolverOptions
from .magdyn import InvariantError
from .sweep import DEFAULT_VOLTAGES, CalibrationProblem, CalibrationTarget, FREE_PARAMS
from .util import data_path

PS, FJ = 1e-12, 1e-15
DEFAULT_CONFIG = "configs/default.json"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


def check_keys(d, required, optional=(), where="config"):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a JSON object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) " + ", ".join(f"{where}.{k}" for k in unknown))
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing key(s) " + ", ".join(f"{where}.{k}" for k in missing))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON (line {exc.lineno}, col {exc.colno}): "
                          f"{exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc


def _number(d, key, where, default=None, lo=None, hi=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{where}.{key}: {v} outside admissible range [{lo}, {hi}]")
    return v


def _resolve(ref, base_dir):
    p = Path(ref)
    if not p.is_absolute():
        p = base_dir / p
    return p


def _object(ref, base_dir, where):
    """Inline object or path to a JSON file; returns (dict, dir for nested paths, label)."""
    if isinstance(ref, dict):
        return ref, base_dir, where
    if isinstance(ref, str):
        p = _resolve(ref, base_dir)
        return read_json(p), p.parent, str(p)
    raise ConfigError(f"{where}: expected an object or a file path")


def _device(ref, base_dir, where):
    d, _, label = _object(ref, base_dir, where)
    return DeviceParams.from_dict(d, where=label)


SOLVER_KEYS = ("dt_base_ps", "dt_min_ps", "dt_max_ps", "rel_tol", "sample_interval_ps",
               "temperature_K", "seed")


def parse_solver(d, where="solver"):
    check_keys(d, (), SOLVER_KEYS, where)
    ref = SolverOptions()
    try:
        return SolverOptions(
            dt_base=_number(d, "dt_base_ps", where, ref.dt_base / PS) * PS,
            dt_min=_number(d, "dt_min_ps", where, ref.dt_min / PS) * PS,
            dt_max=_number(d, "dt_max_ps", where, ref.dt_max / PS) * PS,
            rel_tol=_number(d, "rel_tol", where, ref.rel_tol),
            sample_interval=_number(d, "sample_interval_ps", where, ref.sample_interval / PS) * PS,
            temperature=_number(d, "temperature_K", where, 0.0, lo=0),
            rng_seed=int(_number(d, "seed", where, 0, lo=0, hi=2**64 - 1)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc


def parse_targets(items, where):
    out = []
    for i, t in enumerate(items):
        w = f"{where}[{i}]"
        check_keys(t, ("voltage_V", "observable"), ("value_ps", "value_fJ", "weight"), w)
        obs = t["observable"]
        if obs == "latency":
            value = _number(t, "value_ps", w, lo=0) * PS
        elif obs == "energy":
            value = _number(t, "value_fJ", w, lo=0) * FJ
        else:
            raise ConfigError(f"{w}.observable: must be 'latency' or 'energy', got {obs!r}")
        try:
            out.append(CalibrationTarget(_number(t, "voltage_V", w, lo=0), obs, value,
                                         _number(t, "weight", w, 1.0)))
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from exc
    return out


def parse_cards(d, where):
    check_keys(d, ("v_nom_V", "cards"), (), where)
    cards = []
    for i, c in enumerate(d["cards"]):
        w = f"{where}.cards[{i}]"
        check_keys(c, ("label", "t_write_ps", "e_write_fJ", "t_sense_ps", "e_sense_fJ"), (), w)
        try:
            cards.append(DeviceCard.from_dict(c))
        except ImcConfigError as exc:
            raise ConfigError(f"{w}: {exc}") from exc
    return d["v_nom_V"], cards


def parse_hierarchy(d, where):
    check_keys(d, ("levels",), ("t_ctrl_ps", "e_ctrl_fJ"), where)
    levels = []
    for i, lv in enumerate(d["levels"]):
        w = f"{where}.levels[{i}]"
        check_keys(lv, ("name", "capacity_bytes", "parallel_width"), (), w)
        levels.append(Level(lv["name"], int(lv["capacity_bytes"]), int(lv["parallel_width"])))
    try:
        return HierarchyConfig(tuple(levels), _number(d, "t_ctrl_ps", where, 0.0, lo=0) * PS,
                               _number(d, "e_ctrl_fJ", where, 0.0, lo=0) * FJ)
    except ImcConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_profiles(d, where):
    check_keys(d, ("profiles",), (), where)
    out = []
    for i, p in enumerate(d["profiles"]):
        try:
            out.append(WorkloadProfile.from_dict(p, f"{where}.profiles[{i}]"))
        except ImcConfigError as exc:
            raise ConfigError(f"{where}.profiles[{i}]: {exc}") from exc
    return out


@dataclass
class ImcSetup:
    cards: list
    profiles: list
    hierarchy: HierarchyConfig
    cpu: CpuBaseline
    v_nom: float = 1.0
    t_sense: float = 100 * PS
    e_sense: float = 0.05 * FJ


@dataclass
class LogicSetup:
    rmodel: ResistanceModel
    sense: SenseConfig
    tmr_grid: tuple = (0.3, 0.5, 0.8, 1.5, 3.0, 5.0)


@dataclass
class RunSetup:
    """Fully validated run configuration (SI units throughout)."""

    source: str = None
    raw: dict = field(default_factory=dict)
    devices: dict = field(default_factory=dict)
    voltages: tuple = DEFAULT_VOLTAGES
    solver: SolverOptions = field(default_factory=SolverOptions)
    crit: SwitchCriterion = field(default_factory=SwitchCriterion)
    pulse_width: float = 5e-9
    polarity: int = -1
    write_voltage: float = 1.0
    v_read: float = 0.1
    read_ceiling: float = 0.2
    calibration: dict = field(default_factory=dict)  # label -> (base device, problem)
    logic: LogicSetup = None
    imc: ImcSetup = None
    references: dict = None

    def with_seed(self, seed):
        self.solver = self.solver.replace(rng_seed=int(seed))
        for label, (base, prob) in self.calibration.items():
            self.calibration[label] = (base, replace(prob, solver=self.solver))
        return self


TOP_KEYS = ("devices", "voltages_V", "solver", "pulse", "switch", "read", "calibration",
            "logic", "imc", "references")


def load_config(path=None):
    """Parse and validate a run configuration; defaults to the shipped one."""
    path = Path(path) if path is not None else data_path(DEFAULT_CONFIG)
    raw = read_json(path)
    check_keys(raw, (), TOP_KEYS, "config")
    base_dir = path.parent
    s = RunSetup(source=str(path), raw=raw)
    try:
        _load_into(s, raw, base_dir)
    except (InvariantError, SenseError, ImcConfigError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    return s


def _load_into(s, raw, base_dir):
    s.solver = parse_solver(raw.get("solver", {}))

    if "devices" in raw:
        devs = raw["devices"]
        check_keys(devs, (), ("AFMTJ", "MTJ"), "config.devices")
        s.devices = {k: _device(v, base_dir, f"config.devices.{k}") for k, v in devs.items()}
        for k, d in s.devices.items():
            if d.kind.value != k:
                raise ConfigError(f"config.devices.{k}: file describes a {d.kind.value}")

    if "voltages_V" in raw:
        v = raw["voltages_V"]
        if not v or any(b <= a for a, b in zip(v, v[1:])):
            raise ConfigError("config.voltages_V: must be a non-empty strictly increasing list")
        s.voltages = tuple(float(x) for x in v)

    if "pulse" in raw:
        p = raw["pulse"]
        check_keys(p, (), ("width_ps", "polarity", "amplitude_V"), "config.pulse")
        s.pulse_width = _number(p, "width_ps", "config.pulse", 5000.0, lo=1e-3) * PS
        s.polarity = int(_number(p, "polarity", "config.pulse", -1))
        if s.polarity not in (1, -1):
            raise ConfigError("config.pulse.polarity: must be +1 or -1")
        s.write_voltage = _number(p, "amplitude_V", "config.pulse", 1.0, lo=0)

    if "switch" in raw:
        c = raw["switch"]
        check_keys(c, (), ("threshold", "guard"), "config.switch")
        s.crit = SwitchCriterion(_number(c, "threshold", "config.switch", 0.9),
                                 _number(c, "guard", "config.switch", 0.5))

    if "read" in raw:
        r = raw["read"]
        check_keys(r, (), ("v_read_V", "ceiling_V"), "config.read")
        s.read_ceiling = _number(r, "ceiling_V", "config.read", 0.2, lo=0)
        s.v_read = _number(r, "v_read_V", "config.read", 0.1, lo=-s.read_ceiling,
                           hi=s.read_ceiling)

    for label, c in raw.get("calibration", {}).items():
        w = f"config.calibration.{label}"
        check_keys(c, ("base", "free", "targets"), ("tolerance", "max_evals"), w)
        base = _device(c["base"], base_dir, f"{w}.base")
        for name in c["free"]:
            if name not in FREE_PARAMS:
                raise ConfigError(f"{w}.free: cannot calibrate {name!r}")
        try:
            prob = CalibrationProblem(
                tuple(c["free"]), tuple(parse_targets(c["targets"], f"{w}.targets")),
                tolerance=_number(c, "tolerance", w, 0.10, lo=0),
                max_evals=int(_number(c, "max_evals", w, 500, lo=1)),
                solver=s.solver, crit=s.crit, pulse_width=s.pulse_width, polarity=s.polarity)
        except ValueError as exc:
            raise ConfigError(f"{w}: {exc}") from exc
        s.calibration[label] = (base, prob)

    if "logic" in raw:
        lg = raw["logic"]
        w = "config.logic"
        check_keys(lg, ("r_p_ohm", "tmr"), ("v_read_V", "margin_floor", "tmr_grid"), w)
        tmr = _number(lg, "tmr", w, lo=0, hi=5.0)
        rmodel = ResistanceModel(_number(lg, "r_p_ohm", w, lo=0), tmr)
        sense = SenseConfig.auto(rmodel, _number(lg, "v_read_V", w, 0.1),
                                 _number(lg, "margin_floor", w, DEFAULT_MARGIN_FLOOR, lo=0))
        grid = tuple(lg.get("tmr_grid", LogicSetup.tmr_grid))
        for t in grid:
            if not 0 <= t <= 5.0:
                raise ConfigError(f"{w}.tmr_grid: {t} outside admissible range [0, 5.0]")
        s.logic = LogicSetup(rmodel, sense, grid)

    if "imc" in raw:
        im = raw["imc"]
        w = "config.imc"
        check_keys(im, ("cards", "profiles", "hierarchy", "cpu"), ("t_sense_ps", "e_sense_fJ"), w)
        cd, _, cw = _object(im["cards"], base_dir, f"{w}.cards")
        v_nom, cards = parse_cards(cd, cw)
        pd, _, pw = _object(im["profiles"], base_dir, f"{w}.profiles")
        hd, _, hw = _object(im["hierarchy"], base_dir, f"{w}.hierarchy")
        cpu = im["cpu"]
        check_keys(cpu, ("f_cpu_Hz", "avg_power_W"), (), f"{w}.cpu")
        s.imc = ImcSetup(cards, parse_profiles(pd, pw), parse_hierarchy(hd, hw),
                         CpuBaseline(_number(cpu, "f_cpu_Hz", f"{w}.cpu", lo=0),
                                     _number(cpu, "avg_power_W", f"{w}.cpu", lo=0)),
                         v_nom, _number(im, "t_sense_ps", w, 100.0, lo=0) * PS,
                         _number(im, "e_sense_fJ", w, 0.05, lo=0) * FJ)
        for p in s.imc.profiles:
            s.imc.hierarchy.level(p.level)

    if "references" in raw:
        refs = raw["references"]
        check_keys(refs, (), ("fig3", "fig4"), "config.references")
        s.references = {k: _object(v, base_dir, f"config.references.{k}")[0]
                        for k, v in refs.items()}
