"""AFMTJ and baseline MTJ devices: geometry, TMR read-out, bias and switch detection."""

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .constants import CONST, EMU_CM3, NM
from .magdyn import ExchangeParams, InvariantError, MaterialParams, SublatticeState

TMR_MAX = 5.0  # 500 %, upper end of reported AFMTJ TMR


class DeviceKind(str, enum.Enum):
    AFMTJ = "AFMTJ"
    MTJ = "MTJ"


@dataclass(frozen=True)
class DeviceGeometry:
    lx: float = 45 * NM
    ly: float = 45 * NM
    lz: float = 0.45 * NM

    def __post_init__(self):
        if min(self.lx, self.ly, self.lz) <= 0:
            raise InvariantError("device dimensions must be positive")

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def volume(self):
        return self.lx * self.ly * self.lz


@dataclass(frozen=True)
class ResistanceModel:
    r_p: float
    tmr: float = 0.8

    def __post_init__(self):
        if not self.r_p > 0:
            raise InvariantError(f"r_p must be positive, got {self.r_p}")
        if not 0 <= self.tmr <= TMR_MAX:
            raise InvariantError(f"tmr must lie in [0, {TMR_MAX}], got {self.tmr}")

    @property
    def r_ap(self):
        return self.r_p * (1 + self.tmr)

    def at(self, cos_theta):
        """Angle-dependent junction resistance (conductance interpolates in cos theta)."""
        rp, rap = self.r_p, self.r_ap
        return 2 * rp * rap / ((rap + rp) + (rap - rp) * np.asarray(cos_theta))

    @property
    def g_p(self):
        return 1.0 / self.r_p

    @property
    def g_ap(self):
        return 1.0 / self.r_ap


@dataclass(frozen=True)
class SwitchCriterion:
    threshold: float = 0.9
    guard: float = 0.5

    def __post_init__(self):
        if not 0 < self.guard < self.threshold <= 1:
            raise InvariantError("need 0 < guard < threshold <= 1")


_ZP = (0.0, 0.0, 1.0)
_ZM = (0.0, 0.0, -1.0)

DEVICE_KEYS = ("kind", "lx_nm", "ly_nm", "lz_nm", "Ms_emu_cm3", "alpha", "P0",
               "tmr", "r_p_ohm", "omega_E_rad_s", "Hk_A_m", "Nz", "temperature_K")
OPTIONAL_DEVICE_KEYS = ("stt_efficiency",)


@dataclass(frozen=True)
class DeviceParams:
    """Full parameter set of one junction.

    ``efficiency`` scales the spin-torque prefactor and is a calibration knob.
    The MTJ kind is a single macrospin: sublattice 2 is frozen and exchange
    must be off.
    """

    kind: DeviceKind
    material: MaterialParams
    resistance: ResistanceModel
    geometry: DeviceGeometry = field(default_factory=DeviceGeometry)
    exchange: ExchangeParams = field(default_factory=ExchangeParams)
    p1: tuple = _ZP
    p2: tuple = _ZM
    efficiency: float = 1.0
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DeviceKind(self.kind))
        if self.kind is DeviceKind.MTJ and self.exchange.omega_E > 0:
            raise InvariantError("MTJ devices are single macrospins; omega_E must be 0")
        if self.kind is DeviceKind.AFMTJ and not self.exchange.omega_E > 0:
            raise InvariantError("AFMTJ devices need omega_E > 0")
        if self.kind is DeviceKind.MTJ and self.material.Hk <= self.material.Nz * self.material.Ms:
            raise InvariantError("MTJ needs Hk > Nz*Ms for a perpendicular easy axis")
        if not self.efficiency > 0:
            raise InvariantError("stt efficiency must be positive")
        if self.temperature < 0:
            raise InvariantError("temperature must be >= 0")
        for p in (self.p1, self.p2):
            if abs(np.linalg.norm(p) - 1) > 1e-9:
                raise InvariantError("polarizers must be unit vectors")

    @property
    def single(self):
        return self.kind is DeviceKind.MTJ

    def replace(self, **kw):
        return replace(self, **kw)

    def with_values(self, **kw):
        """Copy with scalar parameters swapped: ``omega_E``, ``Hk``, ``r_p``, ``eta``, ``tmr``."""
        mat, res, ex, dev = {}, {}, {}, {}
        for k, v in kw.items():
            if k == "Hk":
                mat["Hk"] = v
            elif k in ("r_p", "tmr"):
                res[k] = v
            elif k == "omega_E":
                ex["omega_E"] = v
            elif k == "eta":
                dev["efficiency"] = v
            else:
                raise KeyError(f"unknown device parameter {k!r}")
        return replace(self, material=replace(self.material, **mat),
                       resistance=replace(self.resistance, **res),
                       exchange=replace(self.exchange, **ex), **dev)

    def value(self, name):
        return {"Hk": self.material.Hk, "r_p": self.resistance.r_p,
                "tmr": self.resistance.tmr, "omega_E": self.exchange.omega_E,
                "eta": self.efficiency}[name]

    def kernel_params(self, voltage):
        par = np.zeros(_kernel.NPAR)
        par[_kernel.GM] = CONST.gamma_mu0
        par[_kernel.ALPHA] = self.material.alpha
        par[_kernel.HK] = self.material.Hk
        par[_kernel.DEMAG] = self.material.Nz * self.material.Ms
        par[_kernel.HE] = self.exchange.h_E
        par[_kernel.STT] = self.efficiency * CONST.gamma * CONST.hbar * self.material.P0 / (
            2 * CONST.e * self.material.Ms * self.geometry.lz)
        par[_kernel.SINGLE] = 1.0 if self.single else 0.0
        par[_kernel.P1:_kernel.P1 + 3] = self.p1
        par[_kernel.P2:_kernel.P2 + 3] = self.p2
        par[_kernel.RP] = self.resistance.r_p
        par[_kernel.RAP] = self.resistance.r_ap
        par[_kernel.AREA] = self.geometry.area
        par[_kernel.VOLT] = voltage
        return par

    # -- JSON -------------------------------------------------------------

    def to_dict(self):
        d = {
            "kind": self.kind.value,
            "lx_nm": self.geometry.lx / NM,
            "ly_nm": self.geometry.ly / NM,
            "lz_nm": self.geometry.lz / NM,
            "Ms_emu_cm3": self.material.Ms / EMU_CM3,
            "alpha": self.material.alpha,
            "P0": self.material.P0,
            "tmr": self.resistance.tmr,
            "r_p_ohm": self.resistance.r_p,
            "omega_E_rad_s": self.exchange.omega_E,
            "Hk_A_m": self.material.Hk,
            "Nz": self.material.Nz,
            "temperature_K": self.temperature,
        }
        if self.efficiency != 1.0:
            d["stt_efficiency"] = self.efficiency
        return d

    @classmethod
    def from_dict(cls, d, where="device"):
        from .config import ConfigError, check_keys
        check_keys(d, DEVICE_KEYS, OPTIONAL_DEVICE_KEYS, where)
        try:
            kind = DeviceKind(d["kind"])
        except ValueError:
            raise ConfigError(f"{where}.kind: must be 'AFMTJ' or 'MTJ', got {d['kind']!r}")
        try:
            return cls(
                kind=kind,
                geometry=DeviceGeometry(d["lx_nm"] * NM, d["ly_nm"] * NM, d["lz_nm"] * NM),
                material=MaterialParams.from_cgs(d["Ms_emu_cm3"], d["alpha"], d["P0"],
                                                 Hk=d["Hk_A_m"], Nz=d["Nz"]),
                resistance=ResistanceModel(d["r_p_ohm"], d["tmr"]),
                exchange=ExchangeParams(omega_E=d["omega_E_rad_s"]),
                p1=_ZP,
                p2=_ZM,
                efficiency=d.get("stt_efficiency", 1.0),
                temperature=d["temperature_K"],
            )
        except (InvariantError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    @classmethod
    def load(cls, path):
        from .config import read_json
        return cls.from_dict(read_json(path), where=str(path))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def order_parameter(state, kind):
    """Néel vector ``(m1 - m2)/2`` for an AFMTJ, ``m1`` for an MTJ."""
    if DeviceKind(kind) is DeviceKind.MTJ:
        return np.array(state.m1)
    return 0.5 * (state.m1 - state.m2)


def _cos_to_ref(l):
    n = np.linalg.norm(l, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(n > 0, l[..., 2] / np.where(n > 0, n, 1.0), 0.0)
    return c


def resistance(state, device):
    l = order_parameter(state, device.kind)
    return float(device.resistance.at(_cos_to_ref(l)))


def resistance_series(states, device):
    """Vectorized resistance for an ``(n, 2, 3)`` state array."""
    if device.single:
        l = states[:, 0]
    else:
        l = 0.5 * (states[:, 0] - states[:, 1])
    return device.resistance.at(_cos_to_ref(l))


def bias_current(v, state, device):
    """Ohmic bias: returns ``(current [A], current density [A/m^2])``."""
    i = v / resistance(state, device)
    return i, i / device.geometry.area


def order_z(traj, kind):
    s = traj.states
    if DeviceKind(kind) is DeviceKind.MTJ:
        return s[:, 0, 2]
    return 0.5 * (s[:, 0, 2] - s[:, 1, 2])


def detect_switch(traj, crit, kind):
    """Write latency in seconds, or ``None`` when the device did not switch.

    The first crossing of ``-threshold`` (in the direction away from the
    initial orientation) counts only if the order parameter then stays beyond
    ``-guard`` for the rest of the window. Trajectories starting near ``-z``
    are handled by mirroring.
    """
    if len(traj) < 2:
        raise ValueError("trajectory needs at least 2 samples")
    lz = order_z(traj, kind)
    if lz[0] < 0:
        lz = -lz
    below = np.flatnonzero(lz <= -crit.threshold)
    if below.size == 0:
        return None
    n = below[0]
    if np.any(lz[n:] > -crit.guard):
        return None
    t = traj.times
    if n == 0:
        return float(t[0])
    frac = (lz[n - 1] + crit.threshold) / (lz[n - 1] - lz[n])
    return float(t[n - 1] + frac * (t[n] - t[n - 1]))


def write_initial_state(kind, up=True, tilt_deg=1.0, rng=None):
    """Starting state for a write: order parameter along +-z with a small tilt.

    With ``rng`` the tilt azimuth is random; otherwise the tilt lies in the
    x-z plane.
    """
    th = np.deg2rad(tilt_deg)
    phi = 0.0 if rng is None else rng.uniform(0, 2 * np.pi)
    s = 1.0 if up else -1.0
    m1 = np.array([np.sin(th) * np.cos(phi), np.sin(th) * np.sin(phi), s * np.cos(th)])
    return SublatticeState(m1, -m1)
