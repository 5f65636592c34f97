"""Two-sublattice macrospin dynamics: fields, torques and the LLG right-hand side.

Vectors are plain ``numpy`` arrays of shape ``(3,)``. Fields are in A/m,
torques and time derivatives in rad/s, everything else SI.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import CONST, EMU_CM3

ZHAT = np.array([0.0, 0.0, 1.0])
UNIT_TOL = 1e-9


class InvariantError(ValueError):
    """A state or parameter object violates one of its invariants."""


def _vec(v):
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise InvariantError(f"non-finite vector component: {a}")
    return a


def _unit(v, name="vector"):
    a = _vec(v)
    n = np.linalg.norm(a)
    if abs(n - 1.0) > UNIT_TOL:
        raise InvariantError(f"{name} is not a unit vector (|{name}| = {n!r})")
    return a


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class MaterialParams:
    Ms: float  # A/m
    alpha: float
    P0: float
    Hk: float = 4e4  # A/m, easy axis +z
    Nz: float = 1.0

    def __post_init__(self):
        if not self.Ms > 0:
            raise InvariantError(f"Ms must be positive, got {self.Ms}")
        if not self.alpha > 0:
            raise InvariantError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.P0 <= 1:
            raise InvariantError(f"P0 must lie in (0, 1], got {self.P0}")
        if not 0 <= self.Nz <= 1:
            raise InvariantError(f"Nz must lie in [0, 1], got {self.Nz}")
        if not np.isfinite(self.Hk):
            raise InvariantError("Hk must be finite")

    @classmethod
    def from_cgs(cls, Ms_emu_cm3, alpha, P0, Hk=4e4, Nz=1.0):
        return cls(Ms=Ms_emu_cm3 * EMU_CM3, alpha=alpha, P0=P0, Hk=Hk, Nz=Nz)


@dataclass(frozen=True)
class ExchangeParams:
    """Inter-sublattice exchange.

    ``omega_E`` (rad/s) is the quantity the dynamics use; ``j_af_raw`` is the
    bare dimensionless constant quoted for the material and is carried only as
    metadata.
    """

    omega_E: float = 0.0
    j_af_raw: float = 5e-3

    def __post_init__(self):
        if not (self.omega_E >= 0 and np.isfinite(self.omega_E)):
            raise InvariantError(f"omega_E must be finite and >= 0, got {self.omega_E}")

    @property
    def h_E(self):
        """Equivalent exchange field magnitude in A/m."""
        return self.omega_E / CONST.gamma_mu0

    @classmethod
    def from_field(cls, h_E, j_af_raw=5e-3):
        return cls(omega_E=h_E * CONST.gamma_mu0, j_af_raw=j_af_raw)


@dataclass(frozen=True)
class SublatticeState:
    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        m1 = _unit(self.m1, "m1")
        m2 = _unit(self.m2, "m2")
        m1.flags.writeable = False
        m2.flags.writeable = False
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)

    @classmethod
    def from_array(cls, y, renormalize=False):
        y = np.asarray(y, dtype=float).reshape(2, 3)
        if renormalize:
            y = normalize(y)
        return cls(y[0].copy(), y[1].copy())

    def as_array(self):
        return np.stack([self.m1, self.m2])

    @classmethod
    def antiparallel(cls, tilt_deg=0.0, up=True):
        """Néel state along +z (or -z) with a rigid tilt in the x-z plane."""
        th = np.deg2rad(tilt_deg)
        s = 1.0 if up else -1.0
        m1 = np.array([np.sin(th), 0.0, s * np.cos(th)])
        return cls(m1, -m1)


@dataclass(frozen=True)
class EffectiveField:
    h1: np.ndarray
    h2: np.ndarray
    parts: dict = field(default_factory=dict)

    def __getitem__(self, name):
        """Per-contribution field as a ``(2, 3)`` array (rows: sublattice 1, 2)."""
        return self.parts[name]

    def as_array(self):
        return np.stack([self.h1, self.h2])


def _field_parts(m, mat, ex, h_thermal, single, include_exchange):
    if single:
        m_net_z = m[0, 2]
    else:
        m_net_z = 0.5 * (m[0, 2] + m[1, 2])
    aniso = np.zeros((2, 3))
    aniso[:, 2] = mat.Hk * m[:, 2]
    demag = np.zeros((2, 3))
    demag[:, 2] = -mat.Nz * mat.Ms * m_net_z
    if not single and include_exchange:
        exch = -ex.h_E * m[::-1]
    else:
        exch = np.zeros((2, 3))
    if h_thermal is None:
        therm = np.zeros((2, 3))
    else:
        therm = np.asarray(h_thermal, dtype=float).reshape(2, 3)
    return {"anisotropy": aniso, "demag": demag, "exchange": exch, "thermal": therm}


def effective_field(state, mat, ex, h_thermal=None, *, single=False,
                    include_exchange=True):
    """Total field on each sublattice plus its individual contributions.

    ``single=True`` treats the pair as one ferromagnetic macrospin: the
    demagnetizing field acts on ``m1`` alone and there is no exchange.
    """
    parts = _field_parts(state.as_array(), mat, ex, h_thermal, single, include_exchange)
    total = sum(parts.values())
    if not np.all(np.isfinite(total)):
        raise InvariantError("non-finite effective field")
    return EffectiveField(total[0], total[1], parts)


def exchange_torque(m_self, m_other, ex):
    """Antiferromagnetic exchange torque on ``m_self`` (rad/s).

    Torque form of the exchange field ``-h_E * m_other``:
    ``-gamma mu0 m_self x (-h_E m_other) = omega_E (m_self x m_other)``.
    """
    return ex.omega_E * np.cross(_vec(m_self), _vec(m_other))


def stt_prefactor(mat, thickness, efficiency=1.0):
    """Damping-like spin-torque rate per unit current density, rad/s per A/m^2."""
    if not thickness > 0:
        raise InvariantError(f"free-layer thickness must be positive, got {thickness}")
    return efficiency * CONST.gamma * CONST.hbar * mat.P0 / (2 * CONST.e * mat.Ms * thickness)


def stt_torque(m, p, j_density, mat, thickness, efficiency=1.0):
    """Slonczewski damping-like torque ``-a_J m x (m x p)``.

    Positive current density pulls ``m`` toward ``p``.
    """
    a_j = stt_prefactor(mat, thickness, efficiency) * j_density
    m = _vec(m)
    return -a_j * np.cross(m, np.cross(m, _vec(p)))


def gilbert_rhs(m, h, torque, alpha, gamma_mu0=CONST.gamma_mu0):
    """Explicit Landau-Lifshitz form of the Gilbert equation for one macrospin.

    Exact for any extra torque perpendicular to ``m``.
    """
    mxh = np.cross(m, h)
    return (-gamma_mu0 * mxh - gamma_mu0 * alpha * np.cross(m, mxh)
            + torque + alpha * np.cross(m, torque)) / (1 + alpha * alpha)


def llg_rhs_array(m, mat, ex, j_density, p1, p2, h_thermal=None, *, thickness,
                  efficiency=1.0, exchange_channel="torque", single=False):
    """Array form of :func:`llg_rhs`: ``m`` is ``(2, 3)``, no norm checks.

    Used inside integrator stages, where intermediate states are not unit
    vectors.
    """
    if exchange_channel not in ("torque", "field"):
        raise ValueError(f"unknown exchange channel {exchange_channel!r}")
    use_field = exchange_channel == "field"
    parts = _field_parts(m, mat, ex, h_thermal, single, use_field)
    h = sum(parts.values())
    a_j = stt_prefactor(mat, thickness, efficiency) * j_density
    m1, m2 = m[0], m[1]
    t1 = -a_j * np.cross(m1, np.cross(m1, p1))
    out = np.zeros((2, 3))
    if single:
        out[0] = gilbert_rhs(m1, h[0], t1, mat.alpha)
        return out
    t2 = -a_j * np.cross(m2, np.cross(m2, p2))
    if not use_field:
        t1 = t1 + ex.omega_E * np.cross(m1, m2)
        t2 = t2 + ex.omega_E * np.cross(m2, m1)
    out[0] = gilbert_rhs(m1, h[0], t1, mat.alpha)
    out[1] = gilbert_rhs(m2, h[1], t2, mat.alpha)
    return out


def llg_rhs(state, mat, ex, j_density, p1, p2, h_thermal=None, *, thickness,
            efficiency=1.0, exchange_channel="torque", single=False):
    """Time derivatives ``(dm1/dt, dm2/dt)`` of the coupled sublattices.

    ``exchange_channel`` selects whether the inter-sublattice coupling enters
    through the effective field or as an explicit torque; the two are
    equivalent. With ``single=True`` sublattice 2 is frozen.
    """
    if exchange_channel not in ("torque", "field"):
        raise ValueError(f"unknown exchange channel {exchange_channel!r}")
    use_field = exchange_channel == "field"
    hf = effective_field(state, mat, ex, h_thermal, single=single,
                         include_exchange=use_field)
    m1, m2 = state.m1, state.m2
    t1 = stt_torque(m1, p1, j_density, mat, thickness, efficiency)
    if single:
        return gilbert_rhs(m1, hf.h1, t1, mat.alpha), np.zeros(3)
    t2 = stt_torque(m2, p2, j_density, mat, thickness, efficiency)
    if not use_field:
        t1 = t1 + exchange_torque(m1, m2, ex)
        t2 = t2 + exchange_torque(m2, m1, ex)
    return (gilbert_rhs(m1, hf.h1, t1, mat.alpha),
            gilbert_rhs(m2, hf.h2, t2, mat.alpha))
