"""Multi-row bitline logic: summed cell conductance sensed against reference levels.

Encoding: bit 1 is the parallel (low-resistance) state, bit 0 antiparallel.
"""

from dataclasses import dataclass

import numpy as np

MODES = ("and", "nand", "xor")
DEFAULT_MARGIN_FLOOR = 0.02  # fraction of the single-cell parallel conductance


class SenseError(ValueError):
    """Reference levels that cannot separate the conductance levels."""


def cell_conductance(bit, rmodel):
    if bit not in (0, 1):
        raise ValueError(f"cell state must be 0 or 1, got {bit!r}")
    return rmodel.g_p if bit == 1 else rmodel.g_ap


def bitline_conductance(cells, rmodel):
    """Total conductance of the activated cells on one bitline, in siemens."""
    cells = list(cells)
    if not cells:
        raise ValueError("at least one row must be activated")
    return float(sum(cell_conductance(b, rmodel) for b in cells))


def conductance_levels(n_rows, rmodel):
    """Bitline conductance with k cells in state 1, for k = 0..n_rows."""
    k = np.arange(n_rows + 1)
    return k * rmodel.g_p + (n_rows - k) * rmodel.g_ap


@dataclass(frozen=True)
class SenseConfig:
    """Sense-amplifier references in siemens (two-row activation)."""

    ref_and: float
    ref_xor_lo: float
    ref_xor_hi: float
    v_read: float = 0.1
    margin_floor: float = DEFAULT_MARGIN_FLOOR

    def __post_init__(self):
        if min(self.ref_and, self.ref_xor_lo, self.ref_xor_hi) <= 0:
            raise SenseError("sense references must be positive")
        if not self.ref_xor_lo < self.ref_xor_hi:
            raise SenseError("need ref_xor_lo < ref_xor_hi")
        if self.margin_floor < 0:
            raise SenseError("margin floor must be >= 0")

    @classmethod
    def auto(cls, rmodel, v_read=0.1, margin_floor=DEFAULT_MARGIN_FLOOR):
        """References at the midpoints between adjacent two-row levels, then validated."""
        g0, g1, g2 = conductance_levels(2, rmodel)
        cfg = cls(0.5 * (g1 + g2), 0.5 * (g0 + g1), 0.5 * (g1 + g2), v_read, margin_floor)
        cfg.validate(rmodel)
        return cfg

    def validate(self, rmodel):
        """Every reference must sit at least the margin floor away from each level it splits."""
        g0, g1, g2 = conductance_levels(2, rmodel)
        floor = self.margin_floor * rmodel.g_p
        checks = (("ref_and", self.ref_and, g1, g2),
                  ("ref_xor_lo", self.ref_xor_lo, g0, g1),
                  ("ref_xor_hi", self.ref_xor_hi, g1, g2))
        for name, ref, lo, hi in checks:
            margin = min(ref - lo, hi - ref)
            if not margin > floor:
                raise SenseError(
                    f"{name}: sense margin {margin * 1e6:.3f} uS is below the floor "
                    f"{floor * 1e6:.3f} uS (tmr {rmodel.tmr:g})")
        return self


def sense(g_total, cfg, mode):
    if mode == "and":
        return int(g_total > cfg.ref_and)
    if mode == "nand":
        return int(not g_total > cfg.ref_and)
    if mode == "xor":
        return int(cfg.ref_xor_lo < g_total < cfg.ref_xor_hi)
    raise ValueError(f"unknown sense mode {mode!r}; choose from {MODES}")


def sense_margin(g_total, cfg, mode):
    """Distance from ``g_total`` to the nearest reference the mode compares against."""
    if mode in ("and", "nand"):
        return abs(g_total - cfg.ref_and)
    if mode == "xor":
        return min(abs(g_total - cfg.ref_xor_lo), abs(g_total - cfg.ref_xor_hi))
    raise ValueError(f"unknown sense mode {mode!r}")


def execute_logic(op, row_bits, rmodel, cfg):
    """Activate two rows holding ``row_bits`` and resolve ``op`` on the bitline."""
    if len(row_bits) != 2:
        raise ValueError("logic operations activate exactly two rows")
    return sense(bitline_conductance(row_bits, rmodel), cfg, op)


@dataclass(frozen=True)
class TruthRow:
    a: int
    b: int
    conductance: float
    current: float
    out: int
    margin: float


def truth_table(op, rmodel, cfg):
    rows = []
    for a in (0, 1):
        for b in (0, 1):
            g = bitline_conductance((a, b), rmodel)
            rows.append(TruthRow(a, b, g, g * cfg.v_read, sense(g, cfg, op),
                                 sense_margin(g, cfg, op)))
    return rows
