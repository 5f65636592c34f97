import pytest
from hypothesis import given, settings, strategies as st

from afmtj_lab.bitline import (SenseConfig, SenseError, bitline_conductance, cell_conductance,
                               conductance_levels, execute_logic, sense, sense_margin,
                               truth_table)
from afmtj_lab.device import ResistanceModel

TRUTH = {"and": lambda a, b: a & b, "nand": lambda a, b: 1 - (a & b), "xor": lambda a, b: a ^ b}
RM = ResistanceModel(2900.0, 0.8)


def test_levels_by_hand():
    gp, gap = 1 / 2900, 1 / 5220
    assert list(conductance_levels(2, RM)) == pytest.approx([2 * gap, gp + gap, 2 * gp])
    assert bitline_conductance([1, 0], RM) == pytest.approx(gp + gap)
    assert cell_conductance(1, RM) == RM.g_p
    with pytest.raises(ValueError):
        cell_conductance(2, RM)
    with pytest.raises(ValueError):
        bitline_conductance([], RM)


def test_auto_references_sit_at_midpoints():
    g0, g1, g2 = conductance_levels(2, RM)
    cfg = SenseConfig.auto(RM)
    assert cfg.ref_and == pytest.approx((g1 + g2) / 2)
    assert cfg.ref_xor_lo == pytest.approx((g0 + g1) / 2)
    assert cfg.ref_xor_hi == pytest.approx((g1 + g2) / 2)
    # 2900 ohm, tmr 0.8: levels 383.1 / 536.4 / 689.7 uS
    assert [round(g * 1e6, 1) for g in (g0, g1, g2)] == [383.1, 536.4, 689.7]


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(100.0, 1e5), st.sampled_from(list(TRUTH)))
def test_truth_tables_for_any_tmr(tmr, r_p, op):
    rm = ResistanceModel(r_p, tmr)
    cfg = SenseConfig.auto(rm, margin_floor=0.0)
    for r in truth_table(op, rm, cfg):
        assert r.out == TRUTH[op](r.a, r.b)
        assert r.margin > 0
        assert r.current == pytest.approx(r.conductance * cfg.v_read)


def test_margin_floor_rejects_small_tmr():
    with pytest.raises(SenseError, match="floor"):
        SenseConfig.auto(ResistanceModel(2900.0, 0.01), margin_floor=0.02)


def test_manual_references_validated():
    with pytest.raises(SenseError):
        SenseConfig(5e-4, 6e-4, 5e-4)
    with pytest.raises(SenseError):
        SenseConfig(5e-4, 4e-4, 6e-4).validate(RM)  # ref_and too close to g1


def test_execute_logic_and_errors():
    cfg = SenseConfig.auto(RM)
    assert execute_logic("nand", (1, 1), RM, cfg) == 0
    assert execute_logic("xor", (0, 1), RM, cfg) == 1
    with pytest.raises(ValueError):
        execute_logic("xor", (0, 1, 1), RM, cfg)
    with pytest.raises(ValueError):
        sense(1e-3, cfg, "or")
    with pytest.raises(ValueError):
        sense_margin(1e-3, cfg, "or")
