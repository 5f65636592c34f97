"""How the bitline sense margin shrinks with TMR.

Two cells on one bitline give three conductance levels. NAND and XOR need
references between adjacent levels, and the gap between levels is what the
sense amplifier has to resolve.

    python3 demos/sense_margins.py
"""

from afmtj_lab.bitline import SenseConfig, SenseError, conductance_levels, truth_table
from afmtj_lab.device import ResistanceModel

R_P = 2900.0
print(" tmr    G(00)   G(01)   G(11) uS   min margin uS   NAND XOR")
for tmr in (0.01, 0.05, 0.1, 0.3, 0.5, 0.8, 1.5, 3.0, 5.0):
    rm = ResistanceModel(R_P, tmr)
    g = conductance_levels(2, rm) * 1e6
    try:
        cfg = SenseConfig.auto(rm)
    except SenseError as exc:
        print(f"{tmr:4.2f}  {g[0]:7.1f} {g[1]:7.1f} {g[2]:7.1f}      rejected: {exc}")
        continue
    outs = {op: "".join(str(r.out) for r in truth_table(op, rm, cfg)) for op in ("nand", "xor")}
    margin = min(r.margin for op in ("nand", "xor") for r in truth_table(op, rm, cfg)) * 1e6
    print(f"{tmr:4.2f}  {g[0]:7.1f} {g[1]:7.1f} {g[2]:7.1f}      {margin:9.2f}        "
          f"{outs['nand']} {outs['xor']}")
