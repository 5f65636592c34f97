"""Why some low-voltage write energies cannot be matched by the calibrated model.

With an ohmic, bias-independent junction the write energy is V^2 t / R_eff,
where R_eff is a time-averaged resistance between r_p and r_ap. Given a
reference latency and energy, R_eff = V^2 t / E follows directly. The script
prints that implied R_eff next to the one the simulation actually produces.

For the MTJ at low bias the implied value lies outside [r_p, r_ap] altogether.
For the AFMTJ it stays inside but climbs toward r_ap as the bias drops, while
a simulated write spends most of its incubation near the parallel state.

    python3 demos/energy_bounds.py
"""

from afmtj_lab.config import load_config
from afmtj_lab.transient import PulseSpec, run_write

setup = load_config()
ref = setup.references["fig3"]
for label, dev in sorted(setup.devices.items()):
    r_p, r_ap = dev.resistance.r_p, dev.resistance.r_ap
    print(f"\n{label}: r_p {r_p:.0f} ohm, r_ap {r_ap:.0f} ohm")
    print("   V   implied R_eff   simulated R_eff")
    for i, v in enumerate(ref["voltage_V"]):
        t = ref[label]["latency_ps"][i] * 1e-12
        e = ref[label]["energy_fJ"][i] * 1e-15
        implied = v * v * t / e
        res = run_write(dev, PulseSpec(v, setup.pulse_width), setup.solver, setup.crit)
        sim = v * v * res.latency / res.energy
        flag = "   outside [r_p, r_ap]" if not r_p <= implied <= r_ap else ""
        print(f"  {v:.1f}  {implied:10.0f}      {sim:10.0f}{flag}")
