"""Walk through one write on each device at 1.0 V.

Prints the order parameter and the junction resistance every few tens of
picoseconds, then the extracted latency and energy, then reads the bit back.

    python3 demos/write_transient.py
"""

import numpy as np

from afmtj_lab import DeviceParams, PulseSpec, run_read, run_write
from afmtj_lab.device import order_z
from afmtj_lab.util import data_path

for name in ("afmtj", "mtj"):
    dev = DeviceParams.load(data_path(f"devices/{name}_calibrated.json"))
    res = run_write(dev, PulseSpec(1.0, 5e-9))
    traj = res.trajectory
    lz = order_z(traj, dev.kind)
    print(f"\n{dev.kind.value}  (r_p {dev.resistance.r_p:.0f} ohm, tmr {dev.resistance.tmr})")
    stop = np.searchsorted(traj.times, 1.3 * res.latency)
    step = max(1, stop // 12)
    for i in range(0, stop, step):
        print(f"  t = {traj.times[i] * 1e12:7.1f} ps   l_z = {lz[i]:+.3f}   "
              f"R = {traj.resistance[i]:7.1f} ohm")
    print(f"  latency {res.latency * 1e12:.1f} ps, energy {res.energy * 1e15:.2f} fJ, "
          f"{traj.stats.accepted} steps ({traj.stats.rejected} rejected), "
          f"max norm drift {traj.stats.max_drift:.1e}")
    rd = run_read(dev, 0.1, state=res.final_state)
    print(f"  read at 0.1 V: R = {rd.resistance:.0f} ohm -> bit {rd.bit}, "
          f"disturbed: {rd.disturbed}")
