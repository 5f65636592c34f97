"""Regenerate the shipped workload profiles from the device cards.

The bar heights for each workload pin four numbers (two speedups, two
energy savings). The cost model is linear in the op counts, so each profile
is a closed-form solve; this script does the solve and then re-evaluates
every profile through the normal evaluator as a check.

    python3 demos/fit_profiles.py            # print only
    python3 demos/fit_profiles.py --write    # overwrite the shipped profiles.json
"""

import argparse
import json

from afmtj_lab.config import load_config
from afmtj_lab.imc import estimate_cpu, estimate_imc, fit_profile
from afmtj_lab.util import data_path, dump_json

# where each workload runs, its CPU runtime in cycles, and how the
# write-phase ops split between primitives
PLAN = {
    "bnn": ("L1", 1_600_000_000, {"xor": 0.7, "nand": 0.1, "write": 0.2}),
    "img-grayscale": ("main", 2_400_000_000, {"xor": 0.0, "nand": 0.3, "write": 0.7}),
    "img-threshold": ("L2", 1_200_000_000, {"xor": 0.1, "nand": 0.6, "write": 0.3}),
    "mac": ("L1", 3_000_000_000, {"xor": 0.45, "nand": 0.35, "write": 0.2}),
    "mat_add": ("L2", 2_000_000_000, {"xor": 0.5, "nand": 0.3, "write": 0.2}),
    "rmse": ("main", 2_800_000_000, {"xor": 0.4, "nand": 0.3, "write": 0.3}),
}

ap = argparse.ArgumentParser()
ap.add_argument("--write", action="store_true")
args = ap.parse_args()

setup = load_config()
im = setup.imc
ref = setup.references["fig4"]
profiles = []
for i, name in enumerate(ref["workloads"]):
    level, cycles, mix = PLAN[name]
    targets = {d: (ref["speedup"][d][i], ref["energy_savings"][d][i]) for d in ("AFMTJ", "MTJ")}
    p = fit_profile(name, level, targets, im.cards, im.hierarchy, im.cpu, cycles, mix)
    profiles.append(p)
    t_cpu, e_cpu = estimate_cpu(p, im.cpu)
    got = []
    for card in im.cards:
        t, e = estimate_imc(p, card, im.hierarchy, im.cpu)
        got.append(f"{card.label} {t_cpu / t:6.2f}x / {e_cpu / e:5.2f}x")
    print(f"{name:14s}", "   ".join(got))

if args.write:
    path = data_path("imc/profiles.json")
    path.write_text(dump_json({"profiles": [p.to_dict() for p in profiles]}))
    print("wrote", path)
