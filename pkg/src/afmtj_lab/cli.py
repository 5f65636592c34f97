"""Command-line entry point: ``afmtj-lab <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 invalid input or failed check, 2 numerical failure,
3 calibration did not converge.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bitline import SenseConfig, SenseError, truth_table
from .config import ConfigError, load_config
from .device import ResistanceModel
from .imc import DeviceCard, speedup_report
from .integrator import NumericalError
from .sweep import SweepConfig, calibrate, voltage_sweep
from .transient import PulseSpec, run_read, run_write, trajectory_csv
from .util import atomic_write_text, dump_json, sha256_of

log = logging.getLogger("afmtj_lab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 1, 2, 3
LOGIC_OPS = ("nand", "xor")
TRUTH = {"nand": lambda a, b: int(not (a and b)), "xor": lambda a, b: a ^ b,
         "and": lambda a, b: a & b}


class Outputs:
    """Collects files written by a subcommand for the run manifest."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.files = {}

    def write(self, name, text):
        atomic_write_text(self.dir / name, text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()


def _fmt(x):
    return "" if x is None or x != x else repr(float(x))


# -- subcommands -----------------------------------------------------------

def cmd_write_sim(setup, args, out):
    if not setup.devices:
        raise ConfigError("config.devices: write-sim needs at least one device")
    pulse = PulseSpec(setup.write_voltage, setup.pulse_width, setup.polarity)
    summary = {}
    for label, dev in sorted(setup.devices.items()):
        res = run_write(dev, pulse, setup.solver, setup.crit)
        out.write(f"trajectory_{label}.csv", trajectory_csv(res.trajectory, dev.kind))
        read = run_read(dev, setup.v_read, setup.solver, res.final_state, setup.read_ceiling)
        st = res.trajectory.stats
        summary[label] = {
            "voltage_V": pulse.voltage, "switched": res.switched,
            "latency_ps": None if res.latency is None else res.latency * 1e12,
            "energy_fJ": None if res.energy is None else res.energy * 1e15,
            "read_bit_after": read.bit, "accepted_steps": st.accepted,
            "rejected_steps": st.rejected, "max_norm_drift": st.max_drift}
        lat = "no switch" if not res.switched else f"{res.latency * 1e12:.1f} ps, {res.energy * 1e15:.2f} fJ"
        print(f"{label}: {abs(pulse.voltage):.2f} V -> {lat}")
    out.write("write_summary.json", dump_json(summary))
    return EXIT_OK


def _fig3_csv(table, labels, voltages, column, ref, ref_key):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["voltage_V"] + list(labels)
    if ref:
        header += [f"{k}_ref" for k in labels]
    w.writerow(header)
    for v in voltages:
        row = [repr(v)] + [_fmt(getattr(table.get(k, v), column)) for k in labels]
        if ref:
            for k in labels:
                vs = ref["voltage_V"]
                match = [i for i, x in enumerate(vs) if abs(x - v) < 1e-9]
                row.append(_fmt(ref[k][ref_key][match[0]]) if match and k in ref else "")
        w.writerow(row)
    return buf.getvalue()


def cmd_sweep(setup, args, out):
    if not setup.devices:
        raise ConfigError("config.devices: sweep needs at least one device")
    cfg = SweepConfig(setup.devices, setup.voltages, setup.solver, setup.crit,
                      setup.pulse_width, setup.polarity)
    table = voltage_sweep(cfg, jobs=args.jobs)
    out.write(f"sweep.{args.format}", table.to_csv() if args.format == "csv" else table.to_json())
    labels = sorted(setup.devices)
    ref = (setup.references or {}).get("fig3")
    out.write("fig3_latency.csv", _fig3_csv(table, labels, cfg.voltages, "latency_ps", ref, "latency_ps"))
    out.write("fig3_energy.csv", _fig3_csv(table, labels, cfg.voltages, "energy_fJ", ref, "energy_fJ"))
    for r in table.rows:
        val = "unswitched" if not r.switched else f"{r.latency_ps:9.1f} ps {r.energy_fJ:9.2f} fJ"
        print(f"{r.device:6s} {r.voltage:4.2f} V  {val}")
    v_nom = setup.imc.v_nom if setup.imc else 1.0
    if any(abs(v - v_nom) < 1e-9 for v in cfg.voltages):
        t_s = setup.imc.t_sense if setup.imc else 100e-12
        e_s = setup.imc.e_sense if setup.imc else 0.05e-15
        cards = [DeviceCard.from_sweep(table, k, t_s, e_s, v_nom) for k in labels
                 if table.get(k, v_nom).switched]
        out.write("device_cards.json",
                  dump_json({"v_nom_V": v_nom, "cards": [c.to_dict() for c in cards]}))
    return EXIT_OK


def cmd_calibrate(setup, args, out):
    if not setup.calibration:
        raise ConfigError("config.calibration: nothing to calibrate")
    report, code = {}, EXIT_OK
    for label, (base, prob) in sorted(setup.calibration.items()):
        res = calibrate(prob, base)
        out.write(f"calibrated_{label}.json", dump_json(res.device.to_dict()))
        report[label] = res.report()
        worst = max(abs(r) if r is not None else float("inf") for _, _, r in res.residuals)
        print(f"{label}: {'converged' if res.converged else 'NOT converged'} after "
              f"{res.n_evals} evaluations, worst residual {worst:.2e}")
        if not res.converged:
            code = EXIT_NOT_CONVERGED
    out.write("calibration_report.json", dump_json(report))
    return code


def cmd_logic(setup, args, out):
    if setup.logic is None:
        raise ConfigError("config.logic: section required")
    lg = setup.logic
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tmr", "op", "a", "b", "conductance_uS", "current_uA", "out", "expected",
                "margin_uS"])
    ok = True
    for tmr in sorted(set(lg.tmr_grid) | {lg.rmodel.tmr}):
        rmodel = ResistanceModel(lg.rmodel.r_p, tmr)
        cfg = SenseConfig.auto(rmodel, lg.sense.v_read, lg.sense.margin_floor)
        for op in LOGIC_OPS:
            rows = truth_table(op, rmodel, cfg)
            for r in rows:
                exp = TRUTH[op](r.a, r.b)
                ok &= r.out == exp and r.margin > 0
                w.writerow([repr(tmr), op, r.a, r.b, repr(r.conductance * 1e6),
                            repr(r.current * 1e6), r.out, exp, repr(r.margin * 1e6)])
            if tmr == lg.rmodel.tmr:
                print(f"{op.upper()} (r_p {rmodel.r_p:.0f} ohm, tmr {tmr:g})")
                for r in rows:
                    print(f"  {r.a} {r.b}  G = {r.conductance * 1e6:7.1f} uS  -> {r.out}")
    s = lg.sense
    print(f"refs: and {s.ref_and * 1e6:.1f} uS, xor window "
          f"({s.ref_xor_lo * 1e6:.1f}, {s.ref_xor_hi * 1e6:.1f}) uS")
    out.write("logic_truth.csv", buf.getvalue())
    return EXIT_OK if ok else EXIT_INVALID


def cmd_imc(setup, args, out):
    if setup.imc is None:
        raise ConfigError("config.imc: section required")
    im = setup.imc
    rep = speedup_report(im.profiles, im.cards, im.hierarchy, im.cpu)
    out.write(f"fig4_report.{args.format}", rep.to_csv() if args.format == "csv" else rep.to_json())
    for dev in rep.devices():
        print(f"{dev}: average speedup {rep.average(dev, 'speedup'):.2f}x, "
              f"energy savings {rep.average(dev, 'energy_savings'):.2f}x")
    return EXIT_OK


def cmd_validate(setup, args, out):
    from .acceptance import run_all
    checks = run_all(setup, jobs=args.jobs)
    for c in checks:
        print(c.line())
    out.write("validation_report.json",
              dump_json([{"criterion": c.criterion, "name": c.name, "passed": c.passed,
                          "detail": c.detail} for c in checks]))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVALID


COMMANDS = {"write-sim": cmd_write_sim, "sweep": cmd_sweep, "calibrate": cmd_calibrate,
            "logic": cmd_logic, "imc": cmd_imc, "validate": cmd_validate}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON (default: shipped config)")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, help="override the solver RNG seed")
    common.add_argument("--jobs", type=int, help="worker processes (env AFMTJ_LAB_JOBS)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="count", default=0)
    p = argparse.ArgumentParser(prog="afmtj-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _jobs(value):
    if value is None:
        env = os.environ.get("AFMTJ_LAB_JOBS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError(f"AFMTJ_LAB_JOBS: expected an integer, got {env!r}")
        else:
            value = 1
    if value < 1:
        raise ConfigError(f"--jobs must be >= 1, got {value}")
    return value


def _manifest(args, setup, out):
    resolved = {k: d.to_dict() for k, d in sorted(setup.devices.items())}
    return dump_json({
        "tool": "afmtj-lab", "version": __version__, "subcommand": args.cmd,
        "config": setup.source, "config_sha256": sha256_of({"raw": setup.raw, "devices": resolved}),
        "seed": setup.solver.rng_seed, "jobs": args.jobs, "outputs": out.files,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    })


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    out = Outputs(args.out)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        args.jobs = _jobs(args.jobs)
        setup = load_config(args.config)
        if args.seed is not None:
            setup.with_seed(args.seed)
        code = COMMANDS[args.cmd](setup, args, out)
    except (ConfigError, SenseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INVALID
    atomic_write_text(out.dir / "run-manifest.json", _manifest(args, setup, out))
    return code


if __name__ == "__main__":
    sys.exit(main())
