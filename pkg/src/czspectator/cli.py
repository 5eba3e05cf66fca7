"""``czspectator`` command line.

Exit status: 0 success, 1 usage error, 2 invalid input (device file, value
ranges), 3 numerical failure (no root, every point divergent, ...).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from czspectator import bench, dispersive, dynamics, kernels, oracle, tomography
from czspectator.device import (
    DeviceError,
    GateContext,
    NumericalError,
    Role,
    example_device_path,
    load_device,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _spectator(text):
    label, _, role = text.partition(":")
    if not label:
        raise argparse.ArgumentTypeError(f"bad spectator {text!r}; use LABEL[:comp|leak]")
    try:
        return label, Role.parse(role or "comp")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--device", type=Path, help="device JSON (default: bundled 7-qubit example)")
    p.add_argument("--out", type=Path, help="output directory; tables go to stdout when omitted")
    p.add_argument("--seed", type=_u64, default=0, help="RNG seed (default 0)")
    p.add_argument("--dims", type=int, default=4, help="levels per transmon for exact calculations")
    p.add_argument("--pole-eps", type=float, default=dispersive.POLE_EPS, help="pole exclusion (MHz)")
    p.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
    p.add_argument("--workers", type=int, default=1, help="processes for sweeps and budgets")
    return p


def _gate_args(p):
    p.add_argument("--g1", default="Q4", help="gate qubit that stays in the computational space")
    p.add_argument("--g2", default="Q2", help="gate qubit whose |2> is used")
    p.add_argument("--spectator", action="append", type=_spectator, default=None,
                   metavar="LABEL[:ROLE]", help="repeatable; role comp (default) or leak")
    p.add_argument("--t-g", type=float, default=80.0)
    p.add_argument("--t-b", type=float, default=5.0)
    p.add_argument("--t-s", type=float, default=53.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="czspectator", description="Spectator-induced CZ gate errors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("shifts", parents=[common], help="dispersive shifts of every coupled pair")
    p.add_argument("--exact", action="store_true", help="add exact-diagonalisation columns")

    p = sub.add_parser("sweep", parents=[common], help="error model along one parameter")
    _gate_args(p)
    p.add_argument("--param", choices=bench.SWEEP_PARAMETERS, default="spectator_detuning")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--exact", action="store_true")

    p = sub.add_parser("budget", parents=[common], help="errors for every spectator configuration")
    _gate_args(p)

    p = sub.add_parser("simulate", parents=[common], help="pulse-level simulation of the gate")
    p.add_argument("--g1", default="Q4")
    p.add_argument("--g2", default="Q2")
    p.add_argument("--spectator-delta", type=float, default=0.0, help="shift of g1's |1> level (MHz)")
    p.add_argument("--amplitude", type=float, help="flux excursion (MHz); calibrated when omitted")
    p.add_argument("--duration", type=float, help="pulse length (ns)")
    p.add_argument("--sigma", type=float, default=1.0, help="Gaussian filter width (ns)")
    p.add_argument("--levels", type=int, default=3, help="levels per transmon in the simulation")
    p.add_argument("--record-every", type=int, default=0)
    p.add_argument("--backend", choices=kernels.available_backends())

    p = sub.add_parser("tomo", parents=[common], help="CZ infidelity from phase errors")
    p.add_argument("--d1", type=float, default=0.0, help="dynamical phase error of g1 (deg)")
    p.add_argument("--d2", type=float, default=0.0, help="dynamical phase error of g2 (deg)")
    p.add_argument("--dc", type=float, default=0.0, help="conditional phase error (deg)")
    p.add_argument("--repeat", type=int, default=1, help="gates in series")

    p = sub.add_parser("ramsey", parents=[common], help="synthetic conditional-phase fringes")
    p.add_argument("--dphi", type=float, required=True, help="injected conditional phase error (deg)")
    p.add_argument("--contrast", type=float, default=bench.RAMSEY_CONTRAST)
    p.add_argument("--shots", type=int, default=0, help="shots per phase point; 0 = noiseless")
    p.add_argument("--points", type=int, default=bench.RAMSEY_POINTS)

    p = sub.add_parser("fig", parents=[common], help="tables and charts of a figure scenario")
    p.add_argument("name", choices=bench.FIGURES)
    return parser


def _device(args):
    path = args.device or example_device_path()
    return load_device(path)


def _ctx(args, device):
    specs = args.spectator
    if specs is None:
        specs = [(n, Role.COMPUTATIONAL) for n in device.neighbors(args.g1) if n != args.g2]
    for label, _ in specs:
        device.qubit(label)
    device.qubit(args.g1)
    device.qubit(args.g2)
    return GateContext(args.g1, args.g2, tuple(specs), args.t_g, args.t_b, args.t_s)


def _emit(rows, args, name, columns=None, plot=None):
    if args.out is None:
        bench.write_csv(rows, sys.stdout, columns)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format in ("csv", "both"):
        print(bench.write_csv(rows, args.out / f"{name}.csv", columns))
    if args.format in ("svg", "both") and plot is not None:
        series, xl, yl = plot
        print(bench.write_svg(args.out / f"{name}.svg", series, xl, yl, name))


def _col(rows, key):
    return [r[key] for r in rows]


def cmd_shifts(args):
    device = _device(args)
    rows = []
    for c in device.couplings:
        for g, s in ((c.a, c.b), (c.b, c.a)):
            gate, spec = device.qubit(g), device.qubit(s)
            sh = dispersive.shifts(gate, spec, c.j, args.pole_eps)
            row = {"gate": g, "spectator": s, "detuning_mhz": spec.freq - gate.freq,
                   "zeta1_mhz": sh.zeta1, "zeta2_mhz": sh.zeta2, "zeta12_mhz": sh.zeta12,
                   "diverged": sh.diverged}
            if sh.diverged:
                row.update(zeta1_mhz=math.nan, zeta2_mhz=math.nan, zeta12_mhz=math.nan)
            if args.exact:
                ex = oracle.exact_shifts_at(gate, spec, c.j, args.dims)
                row.update(exact_zeta1_mhz=ex.zeta1, exact_zeta12_mhz=ex.zeta12, hybridized=ex.diverged)
            rows.append(row)
    _emit(rows, args, "shifts")


def cmd_sweep(args):
    device = _device(args)
    ctx = _ctx(args, device)
    spec = bench.SweepSpec(args.param, args.start, args.stop, args.points, ctx, device,
                           pole_eps=args.pole_eps, exact=args.exact, dims=args.dims)
    rows = bench.run_sweep(spec, workers=args.workers)
    plot = ({"d_phi_c": (_col(rows, "x"), _col(rows, "d_phi_c_deg"))}, args.param, "conditional phase error (deg)")
    _emit(rows, args, f"sweep_{args.param}", bench.SWEEP_COLUMNS, plot)


def cmd_budget(args):
    device = _device(args)
    ctx = _ctx(args, device)
    rows = bench.budget_table(ctx, bench.run_budget(ctx, device, args.pole_eps, args.workers))
    plot = ({"eps_cz": (list(range(len(rows))), _col(rows, "eps_cz"))}, "configuration index", "CZ error")
    _emit(rows, args, "budget", plot=plot)


def cmd_simulate(args):
    device = _device(args)
    g1, g2 = device.qubit(args.g1), device.qubit(args.g2)
    j = device.coupling(g1.id, g2.id)
    if not j > 0:
        raise ValueError(f"{g1.id} and {g2.id} are not coupled")
    if args.levels < 3:
        raise ValueError("--levels must be at least 3")
    if args.amplitude is None:
        pulse = dynamics.calibrate_pulse(g1, g2, j, sigma=args.sigma, dims=args.levels, backend=args.backend)
    else:
        duration = args.duration or dynamics.gate_duration_from_j(j)
        pulse = dynamics.PulseShape(args.amplitude, duration, args.sigma)
    out = dynamics.simulate_full_pair(g1, g2, j, pulse, args.spectator_delta, args.levels,
                                      record_every=args.record_every, backend=args.backend)
    row = {"amplitude_mhz": pulse.amplitude, "duration_ns": pulse.duration, "sigma_ns": pulse.sigma,
           "phi_c_deg": out.phi_c, "d_phi_c_deg": dynamics.phase_offset(out.phi_c),
           "leak": out.leak, "p02": out.p02, "norm_error": out.norm_error}
    _emit([row], args, "simulate")
    if args.out is not None and out.trajectory is not None:
        path = args.out / "trajectory.csv"
        dynamics.write_trajectory_csv(out, path)
        print(path)


def cmd_tomo(args):
    eps = tomography.phase_error(args.d1, args.d2, args.dc)
    row = {"d1_deg": args.d1, "d2_deg": args.d2, "dc_deg": args.dc, "eps_cz": eps,
           "eps_quadratic": tomography.quadratic_phase_error(args.d1, args.d2, args.dc)}
    if args.repeat > 1:
        total, ratio = tomography.repeated_gate_error_scaling(args.repeat, args.d1, args.d2, args.dc)
        row.update(repeat=args.repeat, eps_repeated=total, ratio=ratio)
    _emit([row], args, "tomo")


def cmd_ramsey(args):
    res = bench.synthesize_ramsey(args.dphi, args.contrast, args.shots or None, args.points, seed=args.seed)
    rows = [{"phase_deg": p, "p_control0": a, "p_control1": b}
            for p, a, b in zip(res.phases, res.control0, res.control1)]
    plot = ({"control |0>": (res.phases, res.control0), "control |1>": (res.phases, res.control1)},
            "phase (deg)", "excited population")
    _emit(rows, args, "ramsey", plot=plot)
    print(f"phase difference {res.difference:.4f} +/- {res.sigma:.4f} deg "
          f"(d_phi_c {res.d_phi_c:.4f} deg)", file=sys.stderr if args.out is None else sys.stdout)


def cmd_fig(args):
    device = _device(args) if args.device else None
    out = args.out or Path(".")
    result = bench.reproduce_figure(args.name, out, args.format, device, args.pole_eps, args.dims)
    for f in result.files:
        print(f)


COMMANDS = {
    "shifts": cmd_shifts, "sweep": cmd_sweep, "budget": cmd_budget, "simulate": cmd_simulate,
    "tomo": cmd_tomo, "ramsey": cmd_ramsey, "fig": cmd_fig,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.dims < 3:
        print("czspectator: error: --dims must be at least 3", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"czspectator: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DeviceError as exc:
        print(f"czspectator: invalid device: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, OSError) as exc:
        print(f"czspectator: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
