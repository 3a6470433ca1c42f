"""Command-line front end: ``python -m fopi <command> --config motor.cfg ...``.

Every command writes CSV (the contract) plus optional SVG plots into the
output directory: ``--out-dir``, else ``$FOPI_OUT_DIR``, else the current
directory.  Exit codes: 0 ok, 2 usage/config, 3 no feasible result,
4 numerical failure, 5 missing input file.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, locus, margins, matignon, motor, relay, timesim
from .errors import ConfigError, FopiError, HorizonTooShort, NoLimitCycle, NumericalError
from .quasipoly import PiLambdaController

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_NOFILE = 5

OUT_ENV = "FOPI_OUT_DIR"
REFERENCE_FO = (2.5732, 1.45204, 1.2)
REFERENCE_IO = (1.431, 0.72)
DEFAULT_REGION_LAMBDAS = (0.8, 1.0, 1.2, 1.4)
DEFAULT_DESIGN_LAMBDAS = tuple(round(1.0 + 0.05 * k, 2) for k in range(9))


class UsageError(Exception):
    pass


class Infeasible(Exception):
    pass


class Run:
    """Tracks inputs and emitted files; writes the manifest last."""

    def __init__(self, command, out_dir, args):
        self.command = command
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.notes: list[str] = []

    def add_input(self, path):
        self.inputs[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def path(self, name) -> Path:
        self.outputs.append(name)
        return self.out_dir / name

    def write_manifest(self):
        lines = [f"command = {self.command}", f"version = {__version__}"]
        for k, v in sorted(vars(self.args).items()):
            if k in ("func", "out_dir"):
                continue
            lines.append(f"config.{k} = {v!r}")
        for p, digest in self.inputs.items():
            lines.append(f"input.{Path(p).name} = sha256:{digest}")
        for i, name in enumerate(self.outputs):
            lines.append(f"output.{i} = {name}")
        for i, note in enumerate(self.notes):
            lines.append(f"note.{i} = {note}")
        (self.out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {what}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    return vals


def _lambdas(text):
    lams = _floats(text, what="lambda list")
    if not lams:
        raise UsageError("empty lambda list")
    for lam in lams:
        if not 0.0 < lam < 2.0:
            raise UsageError(
                f"lambda={lam}: must lie in (0, 2); at 0 and 2 sin(lambda*pi/2) = 0 and the boundary equations degenerate"
            )
    return lams


def _load_plant(run, path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    params = motor.load_config(p)
    run.add_input(p)
    return params, motor.derive_tf(params)


def _out_dir(args):
    return args.out_dir or os.environ.get(OUT_ENV) or "."


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _format_tf(g):
    num = g.num.coefficient(0.0)
    den = []
    for c, e in reversed(g.den.terms):
        if e == 0:
            den.append(f"{c:.6g}")
        elif e == 1:
            den.append(f"{c:.6g} s")
        else:
            den.append(f"{c:.6g} s^{e:g}")
    return f"{num:.5g}/({' + '.join(den)})"


# ---------------------------------------------------------------- commands

def cmd_model(args, run):
    params, g = _load_plant(run, args.config)
    print(_format_tf(g))
    print(f"num: {g.num}")
    print(f"den: {g.den}")
    rows = [["num", repr(e), repr(c)] for c, e in g.num.terms]
    rows += [["den", repr(e), repr(c)] for c, e in g.den.terms]
    _write_rows(run.path("model.csv"), ("part", "exponent", "coefficient"), rows)
    return EXIT_OK


def _omega_grid(args):
    return np.logspace(math.log10(args.omega_min), math.log10(args.omega_max), args.omega_points)


def cmd_regions(args, run):
    lams = _lambdas(args.lambdas)
    _, g = _load_plant(run, args.config)
    regions = locus.global_regions(g, lams, omega_grid=_omega_grid(args), window=tuple(args.window))
    ok = [r for r in regions if r.error is None]
    for r in regions:
        if r.error is not None:
            print(f"lambda={r.lam:g}: FAILED ({r.error})", file=sys.stderr)
            run.notes.append(f"lambda {r.lam:g} failed: {r.error}")
        else:
            print(f"lambda={r.lam:g}: {len(r.curve)} boundary points, "
                  f"interior check {r.interior_check.value}, exterior check "
                  f"{r.exterior_check.value if r.exterior_check else 'n/a'}")
    locus.write_region_csv(run.path("regions.csv"), [r.curve for r in ok])
    if not args.no_plot:
        from . import plots
        plots.plot_regions(ok, run.path("regions.svg"),
                           marks=[("FO", REFERENCE_FO[:2]), ("IO", REFERENCE_IO)])
    return EXIT_OK if ok else EXIT_NUMERICAL


def _spec(args):
    return margins.DesignSpec(args.gm_db, args.pm_deg, args.gm_tol, args.pm_tol)


def _design(args, g):
    return margins.design_search(g, _lambdas(args.design_lambdas), _spec(args), grid=args.grid)


def cmd_design(args, run):
    _, g = _load_plant(run, args.config)
    result = _design(args, g)
    rows = [[repr(c.lam), repr(c.kp), repr(c.ki), repr(c.report.gain_margin_db), repr(c.report.phase_margin_deg)]
            for c in result]
    _write_rows(run.path("design.csv"), ("lambda", "kp", "ki", "gm_db", "pm_deg"), rows)
    for lam, status in result.status.items():
        msg = f"{status} feasible" if isinstance(status, int) else f"error: {status}"
        print(f"lambda={lam:g}: {msg}")
    if not rows:
        print("no feasible candidate")
        return EXIT_INFEASIBLE
    print("lambda,kp,ki,gm_db,pm_deg")
    for c in result:
        print(f"{c.lam:g},{c.kp:.6g},{c.ki:.6g},{c.report.gain_margin_db:.4g},{c.report.phase_margin_deg:.4g}")
    return EXIT_OK


def _best_candidate(result, spec):
    def score(c):
        return spec.gm_error(c.report) / spec.gm_tolerance_db + spec.pm_error(c.report) / spec.pm_tolerance_deg
    return min(result, key=score)


def _controller(args, g, run):
    if args.fo:
        kp, ki, lam = _floats(args.fo, 3, "--fo")
        return PiLambdaController(kp, ki, lam)
    if args.io:
        kp, ki = _floats(args.io, 2, "--io")
        return PiLambdaController(kp, ki, 1.0)
    if getattr(args, "from_design", False):
        result = _design(args, g)
        if not len(result):
            raise Infeasible("design search found no candidate to simulate")
        best = _best_candidate(result, _spec(args))
        run.notes.append(f"controller from design: {best.kp!r},{best.ki!r},{best.lam!r}")
        return PiLambdaController(best.kp, best.ki, best.lam)
    if getattr(args, "from_relay", False):
        res = relay.relay_experiment(g, _relay_cfg(args))
        c = relay.zn_pi(res.ku, res.pu)
        run.notes.append(f"controller from relay: {c.kp!r},{c.ki!r}")
        return c
    raise UsageError("choose a controller: --fo KP,KI,LAM | --io KP,KI | --from-design | --from-relay")


def _sim_cfg(args):
    return timesim.SimConfig(dt=args.dt, horizon=args.horizon, initial_output=args.operating_point,
                             saturation=(0.0, 100.0) if args.saturate else None)


def cmd_simulate(args, run):
    _, g = _load_plant(run, args.config)
    c = _controller(args, g, run)
    base = _sim_cfg(args)
    if args.servo_step is not None and args.load_step is not None:
        raise UsageError("use one of --servo-step / --load-step")
    if args.load_step is not None:
        cfg, kind, step = timesim.load_config(base, args.load_step, args.at), "load", args.load_step
    else:
        step = 0.0 if args.servo_step is None else args.servo_step
        cfg, kind = timesim.servo_config(base, step, args.at), "servo"
    try:
        trace = timesim.simulate_closed_loop(g, c, cfg)
    except FopiError as exc:
        raise type(exc)(f"{kind} step {step:+g}%: {exc}") from exc
    m = timesim.compute_metrics(trace)
    trace.write_csv(run.path("trace.csv"))
    fmt = lambda v: "" if v is None else repr(v)  # noqa: E731
    _write_rows(run.path("metrics.csv"),
                ("kp", "ki", "lambda", "scenario", "step", "ise", "iae", "rise_time_s", "settling_time_s"),
                [[repr(c.kp), repr(c.ki), repr(c.lam), kind, repr(step), repr(m.ise), repr(m.iae),
                  fmt(m.rise_time_s), fmt(m.settling_time_s)]])
    print(f"controller kp={c.kp:g} ki={c.ki:g} lambda={c.lam:g}; {kind} step {step:+g}%")
    print(f"ISE = {m.ise:.6g}\nIAE = {m.iae:.6g}\nrise_time_s = {m.rise_time_s}\nsettling_time_s = {m.settling_time_s}")
    if args.plot:
        from . import plots
        plots.plot_traces({"run": trace}, run.path("trace.svg"))
    return EXIT_OK


def _relay_cfg(args):
    return relay.RelayConfig(h=args.h, switch_on=args.switch_on, switch_off=args.switch_off,
                             setpoint=args.relay_setpoint, dt=args.relay_dt,
                             horizon=args.relay_horizon, settle_cycles=args.settle_cycles)


def cmd_tune_relay(args, run):
    _, g = _load_plant(run, args.config)
    try:
        cfg = _relay_cfg(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        res = relay.relay_experiment(g, cfg)
    except NoLimitCycle as exc:
        raise NoLimitCycle(f"{exc}; try a longer horizon, a wider hysteresis band or a larger relay height") from exc
    c = relay.zn_pi(res.ku, res.pu)
    print(res.as_text(), end="")
    print(f"kp = {c.kp!r}\nki = {c.ki!r}")
    res.write_csv(run.path("relay.csv"))
    _write_rows(run.path("relay_result.csv"), ("a", "pu", "ku", "kp", "ki", "cycles_used"),
                [[repr(res.a), repr(res.pu), repr(res.ku), repr(c.kp), repr(c.ki), res.cycles_used]])
    if not args.no_plot:
        from . import plots
        plots.plot_relay(res, run.path("relay.svg"))
    return EXIT_OK


def _write_poles(path, verdict):
    with open(path, "w", newline="") as fh:
        fh.write(f"# q = {verdict.q!r}\n")
        w = csv.writer(fh)
        w.writerow(("re", "im", "arg_deg", "stable_flag"))
        for re_, im, arg, flag in matignon.pole_table(verdict):
            w.writerow([repr(re_), repr(im), repr(arg), int(flag)])


def cmd_stability(args, run):
    _, g = _load_plant(run, args.config)
    c = _controller(args, g, run)
    from .quasipoly import focq
    verdict = matignon.quasi_is_stable(focq(g, c), args.max_denominator)
    label = "Stable" if verdict.stable else "Unstable"
    if verdict.boundary:
        label += " (boundary)"
    print(f"{label}: q = {verdict.q:g}, degree = {verdict.roots.size}, min_arg_margin = {verdict.min_arg_margin!r} rad")
    _write_poles(run.path("poles.csv"), verdict)
    if not args.no_plot:
        from . import plots
        plots.plot_poles(verdict, run.path("poles.svg"))
    return EXIT_OK


def cmd_paper_tables(args, run):
    params, g = _load_plant(run, args.config)
    print(f"model: {_format_tf(g)}")
    rows = [["num", repr(e), repr(c)] for c, e in g.num.terms] + [["den", repr(e), repr(c)] for c, e in g.den.terms]
    _write_rows(run.path("model.csv"), ("part", "exponent", "coefficient"), rows)
    from . import plots

    # stability regions
    regions = locus.global_regions(g, DEFAULT_REGION_LAMBDAS)
    for r in regions:
        if r.error is not None:
            run.notes.append(f"region lambda {r.lam:g} failed: {r.error}")
    ok = [r for r in regions if r.error is None]
    locus.write_region_csv(run.path("regions.csv"), [r.curve for r in ok])
    plots.plot_regions(ok, run.path("regions.svg"), marks=[("FO", REFERENCE_FO[:2]), ("IO", REFERENCE_IO)])

    # margin design
    spec = margins.DesignSpec()
    result = margins.design_search(g, DEFAULT_DESIGN_LAMBDAS, spec, grid=args.grid)
    _write_rows(run.path("design.csv"), ("lambda", "kp", "ki", "gm_db", "pm_deg"),
                [[repr(c.lam), repr(c.kp), repr(c.ki), repr(c.report.gain_margin_db),
                  repr(c.report.phase_margin_deg)] for c in result])
    # the tables compare the reference controllers; the search is reported alongside
    fo = PiLambdaController(*REFERENCE_FO)
    for lam, status in result.status.items():
        if not isinstance(status, int):
            run.notes.append(f"design lambda {lam:g} failed: {status}")
    if len(result):
        best = _best_candidate(result, spec)
        run.notes.append(f"closest design candidate: kp={best.kp!r} ki={best.ki!r} lambda={best.lam!r}")
    else:
        run.notes.append("design search found no candidate meeting the GM/PM targets")
    feasible = [f"{lam:g}" for lam, st in result.status.items() if isinstance(st, int) and st > 0]
    print(f"design: feasible lambdas {', '.join(feasible) or 'none'}")
    rep = margins.compute_margins(fo, g)
    _write_rows(run.path("margins.csv"), margins.MARGIN_CSV_HEADER, [rep.as_row()])
    w = np.logspace(-4, 4, 800)
    resp = margins.open_loop_response(fo, g, w)
    margins.write_bode_csv(run.path("bode.csv"), w, resp)
    mag, ph = margins.bode_data(resp, w)
    plots.plot_bode(w, mag, ph, run.path("bode.svg"),
                    title=f"GM = {rep.gain_margin_db:.3g} dB, PM = {rep.phase_margin_deg:.3g}°")

    # relay tuning
    try:
        res = relay.relay_experiment(g, relay.RelayConfig())
        io = relay.zn_pi(res.ku, res.pu)
        res.write_csv(run.path("relay.csv"))
        plots.plot_relay(res, run.path("relay.svg"))
        _write_rows(run.path("relay_result.csv"), ("a", "pu", "ku", "kp", "ki", "cycles_used"),
                    [[repr(res.a), repr(res.pu), repr(res.ku), repr(io.kp), repr(io.ki), res.cycles_used]])
    except NumericalError as exc:
        io = PiLambdaController(*REFERENCE_IO, 1.0)
        run.notes.append(f"relay experiment failed ({exc}); IO uses the reference controller")

    # servo and load tables
    table = timesim.run_scenario_suite(g, fo, io)
    for key, exc in table.errors.items():
        run.notes.append(f"scenario {key} failed: {exc}")
    table.write_csv(run.path("scenarios.csv"))
    traces = {}
    for name, c in (("FO", fo), ("IO", io)):
        tr = timesim.simulate_closed_loop(g, c, timesim.servo_config(timesim.SimConfig(), 5.0))
        tr.write_csv(run.path(f"servo_{name}.csv"))
        traces[name] = tr
    plots.plot_traces(traces, run.path("servo.svg"))

    # pole checks
    from .quasipoly import focq
    for name, c in (("FO", fo), ("IO", io)):
        v = matignon.quasi_is_stable(focq(g, c))
        _write_poles(run.path(f"poles_{name}.csv"), v)
        plots.plot_poles(v, run.path(f"poles_{name}.svg"))
        print(f"{name} closed loop: {'Stable' if v.stable else 'Unstable'} (q = {v.q:g})")

    print(f"FO = {fo}\nIO = {io}")
    print("servo ISE  " + "  ".join(
        f"{s:+g}%: {table.get('FO', 'servo', s).ise:.3g}/{table.get('IO', 'servo', s).ise:.3g}"
        for s in timesim.SERVO_STEPS if ("FO", "servo", s) in table.rows and ("IO", "servo", s) in table.rows))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--config", required=True, help="motor parameter file (key = value lines)")
    p.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_ENV} or .)")


def _add_controller(p, design=True, relay_opts=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fo", metavar="KP,KI,LAM", help="fractional controller")
    g.add_argument("--io", metavar="KP,KI", help="integer PI controller")
    if design:
        g.add_argument("--from-design", action="store_true", help="best GM/PM design candidate")
    if relay_opts:
        g.add_argument("--from-relay", action="store_true", help="Ziegler-Nichols PI from the relay test")


def _add_design(p):
    p.add_argument("--gm-db", type=float, default=4.5)
    p.add_argument("--pm-deg", type=float, default=20.0)
    p.add_argument("--gm-tol", type=float, default=0.5)
    p.add_argument("--pm-tol", type=float, default=2.0)
    p.add_argument("--lambdas", dest="design_lambdas", default=",".join(map(str, DEFAULT_DESIGN_LAMBDAS)))
    p.add_argument("--grid", type=int, default=60, help="samples per axis in each region's bounding box")


def _add_relay(p):
    p.add_argument("--h", type=float, default=0.5, help="relay height")
    p.add_argument("--switch-on", type=float, default=0.7)
    p.add_argument("--switch-off", type=float, default=0.3)
    p.add_argument("--relay-setpoint", type=float, default=0.5)
    p.add_argument("--relay-dt", type=float, default=5e-4)
    p.add_argument("--relay-horizon", type=float, default=30.0)
    p.add_argument("--settle-cycles", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fopi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="derive the motor transfer function")
    _add_common(p)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("regions", help="stability boundary loci per lambda")
    _add_common(p)
    p.add_argument("--lambdas", default=",".join(map(str, DEFAULT_REGION_LAMBDAS)))
    p.add_argument("--omega-min", type=float, default=1e-3)
    p.add_argument("--omega-max", type=float, default=1e3)
    p.add_argument("--omega-points", type=int, default=2000)
    p.add_argument("--window", type=float, nargs=4, default=list(locus.DEFAULT_WINDOW),
                   metavar=("KP_MIN", "KP_MAX", "KI_MIN", "KI_MAX"))
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("design", help="search controllers meeting GM/PM targets")
    _add_common(p)
    _add_design(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="closed-loop servo or load run")
    _add_common(p)
    _add_controller(p)
    _add_design(p)
    _add_relay(p)
    p.add_argument("--servo-step", type=float, default=None, help="setpoint step in %% of span")
    p.add_argument("--load-step", type=float, default=None, help="load step in %% of span at the plant input")
    p.add_argument("--at", type=float, default=0.0, help="step time [s]")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--operating-point", type=float, default=50.0)
    p.add_argument("--saturate", action="store_true", help="clip controller output to 0..100 %%")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune-relay", help="relay experiment and Ziegler-Nichols PI")
    _add_common(p)
    _add_relay(p)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_tune_relay)

    p = sub.add_parser("stability", help="Matignon pole check of the closed loop")
    _add_common(p)
    _add_controller(p, design=False)
    _add_relay(p)
    p.add_argument("--max-denominator", type=int, default=matignon.DEFAULT_MAX_DENOMINATOR)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("paper-tables", help="full reproduction pipeline")
    _add_common(p)
    p.add_argument("--grid", type=int, default=60)
    p.set_defaults(func=cmd_paper_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        # fail on a missing config before creating any output
        if not Path(args.config).is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        run = Run(args.command, _out_dir(args), args)
        code = args.func(args, run)
        run.write_manifest()
        return code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOFILE
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except HorizonTooShort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FopiError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
