"""Command-line front end.

Every subcommand writes its data files plus ``<command>_manifest.json`` into
``--out-dir`` (default: ``$QKR_OUTPUT_DIR`` or the working directory).
Options may also come from a JSON file given with ``--config``; keys are the
option names with dashes replaced by underscores, and unknown keys are an
error.  Command-line flags override the file.

Exit codes: 0 success, 2 invalid input, 3 numerical guard (norm drift or
momentum-grid aliasing).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .core import (
    AliasingWarning,
    KickedRotorParams,
    NumericalGuardError,
    ValidationError,
    grid,
    make_gaussian_packet,
    wrapped_gaussian,
)
from .io import default_output_dir, save_snapshot, write_csv, write_manifest, write_series_csv
from .sweep import TASKS, parse_axis, parse_grid, parse_number, run_sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3


def _number_list(text):
    if isinstance(text, (list, tuple)):
        return [parse_number(v) for v in text]
    return parse_axis(str(text))


def _int_list(text):
    return [int(v) for v in _number_list(text)]


def _resolve_K(args, hbar: float) -> float:
    if args.K is not None and args.kappa is not None:
        raise ValidationError("give either --K or --kappa, not both")
    if args.kappa is not None:
        return float(args.kappa) * hbar
    if args.K is None:
        raise ValidationError("one of --K or --kappa is required")
    return float(args.K)


def _packet_args(p, n_default=1024):
    p.add_argument("--beta", type=parse_number, default=0.0)
    p.add_argument("--x0", type=parse_number, default=0.0)
    p.add_argument("--sigma", type=parse_number, default=0.1)
    p.add_argument("--n", type=int, default=n_default, help="grid size (power of two >= 32)")


def _strength_args(p):
    p.add_argument("--K", type=parse_number, default=None)
    p.add_argument("--kappa", type=parse_number, default=None)


def count_maxima(density: np.ndarray, rel: float = 0.1) -> int:
    """Local maxima (periodic) that exceed ``rel`` times the global maximum."""
    left = np.roll(density, 1)
    right = np.roll(density, -1)
    peak = (density > left) & (density >= right) & (density > rel * density.max())
    return int(np.count_nonzero(peak))


# --- subcommands ----------------------------------------------------------------


def cmd_classical(args, out: Path):
    from .classical import ensemble_energy_series, fitted_slope, trajectory

    K = float(args.K)
    if args.ensemble is not None:
        series = ensemble_energy_series(args.ensemble, K, args.steps, args.seed)
        path = write_series_csv(out / "classical_ensemble.csv", series, ("t", "e_mean"))
        slope = fitted_slope(series)
        print(f"fitted energy slope: {slope:.6g}")
        return [path], {"slope": slope}, args.seed
    xs, ps = trajectory(args.x0, args.p0, K, args.steps)
    rows = [(t, xs[t], ps[t]) for t in range(args.steps + 1)]
    return [write_csv(out / "classical_trajectory.csv", ["t", "X", "P"], rows)], {}, None


def cmd_talbot(args, out: Path):
    from .propagator import free_evolve

    taus = _number_list(args.times)
    psi0 = make_gaussian_packet(args.x0, args.sigma, args.beta, args.n)
    params = KickedRotorParams(0.0, args.hbar)
    outputs, summary, columns = [], [], [psi0.x]
    for tau in taus:
        state = free_evolve(psi0, params, float(tau))
        rho = state.density()
        outputs.append(save_snapshot(out / f"talbot_tau{float(tau):g}.json", state))
        columns.append(rho)
        summary.append((tau, count_maxima(rho), rho.max(), rho.min(), rho.max() / max(rho.min(), 1e-300)))
    outputs.append(write_csv(out / "talbot_summary.csv",
                             ["tau", "n_maxima", "max_density", "min_density", "contrast"], summary))
    header = ["X"] + [f"rho_tau{float(t):g}" for t in taus]
    outputs.append(write_csv(out / "talbot_density.csv", header, list(zip(*columns))))
    return outputs, {}, None


def cmd_evolve(args, out: Path):
    from .propagator import evolve

    params = KickedRotorParams(_resolve_K(args, args.hbar), args.hbar)
    psi0 = make_gaussian_packet(args.x0, args.sigma, args.beta, args.n)
    snaps = _int_list(args.snapshots) if args.snapshots else []
    _, series, states = evolve(psi0, params, args.kicks, snapshots=snaps)
    outputs = [write_series_csv(out / "evolve_series.csv", series)]
    for t in sorted(states):
        outputs.append(save_snapshot(out / f"evolve_t{t}.json", states[t]))
    if states:
        ts = sorted(states)
        header = ["X"] + [f"rho_t{t}" for t in ts]
        cols = [psi0.x] + [states[t].density() for t in ts]
        outputs.append(write_csv(out / "evolve_density.csv", header, list(zip(*cols))))
    return outputs, {}, None


def cmd_sqr(args, out: Path):
    from .sqr import classification_report, sqr_series

    hbar = 2 * math.pi * args.ell
    params = KickedRotorParams(_resolve_K(args, hbar), hbar)
    psi0 = make_gaussian_packet(args.x0, args.sigma, args.beta, args.n)
    report = classification_report(psi0, params)
    path = out / "sqr_report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True))
    outputs = [path]
    if args.kicks > 0:
        series = sqr_series(psi0, params, args.kicks)
        outputs.append(write_series_csv(out / "sqr_series.csv", series, ("t", "p_mean", "e_mean")))
    return outputs, report, None


def cmd_hqr(args, out: Path):
    from . import hqr

    if args.mode == "table":
        rows = hqr.slope_table(_number_list(args.x0s), _number_list(args.kappas))
        return [write_csv(out / "hqr_slopes.csv", ["X0", "kappa", "D"], rows)], {}, None

    regime = hqr.HqrRegime(args.beta, args.kappa)
    if args.mode == "rate":
        rows = [(x0, args.kappa, regime.beta, hqr.ballistic_rate(x0, regime)) for x0 in _number_list(args.x0s)]
        return [write_csv(out / "hqr_rates.csv", ["X0", "kappa", "beta", "rate"], rows)], {}, None

    from .propagator import evolve

    model = hqr.momentum_series_hqr(args.x0, regime, args.kicks)
    psi0 = make_gaussian_packet(args.x0, args.sigma, args.beta, args.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", hqr.SubpacketOverlapWarning)
        packet = hqr.packet_momentum_series_hqr(psi0, regime, args.kicks)
    _, prop, _ = evolve(psi0, KickedRotorParams(regime.K, hqr.HBAR_PI), args.kicks)
    p_model = model.series.p_mean + prop.p_mean[0]
    rows = list(zip(prop.times, p_model, packet.p_mean, prop.p_mean, prop.e_mean))
    path = write_csv(out / "hqr_series.csv", ["t", "p_model", "p_packet_model", "p_propagator", "e_propagator"], rows)
    slope = float(np.polyfit(prop.times, prop.p_mean, 1)[0])
    print(f"propagator <P> slope: {slope:.6g} ({slope / regime.K:.4g} K)")
    return [path], {"p_slope": slope}, None


def cmd_average(args, out: Path):
    from .averaging import average_over_beta

    params = KickedRotorParams(_resolve_K(args, args.hbar), args.hbar)
    env = wrapped_gaussian(grid(args.n), args.x0, args.sigma)
    res = average_over_beta(env, params, args.kicks, args.n_beta, args.mode, jobs=args.jobs)
    path = write_series_csv(out / "average.csv", res.series, ("t", "p_mean", "e_mean"),
                            names=("t", "p_mean_avg", "e_mean_avg"))
    slope = res.energy_slope()
    print(f"averaged energy slope: {slope:.10g}  (K^2/4 = {params.K ** 2 / 4:.10g})")
    return [path], {"energy_slope": slope, "envelope": "wrapped_gaussian"}, None


def cmd_sweep(args, out: Path):
    if args.task is None or args.grid is None:
        raise ValidationError("sweep needs --task and --grid")
    axes = args.grid if isinstance(args.grid, dict) else parse_grid(args.grid)
    axes = {k: _number_list(v) for k, v in axes.items()}
    base = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        base[key.strip()] = value.strip() if key.strip() == "mode" else parse_number(value)
    if isinstance(args.base, dict):
        base = {**args.base, **base}
    path, computed = run_sweep(args.task, base, axes, out, jobs=args.jobs, resume=not args.no_resume)
    print(f"{computed} point(s) computed, results in {path}")
    return [path], {"computed": computed}, None


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkr", description="Quantum kicked rotor at resonance.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON file of option values")
        p.add_argument("--out-dir", default=None)
        p.set_defaults(func=func)
        return p

    p = add("classical", cmd_classical, "standard map trajectory or ensemble energy")
    p.add_argument("--K", type=parse_number, required=False, default=None)
    p.add_argument("--x0", type=parse_number, default=0.0)
    p.add_argument("--p0", type=parse_number, default=0.0)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--ensemble", type=int, default=None, help="number of particles")
    p.add_argument("--seed", type=int, default=0)

    p = add("talbot", cmd_talbot, "free evolution snapshots over one period")
    p.add_argument("--hbar", type=parse_number, default=4 * math.pi)
    _packet_args(p, 512)
    p.add_argument("--times", default="0,0.115,0.25,1", help="fractions of the kick period")

    p = add("evolve", cmd_evolve, "split-operator evolution of a Gaussian packet")
    p.add_argument("--hbar", type=parse_number, required=False, default=None)
    _strength_args(p)
    _packet_args(p)
    p.add_argument("--kicks", type=int, default=10)
    p.add_argument("--snapshots", default="", help="kick numbers to save, e.g. 0,1,2,5")

    p = add("sqr", cmd_sqr, "simple resonance hbar = 2 pi l: classification and closed forms")
    p.add_argument("--ell", type=int, default=1)
    _strength_args(p)
    _packet_args(p)
    p.add_argument("--kicks", type=int, default=0)

    p = add("hqr", cmd_hqr, "half resonance hbar = pi")
    p.add_argument("--mode", choices=("table", "series", "rate"), default="table")
    p.add_argument("--x0s", default="0:pi:33", help="X0 values for table/rate")
    p.add_argument("--kappas", default="0.5,1,2", help="kappa values for table")
    p.add_argument("--kappa", type=parse_number, default=1.0)
    _packet_args(p)
    p.add_argument("--kicks", type=int, default=200)

    p = add("average", cmd_average, "quasimomentum-averaged observables")
    p.add_argument("--hbar", type=parse_number, default=4 * math.pi)
    _strength_args(p)
    p.add_argument("--x0", type=parse_number, default=0.0)
    p.add_argument("--sigma", type=parse_number, default=0.1)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--n-beta", type=int, default=256)
    p.add_argument("--kicks", type=int, default=100)
    p.add_argument("--mode", choices=("closed_form", "propagator"), default="closed_form")
    p.add_argument("--jobs", type=int, default=1)

    p = add("sweep", cmd_sweep, "Cartesian parameter sweep with ordered output")
    p.add_argument("--task", choices=sorted(TASKS), default=None)
    p.add_argument("--grid", default=None, help='axes, e.g. "x0=0:pi:33;kappa=0.5,1,2"')
    p.add_argument("--set", action="append", default=None, help="fixed parameter key=value")
    p.add_argument("--base", default=None, help=argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-resume", action="store_true")
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser, argv):
    """Parse twice: once to find the command and config file, then with file defaults."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a JSON object")
    sp = _subparser(parser, args.command)
    known = {a.dest for a in sp._actions} - {"help", "config"}  # noqa: SLF001
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    converted = {}
    for a in sp._actions:  # noqa: SLF001
        if a.dest in cfg:
            v = cfg[a.dest]
            converted[a.dest] = a.type(v) if a.type is not None and isinstance(v, str) else v
    sp.set_defaults(**converted)
    return parser.parse_args(argv)


def _params_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out_dir", "jobs")}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "classical" and args.K is None:
            raise ValidationError("--K is required")
        if args.command == "evolve" and args.hbar is None:
            raise ValidationError("--hbar is required")
        out = Path(args.out_dir) if args.out_dir else default_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("error", AliasingWarning)
            outputs, results, seed = args.func(args, out)
        elapsed = time.perf_counter() - start
        params = _params_of(args)
        if results:
            params["results"] = results
        write_manifest(out / f"{args.command}_manifest.json", args.command, params,
                       [Path(o).name for o in outputs],
                       {"wall_seconds": elapsed, "jobs": getattr(args, "jobs", 1)}, seed)
        return EXIT_OK
    except (NumericalGuardError, AliasingWarning) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
