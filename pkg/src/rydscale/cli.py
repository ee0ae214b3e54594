"""Command-line entry point: ``rydscale <subcommand> [options]``.

Exit codes: 0 success, 2 config error, 3 numerical nonconvergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, units
from .analysis import FitError
from .config import ConfigError, LdaConfig, load_config, validate_config
from .io import TRAJECTORY_COLUMNS, csv_text, gnuplot_stub, json_text, trajectory_rows, write_csv, write_json
from .meanfield import ConvergenceError
from .params import REFERENCE_EXPONENTS, ParameterError, critical_exponents
from .quantum import BasisError, PropagationError
from .workflows import (
    alpha_values,
    collapse_external,
    eos_rows,
    lda_rows,
    read_external_csv,
    run_simulate,
    run_sweep,
)

log = logging.getLogger("rydscale")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _manifest(command: str, cfg, **extra) -> dict:
    return {
        "schema_version": 1,
        "command": command,
        "package_version": __version__,
        "config": cfg.model_dump(mode="json"),
        **extra,
    }


def _emit(out: Path | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _frac(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def cmd_exponents(args) -> int:
    ex = critical_exponents(args.d, args.p)
    rows = [(k, _frac(v), float(v)) for k, v in ex.as_fractions().items()]
    lines = [f"critical exponents for d={args.d}, p={args.p} (nu is derived, not quoted)"]
    lines += [f"  {k:<15s} {fr:>8s}  {val:.6f}" for k, fr, val in rows]
    lines.append("reference values (gamma, 1/delta):")
    for (d, p), ref in REFERENCE_EXPONENTS.items():
        th = ref["theory"]
        lines.append(
            f"  d={d} p={p}: theory {_frac(th['gamma'])}, {_frac(th['one_over_delta'])}; "
            f"numerics {ref['numerics']['gamma']}, {ref['numerics']['one_over_delta']}; "
            f"experiment {ref['experiment']['gamma'][0]}+-{ref['experiment']['gamma'][1]}, "
            f"{ref['experiment']['one_over_delta'][0]}+-{ref['experiment']['one_over_delta'][1]}"
        )
    print("\n".join(lines))
    if args.out is not None:
        write_csv(args.out / "exponents.csv", ["name", "fraction", "value"], rows,
                  [f"d={args.d} p={args.p}"])
    return EXIT_OK


def cmd_eos(args) -> int:
    if args.config:
        cfg = load_config(args.config, "eos")
    else:
        raw = {"d": args.d, "p": args.p}
        if args.alphas:
            raw["alphas"] = [float(a) for a in args.alphas.split(",")]
        if args.deltas:
            raw["deltas"] = [float(x) for x in args.deltas.split(",")]
        cfg = validate_config(raw, "eos")
    rows = eos_rows(alpha_values(cfg.alphas), cfg.deltas, cfg.d, cfg.p)
    text = csv_text(
        ["alpha", "Delta", "f_R", "y", "chi", "saturated"], rows,
        [f"mean-field equation of state, d={cfg.d} p={cfg.p}",
         "y = Delta/alpha^(2p/(2p+d)), chi = f_R/alpha^(2d/(2p+d))"],
    )
    _emit(args.out, "eos.csv", text)
    if args.out is not None:
        (args.out / "eos.gp").write_text(gnuplot_stub("eos.csv", 1, 3, logscale=True, title="f_R(alpha)"))
        write_json(args.out / "manifest.json", _manifest("eos", cfg))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, "simulate", {"seed": args.seed})
    traj, meta = run_simulate(cfg, workers=args.threads)
    scale = meta.get("time_unit_s")
    comments = [
        f"alpha={meta['alpha']!r} Delta={meta['delta']!r} N={cfg.ensemble.N} geometry={cfg.ensemble.geometry}",
        "tau in units of hbar/E_c",
    ]
    text = csv_text(TRAJECTORY_COLUMNS, trajectory_rows(traj), comments)
    _emit(args.out, "trajectory.csv", text)
    if args.out is not None:
        sidecar = {
            "params": {"d": cfg.model.d, "p": cfg.model.p, "alpha": meta["alpha"], "delta": meta["delta"]},
            "basis": cfg.basis.model_dump(mode="json"),
            "tol": cfg.tol,
            "master_seed": cfg.seed,
            "seeds": meta["seeds"],
            "n_max": meta["n_max"],
            "norm_drift": meta["norm_drift"],
            "energy_drift": meta["energy_drift"],
            "time_unit_s": scale,
        }
        write_json(args.out / "trajectory.json", sidecar)
        write_json(args.out / "manifest.json", _manifest("simulate", cfg, seeds=meta["seeds"]))
        (args.out / "trajectory.gp").write_text(gnuplot_stub("trajectory.csv", 1, 2, title="f_R(tau)"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, "sweep", {"seed": args.seed})

    def progress(run):
        log.info("%s alpha=%.4g f_R=%.4g g_R=%.4g", run.route, run.alpha, run.point.f_R, run.point.g_R)

    res = run_sweep(cfg, workers=args.threads, progress=progress)
    rows = [
        (r.route, r.index, r.point.alpha, r.point.g_R, r.point.f_R, r.density, r.omega, r.seed)
        for r in res.runs
    ]
    text = csv_text(
        ["route", "index", "alpha", "g_R", "f_R", "n", "omega", "seed"], rows,
        [f"scaling points d={res.d} p={res.p}", "n in m^-d, omega in rad/s"],
    )
    _emit(args.out, "points.csv", text)
    report = res.report()
    if args.out is not None:
        write_json(args.out / "fit_report.json", report)
        write_json(args.out / "manifest.json", _manifest("sweep", cfg, seeds=[r.seed for r in res.runs]))
        (args.out / "points.gp").write_text(gnuplot_stub("points.csv", 3, 5, logscale=True, title="f_R(alpha)"))
    else:
        sys.stdout.write(json_text({k: report[k] for k in ("one_over_delta", "gamma", "collapsed")}))
    return EXIT_OK


def cmd_collapse(args) -> int:
    try:
        c_p = units.interaction_coefficient(args.c6, args.p)
    except units.UnitParseError as exc:
        raise ConfigError(str(exc)) from exc
    curves = read_external_csv(args.input, args.d)
    report = collapse_external(curves, c_p, args.d, args.p)
    _emit(args.out, "fit_report.json", json_text(report))
    return EXIT_OK


def cmd_lda(args) -> int:
    if args.config:
        cfg = load_config(args.config, "lda")
    else:
        if not args.sigmas or args.atom_number is None:
            raise ConfigError("lda needs --config or --sigmas and --atom-number")
        raw = {"d": args.d, "p": args.p, "sigmas": args.sigmas.split(","), "atom_number": args.atom_number}
        if args.omegas:
            raw["omegas"] = args.omegas.split(",")
        if args.c6:
            raw["c6"] = args.c6
        cfg: LdaConfig = validate_config(raw, "lda")
    try:
        sig = [units.length(s) for s in cfg.sigmas]
        oms = [units.angular_frequency(o) for o in cfg.omegas]
        c_p = units.interaction_coefficient(cfg.c6, cfg.p)
    except units.UnitParseError as exc:
        raise ConfigError(str(exc)) from exc
    rows = lda_rows(sig, cfg.atom_number, oms, c_p, cfg.d, cfg.p)
    text = csv_text(
        ["omega", "alpha_peak", "f_R", "prefactor", "closed_form_prefactor", "lda_warning"], rows,
        [f"LDA cloud average, d={cfg.d} p={cfg.p}, sigmas(m)={sig}, N={cfg.atom_number!r}"],
    )
    _emit(args.out, "lda.csv", text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydscale", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", type=Path, required=config_required)
        p.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, default=1, help="worker processes; affects speed only")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
        return p

    p = common(sub.add_parser("exponents", help="closed-form critical exponents"))
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--p", type=int, default=6)
    p.set_defaults(func=cmd_exponents)

    p = common(sub.add_parser("eos", help="mean-field equation of state on an (alpha, Delta) grid"))
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--p", type=int, default=6)
    p.add_argument("--alphas", help="comma-separated alpha values")
    p.add_argument("--deltas", help="comma-separated Delta values")
    p.set_defaults(func=cmd_eos)

    p = common(sub.add_parser("simulate", help="disorder-averaged excitation dynamics"), config_required=True)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("sweep", help="alpha sweep, fits and data collapse"), config_required=True)
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("collapse", help="fit and collapse external excitation curves"))
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--c6", default="1.7e19 au")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--p", type=int, default=6)
    p.set_defaults(func=cmd_collapse)

    p = common(sub.add_parser("lda", help="local-density average over a Gaussian cloud"))
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--p", type=int, default=6)
    p.add_argument("--sigmas", help='comma-separated radii, e.g. "8.6 um,8.6 um,100 um"')
    p.add_argument("--atom-number", type=float)
    p.add_argument("--omegas", help='comma-separated Rabi frequencies, e.g. "31 kHz,154 kHz"')
    p.add_argument("--c6")
    p.set_defaults(func=cmd_lda)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ParameterError, BasisError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, PropagationError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
