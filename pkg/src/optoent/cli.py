"""Command-line entry point: ``optoent <command> ...``.

Exit codes: 0 success, 2 config/usage error, 3 unstable system,
4 regime violation, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, readout, sweep
from .config import format_config, load_config
from .constants import DEFAULT_KAPPA_CONVENTION, KAPPA_CONVENTIONS
from .errors import ConfigError, OptoEntError, UnstableSystem
from .kernels import BACKENDS, DEFAULT_BACKEND
from .lyapunov import check_physicality, solve_lyapunov
from .entanglement import entanglement_report
from .model import PhysicalParams, resolve_model
from .stability import analyze, stability_rh

TWO_PI = 2 * math.pi


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _kv_lines(pairs) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in pairs)


# -- parameters ---------------------------------------------------------------

def _add_param_args(p: argparse.ArgumentParser, presets: bool = False) -> None:
    src = p.add_argument_group("parameter source")
    src.add_argument("--config", type=Path, help="key = value parameter file")
    if presets:
        src.add_argument("--preset", choices=sweep.PRESETS, help="figure preset")
    ov = p.add_argument_group("overrides (laboratory units)")
    ov.add_argument("--kappa-convention", choices=sorted(KAPPA_CONVENTIONS), default=DEFAULT_KAPPA_CONVENTION)
    ov.add_argument("--delta-over-wm", type=float, help="effective detuning Δ/w_m")
    ov.add_argument("--temperature-k", type=float)
    ov.add_argument("--temperature-mk", type=float)
    ov.add_argument("--mass-ng", type=float)
    ov.add_argument("--power-mw", type=float)
    ov.add_argument("--finesse", type=float)
    ov.add_argument("--quality-factor", type=float)
    ov.add_argument("--wm-mhz", type=float, help="mechanical frequency w_m/2π in MHz")
    ov.add_argument("--length-mm", type=float, help="cavity length in mm")
    ov.add_argument("--wavelength-nm", type=float)


def _apply_overrides(p: PhysicalParams, args) -> PhysicalParams:
    ch = {"kappa_convention": args.kappa_convention}
    if args.wm_mhz is not None:
        # keep Q and Δ/w_m fixed when the mechanical frequency changes
        wm = TWO_PI * args.wm_mhz * 1e6
        ch.update(wm=wm, gamma_m=p.gamma_m * wm / p.wm)
        if p.detuning_kind == "effective":
            ch["detuning"] = p.detuning * wm / p.wm
        p = p.replace(**ch)
    if args.length_mm is not None:
        ch["cavity_length"] = args.length_mm * 1e-3
    if args.wavelength_nm is not None:
        ch["wavelength"] = args.wavelength_nm * 1e-9
    if args.delta_over_wm is not None:
        ch.update(detuning=args.delta_over_wm * p.wm, detuning_kind="effective")
    if args.temperature_k is not None and args.temperature_mk is not None:
        raise ConfigError("give --temperature-k or --temperature-mk, not both")
    if args.temperature_k is not None:
        ch["temperature"] = args.temperature_k
    if args.temperature_mk is not None:
        ch["temperature"] = args.temperature_mk * 1e-3
    if args.mass_ng is not None:
        ch["mass"] = args.mass_ng * 1e-12
    if args.power_mw is not None:
        ch["power"] = args.power_mw * 1e-3
    if args.finesse is not None:
        ch["finesse"] = args.finesse
    if args.quality_factor is not None:
        if not args.quality_factor > 0:
            raise ConfigError("--quality-factor must be > 0")
        ch["gamma_m"] = p.wm / args.quality_factor
    return p.replace(**ch)


def _params(args) -> PhysicalParams:
    preset = getattr(args, "preset", None)
    if preset and args.config:
        raise ConfigError("give --preset or --config, not both")
    if preset:
        base = sweep.preset(preset).base
    elif args.config:
        base = load_config(args.config, kappa_convention=args.kappa_convention)
    else:
        raise ConfigError("a parameter source is required (--config" + (" or --preset)" if hasattr(args, "preset") else ")"))
    return _apply_overrides(base, args)


# -- manifest -----------------------------------------------------------------

def _derived_dict(d) -> dict:
    keys = ("wm", "gamma_m", "kappa", "w0", "wc", "G0", "E", "nbar", "alpha_s", "delta", "bare_delta",
            "q_s", "G", "branch_count")
    return {k: _json_num(getattr(d, k)) for k in keys}


def _json_num(v):
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


def write_manifest(out: Path, argv, params: PhysicalParams | None, derived=None, **extra) -> Path:
    path = Path(str(out) + ".manifest.json")
    doc = {
        "software": {"name": "optoent", "version": __version__, "kernel_backend": DEFAULT_BACKEND},
        "command_line": ["optoent", *argv],
        "timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "output": str(out),
    }
    if params is not None:
        doc["parameters_si"] = dataclasses.asdict(params)
        doc["config"] = format_config(params)
    if derived is not None:
        doc["derived"] = _derived_dict(derived)
    doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _emit(text: str, out: Path | None, argv, params, derived=None, **extra) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.write_text(text)
    write_manifest(out, argv, params, derived, **extra)
    print(f"wrote {out}", file=sys.stderr)


# -- commands -----------------------------------------------------------------

def cmd_model(args, argv) -> int:
    p = _params(args)
    d = resolve_model(p)
    pairs = [
        ("kappa_rad_s", d.kappa), ("w0_rad_s", d.w0), ("wc_rad_s", d.wc), ("G0_rad_s", d.G0),
        ("E_rad_s", d.E), ("nbar", d.nbar), ("alpha_s", d.alpha_s), ("delta_rad_s", d.delta),
        ("delta_over_wm", d.delta / d.wm), ("bare_delta_rad_s", d.bare_delta), ("q_s", d.q_s),
        ("G_rad_s", d.G), ("G_over_2pi_hz", d.G / TWO_PI), ("quality_factor", p.quality_factor),
        ("branches", d.branch_count), ("multistable", d.branch_count > 1),
    ]
    _emit(_kv_lines(pairs), args.out, argv, p, d)
    return 0


def cmd_stability(args, argv) -> int:
    p = _params(args)
    d = resolve_model(p)
    st = analyze(d)
    _emit(_kv_lines(st.as_dict().items()), args.out, argv, p, d)
    return 0


def cmd_entangle(args, argv) -> int:
    p = _params(args)
    d = resolve_model(p)
    st = analyze(d)
    if not st.stable:
        msgs = stability_rh(d).failing() or [f"max Re(eig) = {st.eig_max_real:.6g}"]
        raise UnstableSystem(f"unstable at Δ/w_m = {d.delta / d.wm:.6g}: " + "; ".join(msgs))
    v = solve_lyapunov(d.drift, d.diffusion, margin=d.stability_margin)
    rep = entanglement_report(v)
    ok, nu = check_physicality(v)
    pairs = [("delta_over_wm", d.delta / d.wm), ("G_rad_s", d.G), ("nbar", d.nbar)]
    pairs += list(rep.as_dict().items())
    pairs += [("min_symplectic", nu), ("physical", ok), ("branches", d.branch_count)]
    _emit(_kv_lines(pairs), args.out, argv, p, d)
    if args.dump_cm:
        args.dump_cm.write_text(",".join(_fmt(x) for x in v.row_major()) + "\n")
        write_manifest(args.dump_cm, argv, p, d)
    return 0


def _sweep_spec(args) -> sweep.SweepSpec:
    if args.preset:
        if args.config or args.axis:
            raise ConfigError("--preset cannot be combined with --config/--axis")
        spec = sweep.preset(args.preset)
        base = _apply_overrides(spec.base, args)
        return sweep.SweepSpec(base, spec.axis, spec.grid, dump_cm=bool(getattr(args, "dump_cm", None)))
    if not (args.config and args.axis):
        raise ConfigError("give --preset, or --config with --axis")
    base = _apply_overrides(load_config(args.config, kappa_convention=args.kappa_convention), args)
    if args.start is None or args.stop is None:
        raise ConfigError("--from and --to are required with --axis")
    n = getattr(args, "points", None) or 2
    if args.log:
        if not (args.start > 0 and args.stop > 0):
            raise ConfigError("--log needs positive endpoints")
        grid = np.geomspace(args.start, args.stop, n)
    else:
        grid = np.linspace(args.start, args.stop, n)
    return sweep.SweepSpec(base, args.axis, tuple(grid), dump_cm=bool(getattr(args, "dump_cm", None)))


def cmd_sweep(args, argv) -> int:
    spec = _sweep_spec(args)
    rows = sweep.run_sweep(spec, jobs=args.jobs)
    _emit(sweep.format_csv(rows), args.out, argv, spec.base, axis=spec.axis, grid=list(spec.grid))
    if args.dump_cm:
        args.dump_cm.write_text(sweep.format_cm_csv(rows))
        write_manifest(args.dump_cm, argv, spec.base, axis=spec.axis, grid=list(spec.grid))
    n_unstable = sum(not r.stable for r in rows)
    multi = sum(r.branches > 1 for r in rows)
    print(f"{len(rows)} rows, {n_unstable} unstable, {multi} multistable", file=sys.stderr)
    return 0


def cmd_threshold(args, argv) -> int:
    args.points = None
    spec = _sweep_spec(args)
    lo = args.start if args.start is not None else spec.grid[0]
    hi = args.stop if args.stop is not None else spec.grid[-1]
    value = sweep.find_threshold(spec, (lo, hi))
    _emit(_kv_lines([("axis", spec.axis), ("threshold", value), ("bracket_lo", lo), ("bracket_hi", hi)]),
          args.out, argv, spec.base)
    return 0


READOUT_COLUMNS = [(i, j) for i in range(4) for j in range(i, 4)]


def cmd_readout(args, argv) -> int:
    if args.traj < 2:
        raise ConfigError("--traj must be >= 2")
    p = _params(args)
    d = resolve_model(p)
    st = analyze(d)
    if not st.stable:
        raise UnstableSystem("; ".join(stability_rh(d).failing()) or "unstable")
    r = readout.make_readout(
        d, p,
        kappa2=None if args.kappa2_2pi_hz is None else TWO_PI * args.kappa2_2pi_hz,
        alpha2=args.alpha2,
        length2=args.readout_length_m,
    )
    if not args.allow_regime_violation:
        readout.adiabatic_output_gain(r)
    ext = readout.build_extended(d, r, back_action=args.back_action)
    auto = readout.default_trajectory_config(ext, n_traj=args.traj, seed=args.seed)
    cfg = readout.TrajectoryConfig(
        dt=args.dt if args.dt is not None else auto.dt,
        burn_in=args.burn_in if args.burn_in is not None else auto.burn_in,
        sample_time=args.sample_time if args.sample_time is not None else auto.sample_time,
        n_traj=args.traj,
        seed=args.seed,
        richardson=not args.no_richardson,
    )
    est = readout.simulate_trajectories(ext, cfg, jobs=args.jobs, backend=args.backend)
    rec = readout.reconstruct_entanglement(est, seed=args.seed, method=args.resampling)
    v, se = est.V.matrix, est.stderr
    header = [f"V{i}{j}" for i, j in READOUT_COLUMNS] + [f"se_V{i}{j}" for i, j in READOUT_COLUMNS]
    header += ["log_neg", "log_neg_sigma"]
    values = [v[i, j] for i, j in READOUT_COLUMNS] + [se[i, j] for i, j in READOUT_COLUMNS]
    values += [rec.report.log_neg, rec.log_neg_sigma]
    text = ",".join(header) + "\n" + ",".join(_fmt(x) for x in values) + "\n"
    extra = {
        "trajectory": dataclasses.asdict(cfg),
        "seeds": [str(s) for s in est.seeds],
        "kernel_backend": est.backend,
        "readout": {k: _json_num(v) for k, v in dataclasses.asdict(r).items()},
        "back_action": args.back_action,
        "resampling": args.resampling,
    }
    _emit(text, args.out, argv, p, d, **extra)
    print(f"E_N = {rec.report.log_neg:.6g} +/- {rec.log_neg_sigma:.2g} ({est.backend} kernel)", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optoent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"optoent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="print derived model quantities")
    _add_param_args(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("stability", help="Routh-Hurwitz and eigenvalue stability report")
    _add_param_args(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("entangle", help="E_N at a single parameter point")
    _add_param_args(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--dump-cm", type=Path, help="write the 4x4 CM as one 16-column CSV row")
    p.set_defaults(func=cmd_entangle)

    for name, func, hlp in (("sweep", cmd_sweep, "1-D parameter sweep to CSV"),
                            ("threshold", cmd_threshold, "bisect the entanglement boundary")):
        p = sub.add_parser(name, help=hlp)
        _add_param_args(p, presets=True)
        p.add_argument("--axis", choices=sweep.AXES)
        p.add_argument("--from", dest="start", type=float)
        p.add_argument("--to", dest="stop", type=float)
        if name == "sweep":
            p.add_argument("--points", type=int, default=100)
            p.add_argument("--dump-cm", type=Path, help="write per-row CMs (16 columns) here")
        p.add_argument("--log", action="store_true", help="log-spaced grid")
        p.add_argument("--out", type=Path)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.set_defaults(func=func)

    p = sub.add_parser("readout", help="simulated two-cavity readout experiment")
    _add_param_args(p, presets=True)
    p.add_argument("--back-action", action="store_true")
    p.add_argument("--traj", type=int, default=32)
    p.add_argument("--dt", type=float)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--sample-time", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa2-2pi-hz", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--readout-length-m", type=float)
    p.add_argument("--no-richardson", action="store_true",
                   help="plain Euler-Maruyama instead of the dt/2dt extrapolated estimate")
    p.add_argument("--resampling", choices=readout.RESAMPLING_METHODS, default="auto",
                   help="E_N uncertainty: bootstrap over trajectories or independent entries")
    p.add_argument("--allow-regime-violation", action="store_true")
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_readout)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "readout" and args.traj < 2:
        parser.error("--traj must be >= 2")
    try:
        return args.func(args, argv)
    except OptoEntError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
