"""Command-line front end: solver runs, analyses, and the experiment battery.

Every subcommand reads a TOML config, echoes it verbatim into the output
manifest, and writes data files plus a self-contained plot script.  Nothing
here renders images or prints timing into summaries, so repeated runs with
the same config produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # installed backport on Python < 3.11
    import tomli as tomllib

from . import corpus
from .cutoff import RegParams
from .decompose import DecompositionError, decompose
from .diagnostics import PROBES
from .experiments import (
    EXPERIMENTS,
    PLOT_SCRIPT,
    ExperimentSpec,
    calibrate,
    exp_stability,
    load_battery_config,
    load_calibration,
    run_battery,
    write_artifacts,
    _environment,
)
from .grid import GridSpec, InterfaceField
from .norms import norm_report
from .snapshots import export_csv, load_field, save_field
from .stepper import SolverAbort, SolverConfig, continuation, run

__all__ = ["main"]


class ConfigError(Exception):
    """Bad or missing configuration; message names the section and field."""


def _load_toml(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # TOMLDecodeError messages carry line/column positions already.
        raise ConfigError(f"config parse error in {path!r}: {exc}") from exc


def _section(conf: dict, name: str) -> dict:
    sec = conf.get(name)
    if sec is None:
        raise ConfigError(f"config is missing the [{name}] section")
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _field_of(sec: dict, section: str, key: str, default=None, required=False):
    if key in sec:
        return sec[key]
    if required:
        raise ConfigError(f"[{section}] is missing required field {key!r}")
    return default


def _build_grid(conf: dict) -> GridSpec:
    sec = _section(conf, "grid")
    d = _field_of(sec, "grid", "d", default=1)
    n = _field_of(sec, "grid", "N", required=True)
    length = _field_of(sec, "grid", "L", default=2.0 * math.pi)
    try:
        return GridSpec(d=int(d), N=int(n), L=float(length))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[grid] invalid: {exc}") from exc


def _build_data(grid: GridSpec, conf: dict) -> InterfaceField:
    sec = _section(conf, "data")
    kind = _field_of(sec, "data", "kind", required=True)
    seed = int(_field_of(sec, "data", "seed", default=0))
    amp = float(_field_of(sec, "data", "amplitude", default=1.0))
    if kind == "random_smooth":
        kmax = int(_field_of(sec, "data", "kmax", default=12))
        return corpus.random_smooth(grid, seed, amp, kmax)
    if kind == "random_c1":
        return corpus.random_c1(grid, seed, amp)
    if kind == "kink":
        width = float(_field_of(sec, "data", "width_cells", default=2.0))
        return corpus.kink(grid, amp, width)
    if kind == "bump":
        center = float(_field_of(sec, "data", "center", default=0.5))
        width = float(_field_of(sec, "data", "width", default=0.1))
        f = corpus.bump(grid, center, width)
        return f.with_values(amp * f.values)
    if kind == "monotone":
        return corpus.monotone_profiles(grid, seed, 1)[0]
    if kind == "small_slope":
        slope = float(_field_of(sec, "data", "slope", default=0.1))
        return corpus.small_slope_profiles(grid, seed, 1, slope)[0]
    if kind == "cosine":
        modes = _field_of(sec, "data", "modes", default=[[1, 1.0]] if grid.d == 1
                          else [[1, 0, 1.0]])
        values = np.zeros(grid.shape)
        xs = grid.meshgrid()
        for entry in modes:
            if len(entry) != grid.d + 1:
                raise ConfigError(
                    f"[data] cosine mode {entry!r} needs {grid.d} wavenumbers"
                    " plus an amplitude"
                )
            *ks, a = entry
            phase = sum(
                2.0 * math.pi * round(k) / grid.L * x for k, x in zip(ks, xs)
            )
            values = values + float(a) * np.cos(phase)
        return InterfaceField(grid, values)
    if kind == "zero":
        return InterfaceField(grid, np.zeros(grid.shape))
    if kind == "snapshot":
        path = _field_of(sec, "data", "path", required=True)
        f = load_field(path)
        if f.grid != grid:
            raise ConfigError(
                f"[data] snapshot grid {f.grid} does not match [grid] {grid}"
            )
        return f
    raise ConfigError(f"[data] unknown kind {kind!r}")


def _build_solver(conf: dict) -> SolverConfig:
    sec = _section(conf, "solver")
    rhs_kind = _field_of(sec, "solver", "rhs_kind", default="regularized")
    params = None
    if rhs_kind in ("regularized", "exact"):
        mu1 = _field_of(sec, "solver", "mu1", required=(rhs_kind == "regularized"))
        mu2 = _field_of(sec, "solver", "mu2",
                        required=(rhs_kind == "regularized"))
        params = RegParams(
            mu1=float(mu1 or 0.0), mu2=float(mu2 or 0.0)
        )
    kwargs = dict(
        dt=float(_field_of(sec, "solver", "dt", required=True)),
        T=float(_field_of(sec, "solver", "T", required=True)),
        scheme=_field_of(sec, "solver", "scheme", default="imex1"),
        rhs_kind=rhs_kind,
        params=params,
        cfl_safety=float(_field_of(sec, "solver", "cfl_safety", default=0.5)),
        probe_count=int(_field_of(sec, "solver", "probe_count", default=25)),
    )
    try:
        return SolverConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[solver] invalid: {exc}") from exc


def _write_manifest(out: Path, manifest: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


# -- subcommands -------------------------------------------------------------


def _cmd_run(args) -> int:
    conf = _load_toml(args.config)
    grid = _build_grid(conf)
    f0 = _build_data(grid, conf)
    cfg = _build_solver(conf)
    run_sec = conf.get("run", {})
    probes = tuple(run_sec.get("probes", ("max", "min", "linf", "l2", "grad_sup")))
    unknown = [p for p in probes if p not in PROBES]
    if unknown:
        raise ConfigError(f"[run] unknown probes {unknown}; known: {sorted(PROBES)}")
    keep = bool(run_sec.get("keep_snapshots", False))
    out = Path(args.out)
    try:
        rec = run(f0, cfg, probes=probes, keep_snapshots=keep)
    except SolverAbort as exc:
        out.mkdir(parents=True, exist_ok=True)
        exc.series.to_csv(out / "series.csv")
        _write_manifest(out, {
            "config": conf, "environment": _environment(),
            "aborted": str(exc),
        })
        print(f"solver aborted: {exc}", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    rec.series.to_csv(out / "series.csv")
    save_field(out / "final.msk1", rec.final)
    if args.csv_final:
        export_csv(out / "final.csv", rec.final)
    snap_refs = []
    for t, snap in rec.snapshots:
        ref = f"snapshot_{t:.6f}.msk1"
        save_field(out / ref, snap)
        snap_refs.append(ref)
    manifest = rec.manifest(series_ref="series.csv", snapshot_refs=tuple(snap_refs))
    manifest["config"] = conf
    manifest["environment"] = _environment()
    (out / "plot.py").write_text(PLOT_SCRIPT)
    _write_manifest(out, manifest)
    stats = {k: v for k, v in rec.stats.items() if k != "wall_seconds"}
    print(f"run complete: {cfg.to_dict()['scheme']} n_steps={stats['n_steps']}")
    for k in ("max_velocity_inf", "max_grad_velocity_inf"):
        print(f"  {k} = {stats[k]:.6g}")
    print(f"wrote {out}/series.csv, final.msk1, manifest.json")
    return 0


def _cmd_decompose(args) -> int:
    conf = _load_toml(args.config)
    grid = _build_grid(conf)
    f0 = _build_data(grid, conf)
    sec = _section(conf, "decompose")
    sigma = float(_field_of(sec, "decompose", "sigma", required=True))
    s_star = _field_of(sec, "decompose", "s_star")
    out = Path(args.out)
    try:
        dec = decompose(f0, sigma, s_star=None if s_star is None else float(s_star))
    except DecompositionError as exc:
        print(f"decomposition failed: {exc}", file=sys.stderr)
        print(f"  best achievable slope: {exc.best_achievable:.6g}", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    save_field(out / "rough.msk1", dec.rough)
    save_field(out / "smooth.msk1", dec.smooth)
    manifest = dec.manifest_entry()
    manifest["config"] = conf
    manifest["environment"] = _environment()
    _write_manifest(out, manifest)
    print(f"decomposed at K={dec.cutoff_K}: slope {dec.sigma_achieved:.6g} "
          f"<= sigma {sigma:g}, smooth norm {dec.smooth_norm:.6g}")
    return 0


def _cmd_norms(args) -> int:
    conf = _load_toml(args.config)
    grid = _build_grid(conf)
    f0 = _build_data(grid, conf)
    sec = conf.get("norms", {})
    report = norm_report(
        f0,
        t=0.0,
        sobolev_orders=tuple(sec.get("sobolev_orders", (0.5, 1.0))),
        holder_orders=tuple(sec.get("holder_orders", (0.5,))),
        holder_grad_orders=tuple(sec.get("holder_grad_orders", (0.5,))),
        triebel_orders=tuple(tuple(t) for t in sec.get("triebel", ((0.5, 2.0, 2.0),))),
    )
    print(f"l2        = {report.l2!r}")
    print(f"linf      = {report.linf!r}")
    print(f"lip       = {report.lip!r}")
    for s, v in sorted(report.sobolev.items()):
        print(f"H^{s:<7g} = {v!r}")
    for s, v in sorted(report.holder_f.items()):
        print(f"C^{s:<7g} = {v!r}")
    for s, v in sorted(report.holder_grad.items()):
        print(f"grad C^{s:<2g} = {v!r}")
    for (s, p, q), v in sorted(report.triebel.items()):
        print(f"F^{s}_{{{p},{q}}} = {v!r}")
    if args.out:
        out = Path(args.out)
        payload = {
            "l2": report.l2,
            "linf": report.linf,
            "lip": report.lip,
            "lip_components": list(report.lip_components),
            "sobolev": {repr(k): v for k, v in report.sobolev.items()},
            "holder_f": {repr(k): v for k, v in report.holder_f.items()},
            "holder_grad": {repr(k): v for k, v in report.holder_grad.items()},
            "triebel": {repr(k): v for k, v in report.triebel.items()},
            "config": conf,
            "environment": _environment(),
        }
        _write_manifest(out, payload)
        print(f"wrote {out}/manifest.json")
    return 0


DEFAULT_BATTERY = tuple(
    ExperimentSpec(kind=k, name=k) for k in sorted(EXPERIMENTS)
)


def _cmd_battery(args) -> int:
    if args.config:
        specs, opts = load_battery_config(args.config)
    else:
        specs, opts = list(DEFAULT_BATTERY), {}
    workers = args.workers if args.workers is not None else opts.get("workers")
    result = run_battery(
        specs,
        out_dir=args.out,
        workers=None if workers is None else int(workers),
        calibration_path=args.calibration,
    )
    sys.stdout.write(result.summary)
    return result.exit_code


def _cmd_calibrate(args) -> int:
    cal = calibrate(out_path=args.out)
    print(f"calibration version {cal['version']} -> {args.out}")
    for k, v in sorted(cal["constants"].items()):
        print(f"  {k} = {v!r}")
    return 0


def _cmd_continuation(args) -> int:
    conf = _load_toml(args.config)
    grid = _build_grid(conf)
    f0 = _build_data(grid, conf)
    cfg = _build_solver(conf)
    sec = _section(conf, "continuation")
    raw_schedule = _field_of(sec, "continuation", "schedule", required=True)
    try:
        schedule = [(float(a), float(b)) for a, b in raw_schedule]
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            "[continuation] schedule must be a list of [mu1, mu2] pairs"
        ) from exc
    include_exact = bool(_field_of(sec, "continuation", "include_exact", default=True))
    rep = continuation(f0, cfg, schedule, include_exact=include_exact)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, final in enumerate(rep.finals):
        save_field(out / f"final_stage{i}.msk1", final)
    if rep.exact_final is not None:
        save_field(out / "final_exact.msk1", rep.exact_final)
    manifest = {
        "schedule": [list(p) for p in rep.schedule],
        "diffs": list(rep.diffs),
        "monotone": rep.monotone,
        "exact_diff": rep.exact_diff,
        "config": conf,
        "environment": _environment(),
    }
    _write_manifest(out, manifest)
    print(f"continuation over {len(rep.schedule)} stage(s)")
    for i, dv in enumerate(rep.diffs):
        print(f"  stage {i}->{i + 1} sup difference {dv:.6g}")
    if rep.exact_diff is not None:
        print(f"  cutoff-free reference difference {rep.exact_diff:.6g}")
    print(f"  monotone shrink: {rep.monotone}")
    return 0


def _cmd_stability(args) -> int:
    conf = _load_toml(args.config) if args.config else {}
    sec = conf.get("stability", {})
    options = {
        k: (tuple(v) if isinstance(v, list) else v) for k, v in sec.items()
    }
    result = exp_stability(
        calibration=load_calibration(args.calibration), **options
    )
    if args.out:
        manifest = write_artifacts(result, args.out)
        manifest["config"] = conf
        _write_manifest(Path(args.out), manifest)
    for v in result.verdicts:
        print(v.line())
    return 1 if result.hard_failed else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="muskatlab",
        description="Numerical laboratory for the Muskat equation in graph form.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="time-step one configuration")
    p.add_argument("--config", required=True, help="TOML with [grid]/[data]/[solver]")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--csv-final", action="store_true",
                   help="also export the final snapshot as CSV")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("decompose", help="rough/smooth split of initial data")
    p.add_argument("--config", required=True,
                   help="TOML with [grid]/[data]/[decompose]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("norms", help="norm report for one field")
    p.add_argument("--config", required=True, help="TOML with [grid]/[data][/norms]")
    p.add_argument("--out", default=None, help="optional manifest directory")
    p.set_defaults(func=_cmd_norms)

    p = sub.add_parser("battery", help="run an experiment battery")
    p.add_argument("--config", default=None,
                   help="battery TOML; omit for the default battery")
    p.add_argument("--out", default=None, help="artifact directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--calibration", default=None,
                   help="calibration JSON (default: packaged file)")
    p.set_defaults(func=_cmd_battery)

    p = sub.add_parser("calibrate", help="measure and freeze assertion constants")
    p.add_argument("--out", default="calibration.json")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("continuation", help="vanishing-regularization study")
    p.add_argument("--config", required=True,
                   help="TOML with [grid]/[data]/[solver]/[continuation]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_continuation)

    p = sub.add_parser("stability", help="perturbation amplification study")
    p.add_argument("--config", default=None, help="TOML with [stability] options")
    p.add_argument("--out", default=None)
    p.add_argument("--calibration", default=None)
    p.set_defaults(func=_cmd_stability)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
