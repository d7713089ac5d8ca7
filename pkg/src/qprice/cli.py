"""Batch command-line front end.

Every command reads a JSON config, validates all of it before computing,
writes plot-ready CSV/JSON artifacts into ``--out`` and finishes with a
``manifest.json`` listing each artifact and its SHA-256 digest.

Exit codes: 0 success, 2 config or parse error, 3 numeric failure,
4 calibration failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (CalibrationConfig, SpreadCurve, calibrate_model, curve_from_csv,
                          curve_to_csv, default_fit_horizons, empirical_spread_curve,
                          fit_spread_curve, load_bars)
from .continuum import DriftDiffusionField, GridSpec, WavePacket
from .ensemble_stats import (ModelSetup, ensemble_risk, ensemble_widths, return_probability_track,
                             risk_ratios, run_ensemble, saturation_scan, speckle_contrast)
from .errors import (BarParseError, BoundaryLeakageError, CalibrationError, DomainError)
from .evolution import EvolutionConfig, RealizationPath
from .operator_core import LatticeParams

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CALIBRATION = 0, 2, 3, 4
DEFAULT_LEVELS = (0.0, -0.1, -0.2)  # those off the grid are dropped

SECTIONS = {
    "run": {"model"},
    "grid": {f.name for f in dataclasses.fields(GridSpec)},
    "packet": {f.name for f in dataclasses.fields(WavePacket)},
    "evolution": {f.name for f in dataclasses.fields(EvolutionConfig)},
    "field": {f.name for f in dataclasses.fields(DriftDiffusionField)},
    "lattice": {f.name for f in dataclasses.fields(LatticeParams)},
    "ensemble": {"size"},
    "risk": {"levels", "half_width"},
    "saturation": {"tau_values"},
    "calibration": {f.name for f in dataclasses.fields(CalibrationConfig)},
    "fit": {"horizons"},
}


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated parameter sets of one CLI invocation."""

    raw: dict
    setup: ModelSetup | None
    ensemble_size: int
    levels: tuple
    half_width: float | None
    tau_values: tuple | None
    calibration: CalibrationConfig
    fit_horizons: tuple | None


def _section(raw, name):
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a JSON object")
    unknown = set(value) - SECTIONS[name]
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(sorted(unknown))}")
    return value


def parse_config(raw: dict, command: str) -> RunConfig:
    """Validate a config mapping; every failure raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    try:
        sec = {name: _section(raw, name) for name in SECTIONS}
        setup = None
        if command in ("simulate", "ensemble", "saturation"):
            model = sec["run"].get("model", "continuum")
            if model not in ("continuum", "lattice"):
                raise ConfigError(f"run.model must be 'continuum' or 'lattice', got {model!r}")
            if "grid" not in raw or "packet" not in raw or "evolution" not in raw:
                raise ConfigError("grid, packet and evolution sections are required")
            grid = GridSpec(**sec["grid"])
            packet = WavePacket(**sec["packet"])
            evolution = EvolutionConfig(**sec["evolution"])
            if model == "lattice":
                field = LatticeParams(**sec["lattice"])
            else:
                field = DriftDiffusionField(**sec["field"])
            setup = ModelSetup(grid, packet, field, evolution)
        size = sec["ensemble"].get("size", 100 if command == "ensemble" else 1)
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            raise ConfigError("ensemble.size must be an integer >= 1")
        explicit_levels = "levels" in sec["risk"]
        levels = tuple(float(v) for v in sec["risk"].get("levels", DEFAULT_LEVELS))
        half_width = sec["risk"].get("half_width")
        if half_width is not None and not half_width > 0:
            raise ConfigError("risk.half_width must be positive")
        if setup is not None:
            x = setup.grid.points - setup.packet.center
            inside = tuple(v for v in levels if x[0] <= v <= x[-1])
            if explicit_levels and inside != levels:
                raise ConfigError("risk.levels must lie within the grid")
            levels = inside
        tau_values = sec["saturation"].get("tau_values")
        if command == "saturation":
            if tau_values is None or len(tau_values) < 3:
                raise ConfigError("saturation.tau_values needs at least 3 entries")
            tau = np.asarray(tau_values, dtype=float)
            if np.any(tau <= 0) or np.log10(tau.max() / tau.min()) < 2 - 1e-12:
                raise ConfigError("saturation.tau_values must be positive and span two decades")
            tau_values = tuple(float(t) for t in tau_values)
        cal = dict(sec["calibration"])
        for key in ("tau_values", "fit_horizons"):
            if cal.get(key) is not None:
                cal[key] = tuple(cal[key])
        calibration = CalibrationConfig(**cal)
        horizons = sec["fit"].get("horizons")
        if horizons is not None:
            horizons = tuple(int(h) for h in horizons)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return RunConfig(raw, setup, size, levels, half_width, tau_values, calibration, horizons)


def _fmt(v) -> str:
    return repr(float(v))


def _surface_csv(prob) -> str:
    out = io.StringIO()
    out.write("x_index,time_index,probability\n")
    for t, row in enumerate(prob):
        for i, p in enumerate(row):
            out.write(f"{i},{t},{_fmt(p)}\n")
    return out.getvalue()


def _risk_csv(times, width, risk) -> str:
    ratio_var, ratio_es = risk_ratios(risk)
    out = io.StringIO()
    out.write("time_index,time,width,volatility,var95,es95,ratio_var,ratio_es\n")
    for k, t in enumerate(times):
        cols = (t, width[k], risk.volatility[k], risk.var95[k], risk.es95[k],
                ratio_var[k], ratio_es[k])
        out.write(f"{k}," + ",".join(_fmt(c) for c in cols) + "\n")
    return out.getvalue()


def _ratio_csv(times, risk) -> str:
    ratio_var, ratio_es = risk_ratios(risk)
    out = io.StringIO()
    out.write("time_index,time,ratio_var,ratio_es\n")
    for k, t in enumerate(times):
        out.write(f"{k},{_fmt(t)},{_fmt(ratio_var[k])},{_fmt(ratio_es[k])}\n")
    return out.getvalue()


def _returns_csv(times, levels, tracks) -> str:
    out = io.StringIO()
    out.write("time_index,time,level,probability\n")
    for k, t in enumerate(times):
        for level, track in zip(levels, tracks):
            out.write(f"{k},{_fmt(t)},{_fmt(level)},{_fmt(track[k])}\n")
    return out.getvalue()


class _Artifacts:
    """Collects outputs in memory; files are written once the run succeeds."""

    def __init__(self):
        self.files: dict[str, bytes] = {}
        self.results: dict = {}

    def add(self, name: str, text: str):
        self.files[name] = text.encode("utf-8")


def _simulate(cfg: RunConfig, seed, threads, art: _Artifacts, size=1):
    setup = cfg.setup
    res = run_ensemble(setup, size, seed, threads, keep_paths=(size == 1))
    risk = ensemble_risk(res)
    width = ensemble_widths(res)
    art.add("surface.csv", _surface_csv(res.mean_probability))
    art.add("risk.csv", _risk_csv(res.times, width, risk))
    if size == 1:
        path: RealizationPath = res.paths[0]
        tracks = return_probability_track(path, cfg.levels, cfg.half_width,
                                          setup.packet.center)
        art.add("returns.csv", _returns_csv(res.times, cfg.levels, tracks))
    else:
        art.add("ratios.csv", _ratio_csv(res.times, risk))
        art.results["speckle_contrast"] = {
            "ensemble_final": speckle_contrast(res.mean_probability[-1]),
            "member_final_min": float(min(res.final_contrast)),
            "member_final_mean": float(np.mean(res.final_contrast)),
        }
    art.results["n_realizations"] = res.n_realizations


def cmd_simulate(cfg, seed, threads, art):
    _simulate(cfg, seed, threads, art, size=1)


def cmd_ensemble(cfg, seed, threads, art):
    _simulate(cfg, seed, threads, art, size=cfg.ensemble_size)


def cmd_saturation(cfg, seed, threads, art):
    scan = saturation_scan(cfg.setup, cfg.tau_values, cfg.ensemble_size, seed, threads)
    out = io.StringIO()
    out.write("inverse_tau,tau,final_width\n")
    for t, w in zip(scan.tau, scan.final_width):
        out.write(f"{_fmt(1 / t)},{_fmt(t)},{_fmt(w)}\n")
    art.add("saturation.csv", out.getvalue())
    art.results.update(plateau=scan.plateau, onset_index=scan.onset_index,
                       onset_tau=scan.onset_tau, onset_inverse_tau=1 / scan.onset_tau)


def _fit_outputs(curve, art):
    fit = fit_spread_curve(curve)
    art.add("curve.csv", curve_to_csv(curve))
    art.add("fit.json", json.dumps(fit.to_json(), indent=2, sort_keys=True) + "\n")
    art.results["fit_degenerate"] = fit.degenerate
    return fit


def cmd_calibrate(cfg, seed, threads, art, bars_path):
    bars = load_bars(bars_path)
    model = calibrate_model(bars, cfg.calibration, seed, threads)
    art.add("model.json", json.dumps(model.to_json(), indent=2, sort_keys=True) + "\n")
    d = model.details["curve"]
    curve = SpreadCurve(np.asarray(d["horizons"]), np.asarray(d["widths"]),
                        np.asarray(d["counts"]))
    _fit_outputs(curve, art)


def cmd_fit_spread(cfg, seed, threads, art, bars_path=None, curve_path=None):
    if (bars_path is None) == (curve_path is None):
        raise ConfigError("fit-spread needs exactly one of --bars or --curve")
    if curve_path is not None:
        curve = curve_from_csv(Path(curve_path).read_bytes())
    else:
        bars = load_bars(bars_path)
        horizons = cfg.fit_horizons or tuple(default_fit_horizons(len(bars)))
        curve = empirical_spread_curve(bars, horizons)
    _fit_outputs(curve, art)


def _file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qprice", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, default=0, help="root seed (u64)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="single realization")
    sub.add_parser("ensemble", parents=[common], help="ensemble average and risk")
    sub.add_parser("saturation", parents=[common], help="final width against 1/tau")
    p = sub.add_parser("calibrate", parents=[common], help="calibrate to OHLC bars")
    p.add_argument("--bars", type=Path, required=True, help="bar CSV")
    p = sub.add_parser("fit-spread", parents=[common], help="fit the spread-curve law")
    p.add_argument("--bars", type=Path, help="bar CSV")
    p.add_argument("--curve", type=Path, help="curve CSV (horizon_steps,width,count)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    started = datetime.now(timezone.utc).isoformat()
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(raw, args.command)
        art = _Artifacts()
        if args.command == "simulate":
            cmd_simulate(cfg, args.seed, args.threads, art)
        elif args.command == "ensemble":
            cmd_ensemble(cfg, args.seed, args.threads, art)
        elif args.command == "saturation":
            cmd_saturation(cfg, args.seed, args.threads, art)
        elif args.command == "calibrate":
            cmd_calibrate(cfg, args.seed, args.threads, art, args.bars)
        else:
            cmd_fit_spread(cfg, args.seed, args.threads, art, args.bars, args.curve)
    except (ConfigError, BarParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        print(json.dumps({"best_candidate": exc.best}, indent=2, default=float), file=sys.stderr)
        return EXIT_CALIBRATION
    except (BoundaryLeakageError, DomainError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    listing = []
    for name, data in art.files.items():
        (out / name).write_bytes(data)
        listing.append({"file": name, "sha256": _file_digest(data), "bytes": len(data)})
    manifest = {
        "command": args.command,
        "config": raw,
        "seed": args.seed,
        "threads": args.threads,
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": listing,
        "results": art.results,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float) + "\n",
                                       encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
