"""Command-line entry point.

    sidebandcool <command> [--config PATH] [--set key=value]... [--out DIR]

Commands write one file each into the output directory (``steady.json``,
``spectrum.csv``, ``fit.json``, ``calibration.json``, ``sweep.csv``,
``dynamics.csv``, ``budget.csv``). JSON outputs carry the config digest.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import physics as ph
from .config import ConfigError, RunConfig, parse_config
from .design import heating_budget, heating_rate_vs_pump, sweep_occupancy_vs_pump
from .dynamics import evolve_occupancy, pump_off_rethermalization
from .errors import FitNotConverged, InconsistentOccupancy, InsufficientData
from .inference import CalibrationFit, calibrate_conversion, fit_lorentzian, occupancy_from_fit
from .spectra import (PsdTrace, SpectrumModel, add_measurement_noise, sideband_grid,
                      signed_area_from_occupancy, synthesize_psd)

COMMANDS = ("steady", "spectrum", "fit", "calibrate", "sweep", "dynamics", "budget")
EXIT_INFERENCE = 6
EXIT_INPUT = 7


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(payload: dict, cfg: RunConfig, command: str) -> str:
    body = {"command": command, "config_digest": cfg.digest, **payload}
    return json.dumps(_clean(body), indent=2, sort_keys=True) + "\n"


# forward model ---------------------------------------------------------------

def forward_state(cfg: RunConfig) -> dict:
    """Steady-state quantities for the configured pump."""
    sysm = cfg.system
    n_p = cfg.pump.n_p
    g_opt = cfg.gamma_opt
    g_th = sysm.gamma_m_t
    n_dot = float(heating_rate_vs_pump(cfg.heating, n_p))
    n_m = float(ph.steady_state_occupancy(g_th, n_dot / g_th, g_opt, cfg.n_sr))
    return {
        "n_p": n_p,
        "x_zp_m": sysm.x_zp,
        "g_hz_per_m": ph.angular_to_hz(cfg.coupling.g),
        "n_m_thermal": sysm.n_m_thermal,
        "n_sr_thermal": cfg.cavity.n_sr_thermal,
        "n_sr": cfg.n_sr,
        "gamma_m_t": g_th,
        "gamma_opt": g_opt,
        "gamma_m_total": g_th + g_opt,
        "n_dot_t": n_dot,
        "n_m": n_m,
        "n_eff": n_m - 2.0 * cfg.n_sr,
        "cooling_power_w": ph.cooling_power(cfg.mechanical.omega_m, g_opt),
        "frequency_pull_hz": ph.angular_to_hz(ph.frequency_pull(cfg.coupling.lam, n_p, cfg.mechanical)),
        "force_noise_heating_rate": ph.force_noise_heating_rate(cfg.force_noise_psd, cfg.mechanical),
        "rethermalization_time_s": ph.rethermalization_time(n_dot) if n_dot > 0 else None,
        "sideband_asymmetry": ph.sideband_asymmetry(n_m) if n_m > 0 else None,
        "resolved_sideband": cfg.cavity.gamma_sr < cfg.mechanical.omega_m,
        "damping_law_valid": ph.damping_law_valid(cfg.temperature),
    }


def _cal_value(cfg: RunConfig) -> CalibrationFit:
    inf = cfg.section("inference")
    cal = inf["cal"] if inf["cal"] is not None else cfg.section("spectrum")["cal"]
    return CalibrationFit(cal, inf["cal_err"], (math.nan, math.nan), 0)


# commands ----------------------------------------------------------------------

def cmd_steady(cfg, args, out):
    st = forward_state(cfg)
    occ = {"n_eff": st["n_eff"], "n_eff_err": 0.0, "n_sr": st["n_sr"], "n_m": st["n_m"],
           "n_m_err": 0.0, "p0": ph.ground_state_probability(max(st["n_m"], 0.0)), "consistent": st["n_m"] >= 0}
    (out / "steady.json").write_text(_dump({"occupancy": occ, "derived": st}, cfg, "steady"))
    return 0


def spectrum_model(cfg: RunConfig) -> tuple[SpectrumModel, np.ndarray, float]:
    sp = cfg.section("spectrum")
    st = forward_state(cfg)
    n_eff = st["n_eff"] if sp["n_eff"] is None else sp["n_eff"]
    width = st["gamma_m_total"]
    center = cfg.cavity.omega_sr if sp["center_hz"] is None else ph.hz_to_angular(sp["center_hz"])
    area = signed_area_from_occupancy(n_eff, st["gamma_opt"], sp["cal"])
    model = SpectrumModel(sp["floor"], area, float(center), width)
    grid = sideband_grid(model.center, width, int(sp["n_bins"]), sp["span_linewidths"])
    return model, grid, n_eff


def cmd_spectrum(cfg, args, out):
    sp = cfg.section("spectrum")
    model, grid, n_eff = spectrum_model(cfg)
    trace = synthesize_psd(model, grid)
    if sp["n_avg"] > 1:
        trace = add_measurement_noise(trace, int(sp["n_avg"]), int(sp["seed"]))
    (out / "spectrum.csv").write_text(trace.to_csv())
    truth = {"model": model.to_dict(), "n_eff": n_eff, "gamma_opt": cfg.gamma_opt,
             "n_avg": int(sp["n_avg"]), "seed": int(sp["seed"])}
    (out / "spectrum_truth.json").write_text(_dump(truth, cfg, "spectrum"))
    return 0


def _input_path(cfg, args, section):
    path = args.input or cfg.section(section)["input"]
    if path is None:
        raise FileNotFoundError(f"no input file: pass --input or set `{section}.input`")
    return Path(path)


def cmd_fit(cfg, args, out):
    trace = PsdTrace.from_csv(_input_path(cfg, args, "inference").read_text())
    try:
        fit = fit_lorentzian(trace)
    except FitNotConverged as exc:
        diag = {"error": str(exc), "last_iterate": exc.result.to_dict() if exc.result else None}
        (out / "fit.json").write_text(_dump(diag, cfg, "fit"))
        return EXIT_INFERENCE
    payload = {"fit": fit.to_dict()}
    try:
        occ = occupancy_from_fit(fit, _cal_value(cfg), cfg.gamma_opt, cfg.n_sr,
                                 cfg.section("inference")["n_sr_err"])
        payload["occupancy"] = occ.to_dict()
        code = 0
    except InconsistentOccupancy as exc:
        payload["error"] = str(exc)
        code = EXIT_INFERENCE
    (out / "fit.json").write_text(_dump(payload, cfg, "fit"))
    return code


def _read_calibration_csv(text: str):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "temperature_k,power":
        raise ValueError("expected CSV header temperature_k,power")
    return [tuple(float(x) for x in ln.split(",")) for ln in lines[1:]]


def cmd_calibrate(cfg, args, out):
    points = _read_calibration_csv(_input_path(cfg, args, "calibration").read_text())
    cal_sec = cfg.section("calibration")
    g_opt = float(cfg.system.gamma_opt(cal_sec["n_p"]))
    try:
        cal = calibrate_conversion(points, cfg.mechanical, g_opt, cal_sec["t_min_k"])
    except InsufficientData as exc:
        (out / "calibration.json").write_text(_dump({"error": str(exc)}, cfg, "calibrate"))
        return EXIT_INFERENCE
    payload = {"calibration": cal.to_dict(), "gamma_opt": g_opt}
    (out / "calibration.json").write_text(_dump(payload, cfg, "calibrate"))
    return 0


def _pump_grid(cfg):
    sw = cfg.section("sweep")
    return np.geomspace(sw["n_p_min"], sw["n_p_max"], int(sw["points"]))


def _n_sr_table(cfg):
    table = cfg.section("sweep")["n_sr_table"]
    return cfg.n_sr if table is None else [tuple(r) for r in table]


def cmd_sweep(cfg, args, out):
    res = sweep_occupancy_vs_pump(cfg.system, cfg.heating, _n_sr_table(cfg), _pump_grid(cfg))
    (out / "sweep.csv").write_text(res.to_csv())
    return 0


def dynamics_timeline(cfg: RunConfig):
    dy = cfg.section("dynamics")
    st = forward_state(cfg)

    def pick(key, fallback):
        return fallback if dy[key] is None else dy[key]

    g_th = pick("gamma_m_t", st["gamma_m_t"])
    n_th = pick("n_m_thermal", st["n_dot_t"] / st["gamma_m_t"])
    g_opt = pick("gamma_opt", st["gamma_opt"])
    n_sr = pick("n_sr", st["n_sr"])
    t_cool = dy["t_max_s"] if dy["t_off_s"] is None else dy["t_off_s"]
    pts = int(dy["points"])
    tl = evolve_occupancy(dy["n0"], g_th, n_th, g_opt, n_sr, np.linspace(0.0, t_cool, pts))
    if dy["t_off_s"] is not None:
        tail = pump_off_rethermalization(tl.occupancy[-1], g_th, n_th,
                                         np.linspace(0.0, dy["t_after_off_s"], pts))
        tl = tl.then(tail)
    return tl


def cmd_dynamics(cfg, args, out):
    (out / "dynamics.csv").write_text(dynamics_timeline(cfg).to_csv())
    return 0


def cmd_budget(cfg, args, out):
    env = cfg.section("environment")
    table = heating_budget(cfg.heating, _pump_grid(cfg), env["phase_noise_dbc_hz"],
                           cfg.cavity.gamma_sr, cfg.phase_noise_constant)
    (out / "budget.csv").write_text(table.to_csv())
    return 0


_DISPATCH = {"steady": cmd_steady, "spectrum": cmd_spectrum, "fit": cmd_fit, "calibrate": cmd_calibrate,
             "sweep": cmd_sweep, "dynamics": cmd_dynamics, "budget": cmd_budget}


def run_command(name: str, cfg: RunConfig, args=None, out_dir: str | Path | None = None) -> int:
    """Run one command against a parsed config; returns the exit code."""
    if name not in _DISPATCH:
        raise ValueError(f"unknown command {name!r}")
    args = args or argparse.Namespace(input=None)
    out = Path(out_dir if out_dir is not None else cfg.section("paths")["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return _DISPATCH[name](cfg, args, out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sidebandcool", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file (default: shipped device config)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config leaf by dotted path; repeatable")
    p.add_argument("--out", help="output directory (overrides paths.out_dir)")
    p.add_argument("--input", help="input CSV for fit/calibrate")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    try:
        return run_command(args.command, cfg, args, args.out)
    except (OSError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
