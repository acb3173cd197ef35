"""Run configuration: JSON file + dotted overrides -> validated objects.

Frequencies in the file are plain Hz (``omega_m_hz: 6.3e6`` means
omega_m / 2pi); they are converted to angular units once, here.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from . import physics as ph
from .design import CoolingSystem, HeatingModel, phase_noise_constant, pump_photons_from_power

# keys whose null default may be replaced by a string path
_PATH_KEYS = {"inference.input", "calibration.input", "paths.out_dir"}
# keys that hold lists
_LIST_KEYS = {"mechanical.geometry.layer_thicknesses_m", "mechanical.geometry.layer_densities_kg_m3",
              "sweep.n_sr_table"}
# keys with a numeric default that may also be set to null
_NULLABLE = {"coupling.g_hz_per_m", "environment.heating.anchor_n_p", "environment.heating.anchor_n_dot"}
_INT_KEYS = {"spectrum.n_bins", "spectrum.n_avg", "spectrum.seed", "sweep.points", "dynamics.points"}


class ConfigError(Exception):
    exit_code = 5


class ConfigFileMissing(ConfigError):
    exit_code = 3


class ConfigSyntaxError(ConfigError):
    exit_code = 4


class ConfigConstraintError(ConfigError):
    exit_code = 5


def default_config() -> dict:
    text = resources.files("sidebandcool").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base: dict, update: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigConstraintError(f"unknown key `{path}`")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigConstraintError(f"`{path}` must be an object")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    """Apply ``a.b.c=value`` assignments; values are parsed as JSON when possible."""
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigConstraintError(f"override `{item}` is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for i, part in enumerate(parts):
            if not isinstance(node, dict) or part not in node:
                raise ConfigConstraintError(f"unknown key `{key}`")
            if i == len(parts) - 1:
                if isinstance(node[part], dict):
                    raise ConfigConstraintError(f"`{key}` is a section, not a value")
                node[part] = _parse_value(value)
            else:
                node = node[part]
    return out


def _walk(d: dict, prefix: str = ""):
    for k, v in d.items():
        if isinstance(v, dict):
            yield from _walk(v, f"{prefix}{k}.")
        else:
            yield f"{prefix}{k}", v


def _check_types(raw: dict, reference: dict) -> None:
    ref = dict(_walk(reference))
    for path, value in _walk(raw):
        expected = ref[path]
        if path in _LIST_KEYS:
            if value is not None and not isinstance(value, list):
                raise ConfigConstraintError(f"`{path}` must be a list")
            continue
        if path in _PATH_KEYS:
            if value is not None and not isinstance(value, str):
                raise ConfigConstraintError(f"`{path}` must be a path string or null")
            continue
        if value is None:
            if expected is not None and path not in _NULLABLE:
                raise ConfigConstraintError(f"`{path}` may not be null")
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigConstraintError(f"`{path}` must be a number")
        if not math.isfinite(value):
            raise ConfigConstraintError(f"`{path}` must be finite")
        if path in _INT_KEYS and int(value) != value:
            raise ConfigConstraintError(f"`{path}` must be an integer")


def _get(raw: dict, path: str):
    node = raw
    for part in path.split("."):
        node = node[part]
    return node


_POSITIVE = [
    "mechanical.omega_m_hz", "mechanical.q_ref", "mechanical.t_ref_k", "mechanical.effective_mass_factor",
    "mechanical.mass_kg", "mechanical.geometry.length_m", "mechanical.geometry.width_m",
    "cavity.omega_sr_hz", "cavity.gamma_sr_hz",
    "coupling.c_g_f", "coupling.c_t_f", "coupling.gap_m",
    "pump.gamma_opt_scale", "pump.kappa_ext_hz",
    "spectrum.floor", "spectrum.cal", "spectrum.n_bins", "spectrum.span_linewidths", "spectrum.n_avg",
    "spectrum.center_hz",
    "calibration.n_p", "inference.cal",
    "sweep.n_p_min", "sweep.n_p_max", "sweep.points",
    "dynamics.t_max_s", "dynamics.points", "dynamics.t_after_off_s",
    "environment.heating.n_p_knee", "environment.heating.n_dot_0",
    "environment.phase_noise_anchor_photons", "environment.phase_noise_anchor_n_p",
]
_NON_NEGATIVE = [
    "cavity.n_sr_thermal", "cavity.n_sr_effective", "coupling.g_hz_per_m",
    "environment.temperature_k", "environment.force_noise_n_per_rthz",
    "environment.heating.exponent", "environment.phase_noise_model_constant",
    "pump.n_p", "pump.power_w", "spectrum.seed", "calibration.t_min_k",
    "inference.cal_err", "inference.n_sr_err",
    "dynamics.n0", "dynamics.gamma_m_t", "dynamics.n_m_thermal", "dynamics.gamma_opt", "dynamics.n_sr",
    "dynamics.t_off_s",
]


def _validate(raw: dict) -> None:
    for path in _POSITIVE:
        v = _get(raw, path)
        if v is not None and not v > 0:
            raise ConfigConstraintError(f"`{path}` must be > 0 (got {v})")
    for path in _NON_NEGATIVE:
        v = _get(raw, path)
        if v is not None and not v >= 0:
            raise ConfigConstraintError(f"`{path}` must be >= 0 (got {v})")
    geo = raw["mechanical"]["geometry"]
    if len(geo["layer_thicknesses_m"]) != len(geo["layer_densities_kg_m3"]):
        raise ConfigConstraintError("`mechanical.geometry.layer_thicknesses_m` and "
                                    "`layer_densities_kg_m3` must have equal length")
    if any(not (isinstance(x, (int, float)) and x >= 0) for x in geo["layer_thicknesses_m"]):
        raise ConfigConstraintError("`mechanical.geometry.layer_thicknesses_m` entries must be >= 0")
    if any(not (isinstance(x, (int, float)) and x > 0) for x in geo["layer_densities_kg_m3"]):
        raise ConfigConstraintError("`mechanical.geometry.layer_densities_kg_m3` entries must be > 0")
    cav = raw["cavity"]
    if not cav["omega_sr_hz"] > cav["gamma_sr_hz"]:
        raise ConfigConstraintError("`cavity.omega_sr_hz` must exceed `cavity.gamma_sr_hz`")
    cp = raw["coupling"]
    if not cp["c_t_f"] > cp["c_g_f"]:
        raise ConfigConstraintError("`coupling.c_t_f` must exceed `coupling.c_g_f`")
    sw = raw["sweep"]
    if not sw["n_p_max"] > sw["n_p_min"]:
        raise ConfigConstraintError("`sweep.n_p_max` must exceed `sweep.n_p_min`")
    table = sw["n_sr_table"]
    if table is not None:
        ok = all(isinstance(r, list) and len(r) == 2 and all(isinstance(x, (int, float)) and x >= 0 for x in r)
                 for r in table)
        if not ok or not table:
            raise ConfigConstraintError("`sweep.n_sr_table` must be a list of [n_p, n_sr] pairs >= 0")
    h = raw["environment"]["heating"]
    if h["exponent"] is None:
        for key in ("anchor_n_p", "anchor_n_dot"):
            if h[key] is None:
                raise ConfigConstraintError(f"`environment.heating.{key}` is required when exponent is null")
        if not h["anchor_n_p"] > h["n_p_knee"]:
            raise ConfigConstraintError("`environment.heating.anchor_n_p` must exceed `n_p_knee`")
        if not h["anchor_n_dot"] >= h["n_dot_0"]:
            raise ConfigConstraintError("`environment.heating.anchor_n_dot` must be >= `n_dot_0`")
    if raw["spectrum"]["n_bins"] < 50:
        raise ConfigConstraintError("`spectrum.n_bins` must be >= 50")
    if raw["dynamics"]["points"] < 2:
        raise ConfigConstraintError("`dynamics.points` must be >= 2")
    if raw["pump"]["power_w"] is not None and raw["pump"]["kappa_ext_hz"] is None:
        raise ConfigConstraintError("`pump.kappa_ext_hz` is required with `pump.power_w`")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration plus the physical objects built from it."""

    raw: dict
    mechanical: ph.MechanicalMode
    cavity: ph.CavityMode
    coupling: ph.Coupling
    pump: ph.PumpConfig
    temperature: float
    heating: HeatingModel
    system: CoolingSystem
    n_sr: float
    force_noise_psd: float
    phase_noise_constant: float

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical config, ignoring output paths."""
        body = {k: v for k, v in self.raw.items() if k != "paths"}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()

    def section(self, name: str) -> dict:
        return self.raw[name]

    @property
    def gamma_opt(self) -> float:
        return float(self.system.gamma_opt(self.pump.n_p))


def build(raw: dict) -> RunConfig:
    """Validate a merged raw config and construct the domain objects."""
    _check_types(raw, default_config())
    _validate(raw)
    m, cav, cp, env, pump = (raw[k] for k in ("mechanical", "cavity", "coupling", "environment", "pump"))
    T = env["temperature_k"]
    if m["mass_kg"] is None:
        g = m["geometry"]
        mass = ph.beam_mass(g["length_m"], g["width_m"], g["layer_thicknesses_m"], g["layer_densities_kg_m3"])
        if not mass > 0:
            raise ConfigConstraintError("`mechanical.geometry` gives zero mass")
    else:
        mass = m["mass_kg"]
    mech = ph.MechanicalMode(ph.hz_to_angular(m["omega_m_hz"]), mass, m["q_ref"], m["t_ref_k"],
                             m["effective_mass_factor"])
    omega_sr = ph.hz_to_angular(cav["omega_sr_hz"])
    n_sr_t = cav["n_sr_thermal"]
    if n_sr_t is None:
        n_sr_t = float(ph.bose_occupancy(omega_sr, T))
    cavity = ph.CavityMode(omega_sr, ph.hz_to_angular(cav["gamma_sr_hz"]), n_sr_t)
    if cp["g_hz_per_m"] is None:
        g_coup = ph.coupling_from_geometry(omega_sr, cp["c_t_f"], ph.parallel_plate_dcg_dx(cp["c_g_f"], cp["gap_m"]))
    else:
        g_coup = ph.hz_to_angular(cp["g_hz_per_m"])
    lam = ph.hz_to_angular(cp["lambda_hz_per_m2"] or 0.0)
    coupling = ph.Coupling(g_coup, lam, cp["c_g_f"], cp["c_t_f"], cp["gap_m"])

    detuning = None if pump["detuning_hz"] is None else ph.hz_to_angular(pump["detuning_hz"])
    n_p = pump["n_p"]
    if pump["power_w"] is not None:
        delta = -mech.omega_m if detuning is None else detuning
        n_p = float(pump_photons_from_power(pump["power_w"], ph.hz_to_angular(pump["kappa_ext_hz"]),
                                            cavity.gamma_sr, delta, omega_sr + delta))
    pump_cfg = ph.PumpConfig(n_p, detuning)

    h = env["heating"]
    if h["exponent"] is None:
        heating = HeatingModel.from_anchors(h["n_dot_0"], h["n_p_knee"], h["anchor_n_p"], h["anchor_n_dot"])
    else:
        heating = HeatingModel(h["n_dot_0"], h["n_p_knee"], h["exponent"])
    system = CoolingSystem(mech, cavity, coupling, T, pump["gamma_opt_scale"])
    n_sr = cav["n_sr_effective"]
    if n_sr is None:
        n_sr = system.n_sr_ideal
    pn_c = env["phase_noise_model_constant"]
    if pn_c is None:
        pn_c = phase_noise_constant(env["phase_noise_anchor_photons"], env["phase_noise_dbc_hz"],
                                    env["phase_noise_anchor_n_p"], cavity.gamma_sr)
    return RunConfig(raw, mech, cavity, coupling, pump_cfg, T, heating, system, float(n_sr),
                     env["force_noise_n_per_rthz"] ** 2, pn_c)


def parse_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Load a JSON config (or the shipped default), apply overrides, validate.

    Omitted sections and keys take their defaults; unknown keys are errors.
    """
    base = default_config()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigFileMissing(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigSyntaxError(f"{path}: malformed JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigSyntaxError(f"{path}: top level must be a JSON object")
        base = _merge(base, user)
    return build(apply_overrides(base, overrides))
