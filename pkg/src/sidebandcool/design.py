"""Pump-strength sweeps, heating budgets and pump optimization."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import InvalidArgument
from .physics import (
    CONSTANTS, CavityMode, Coupling, MechanicalMode, bose_occupancy,
    cavity_effective_occupancy, cooling_power, gamma_m_thermal,
    optical_damping_rate, steady_state_occupancy, zero_point_amplitude,
)

NSrTable = Union[None, float, Sequence[tuple[float, float]]]

GRID_POINTS = 1000
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HeatingModel:
    """Bath heating rate flat at ``n_dot_0`` up to ``n_p_knee`` pump photons,
    then growing as (n_p / n_p_knee)**exponent."""

    n_dot_0: float
    n_p_knee: float
    exponent: float = 0.0

    def __post_init__(self):
        if self.n_dot_0 < 0 or self.n_p_knee < 0 or self.exponent < 0:
            raise InvalidArgument("HeatingModel fields must be >= 0")

    @classmethod
    def from_anchors(cls, n_dot_0, n_p_knee, n_p_anchor, n_dot_anchor) -> "HeatingModel":
        """Choose the exponent so the rate reaches ``n_dot_anchor`` at ``n_p_anchor``."""
        if not (n_p_anchor > n_p_knee > 0 and n_dot_anchor >= n_dot_0 > 0):
            raise InvalidArgument("anchor must lie above the knee with a higher rate")
        return cls(n_dot_0, n_p_knee, math.log(n_dot_anchor / n_dot_0) / math.log(n_p_anchor / n_p_knee))


def heating_rate_vs_pump(model: HeatingModel, n_p):
    n_p = np.asarray(n_p, dtype=float)
    if np.any(n_p < 0):
        raise InvalidArgument("n_p must be >= 0")
    if model.exponent == 0 or model.n_p_knee == 0:
        out = np.full(n_p.shape, float(model.n_dot_0))
    else:
        out = model.n_dot_0 * np.maximum(n_p / model.n_p_knee, 1.0) ** model.exponent
    return out[()]


@dataclass(frozen=True)
class CoolingSystem:
    """Device plus environment needed to evaluate occupancy versus pump.

    ``gamma_opt_scale`` multiplies the optical damping rate for what-if
    studies (stronger coupling or a narrower cavity).
    """

    mechanical: MechanicalMode
    cavity: CavityMode
    coupling: Coupling
    temperature: float
    gamma_opt_scale: float = 1.0

    @property
    def x_zp(self) -> float:
        return zero_point_amplitude(self.mechanical)

    @property
    def gamma_m_t(self) -> float:
        return float(gamma_m_thermal(self.mechanical, self.temperature))

    @property
    def n_m_thermal(self) -> float:
        return float(bose_occupancy(self.mechanical.omega_m, self.temperature))

    @property
    def n_sr_ideal(self) -> float:
        return cavity_effective_occupancy(self.cavity.gamma_sr, self.mechanical.omega_m,
                                          self.cavity.n_sr_thermal)

    def gamma_opt(self, n_p):
        return self.gamma_opt_scale * optical_damping_rate(
            self.x_zp, self.coupling.g, np.asarray(n_p, dtype=float), self.cavity.gamma_sr)[()]


def resolve_n_sr(system: CoolingSystem, n_sr_table: NSrTable, n_p):
    """Cavity occupancy at each pump strength.

    ``None`` uses the ideal (thermal plus back-action) value, a scalar is a
    constant, and (n_p, n_sr) pairs are linearly interpolated, clamped at
    the ends.
    """
    n_p = np.asarray(n_p, dtype=float)
    if n_sr_table is None:
        return np.full(n_p.shape, system.n_sr_ideal)
    if np.isscalar(n_sr_table):
        return np.full(n_p.shape, float(n_sr_table))
    table = np.asarray(n_sr_table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise InvalidArgument("n_sr_table must be (n_p, n_sr) pairs")
    order = np.argsort(table[:, 0])
    return np.interp(n_p, table[order, 0], table[order, 1])


@dataclass(frozen=True)
class SweepResult:
    n_p: np.ndarray
    gamma_opt: np.ndarray
    n_m: np.ndarray
    n_dot_t: np.ndarray
    q_dot: np.ndarray
    n_sr: np.ndarray

    def to_csv(self) -> str:
        """CSV ``n_p,gamma_opt_hz,n_m,n_dot_t,q_dot_w``; gamma_opt_hz is gamma_opt/2pi."""
        buf = io.StringIO()
        buf.write("n_p,gamma_opt_hz,n_m,n_dot_t,q_dot_w\n")
        for row in zip(self.n_p, self.gamma_opt / (2.0 * math.pi), self.n_m, self.n_dot_t, self.q_dot):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def sweep_occupancy_vs_pump(system: CoolingSystem, heating: HeatingModel,
                            n_sr_table: NSrTable, n_p_grid) -> SweepResult:
    """Detailed-balance occupancy over a pump-strength grid.

    The bath is represented by an effective thermal occupancy
    n_dot_T / gamma_m_T so that pump-induced heating enters through the
    heating model alone.
    """
    n_p = np.asarray(n_p_grid, dtype=float)
    if n_p.ndim != 1 or np.any(n_p <= 0) or np.any(np.diff(n_p) <= 0):
        raise InvalidArgument("n_p grid must be positive and ascending")
    g_opt = np.asarray(system.gamma_opt(n_p), dtype=float)
    g_th = system.gamma_m_t
    n_dot = np.asarray(heating_rate_vs_pump(heating, n_p), dtype=float)
    n_sr = resolve_n_sr(system, n_sr_table, n_p)
    n_th_eff = n_dot / g_th
    n_m = steady_state_occupancy(g_th, n_th_eff, g_opt, n_sr)
    q_dot = cooling_power(system.mechanical.omega_m, g_opt)
    return SweepResult(n_p, g_opt, n_m, n_dot, q_dot, n_sr)


class PumpOptimum(NamedTuple):
    n_p: float
    n_m: float


def _golden_min(f, a, b, tol):
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def optimize_pump(system: CoolingSystem, heating: HeatingModel, n_sr_table: NSrTable,
                  bounds: tuple[float, float], n_grid: int = GRID_POINTS) -> PumpOptimum:
    """Pump photon number minimizing the steady-state occupancy.

    A log-spaced scan picks the best cell, golden-section search in log n_p
    refines it, and ties go to the smaller pump.
    """
    lo, hi = bounds
    if not 0 < lo < hi:
        raise InvalidArgument("bounds must satisfy 0 < lo < hi")
    grid = np.geomspace(lo, hi, n_grid)
    n_m = sweep_occupancy_vs_pump(system, heating, n_sr_table, grid).n_m
    i = int(np.argmin(n_m))

    def objective(log_np):
        x = math.exp(min(max(log_np, math.log(lo)), math.log(hi)))
        return float(sweep_occupancy_vs_pump(system, heating, n_sr_table, [x]).n_m[0])

    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, n_grid - 1)])
    x_best, f_best = _golden_min(objective, a, b, tol=1e-12 * max(1.0, abs(b)))
    if n_m[i] <= f_best:
        return PumpOptimum(float(grid[i]), float(n_m[i]))
    return PumpOptimum(math.exp(x_best), f_best)


def project_cooling_gain(n_m_observed: float, n_dot_t: float, gamma_m_t: float,
                         n_sr: float, factor: float) -> float:
    """Occupancy after multiplying the optical damping rate by ``factor``.

    The current damping rate is recovered from the observed occupancy by
    inverting detailed balance with bath heating ``n_dot_t`` held fixed.
    """
    if not n_m_observed > n_sr:
        raise InvalidArgument("observed occupancy must exceed n_sr")
    gamma_opt = (n_dot_t - gamma_m_t * n_m_observed) / (n_m_observed - n_sr)
    if gamma_opt < 0:
        raise InvalidArgument("observation is hotter than the bath allows")
    g_new = factor * gamma_opt
    return float(steady_state_occupancy(gamma_m_t, n_dot_t / gamma_m_t, g_new, n_sr))


def phase_noise_occupancy(l_dbc_per_hz, n_p, gamma_sr, model_constant: float = 1.0):
    """Cavity photons from pump phase noise: c * n_p * 10**(L/10) * gamma_sr / 4."""
    if np.any(np.asarray(n_p) < 0):
        raise InvalidArgument("n_p must be >= 0")
    return model_constant * np.asarray(n_p, dtype=float)[()] * 10.0 ** (l_dbc_per_hz / 10.0) * gamma_sr / 4.0


def phase_noise_constant(n_photons, l_dbc_per_hz, n_p, gamma_sr) -> float:
    """Coupling constant that makes phase noise ``l_dbc_per_hz`` at ``n_p`` give ``n_photons``."""
    return float(n_photons / phase_noise_occupancy(l_dbc_per_hz, n_p, gamma_sr, 1.0))


def pump_photons_from_power(p_in, kappa_ext, kappa_total, detuning, omega_p,
                            hbar: float = CONSTANTS.hbar):
    """Intracavity photons for drive power ``p_in`` through a port of rate ``kappa_ext``."""
    if not (kappa_ext > 0 and kappa_total > 0 and omega_p > 0):
        raise InvalidArgument("rates and omega_p must be > 0")
    flux = kappa_ext * np.asarray(p_in, dtype=float) / (hbar * omega_p)
    return (flux / ((0.5 * kappa_total) ** 2 + detuning**2))[()]


@dataclass(frozen=True)
class BudgetTable:
    n_p: np.ndarray
    n_dot_t: np.ndarray
    tau: np.ndarray
    n_phase_noise: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n_p,n_dot_t,tau_s,n_phase_noise\n")
        for row in zip(self.n_p, self.n_dot_t, self.tau, self.n_phase_noise):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def heating_budget(heating: HeatingModel, n_p_grid, l_dbc_per_hz, gamma_sr,
                   model_constant: float = 1.0) -> BudgetTable:
    """Bath heating, rethermalization time and phase-noise photons per pump level."""
    n_p = np.asarray(n_p_grid, dtype=float)
    n_dot = np.asarray(heating_rate_vs_pump(heating, n_p), dtype=float)
    with np.errstate(divide="ignore"):
        tau = np.where(n_dot > 0, 1.0 / n_dot, np.inf)
    n_pn = np.asarray(phase_noise_occupancy(l_dbc_per_hz, n_p, gamma_sr, model_constant), dtype=float)
    return BudgetTable(n_p, n_dot, tau, n_pn)


def anchor_gamma_opt_scale(system: CoolingSystem, heating: HeatingModel, n_sr_table: NSrTable,
                           bounds: tuple[float, float], n_m_target: float) -> float:
    """``gamma_opt_scale`` whose optimized occupancy equals ``n_m_target``.

    Used to pin the model to an observed best-case occupancy before asking
    what-if questions relative to it.
    """
    from dataclasses import replace
    from scipy.optimize import brentq

    def gap(log_scale):
        s = replace(system, gamma_opt_scale=math.exp(log_scale))
        return math.log(optimize_pump(s, heating, n_sr_table, bounds).n_m) - math.log(n_m_target)

    lo, hi = -10.0, 10.0
    if gap(lo) * gap(hi) > 0:
        raise InvalidArgument("target occupancy is not reachable by rescaling gamma_opt")
    return math.exp(brentq(gap, lo, hi, xtol=1e-12))
