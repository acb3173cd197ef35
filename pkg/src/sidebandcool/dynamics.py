"""Mean-occupancy rate equation dn/dt = -G n + G_th n_th + G_opt n_sr."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidArgument
from .physics import steady_state_occupancy

CROSSCHECK_RTOL = 1e-6


@dataclass(frozen=True)
class CoolingTimeline:
    times: np.ndarray
    occupancy: np.ndarray
    steady_state: float
    rate_total: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t_s,n_m\n")
        for t, n in zip(self.times, self.occupancy):
            buf.write(f"{float(t)!r},{float(n)!r}\n")
        return buf.getvalue()

    def at(self, t: float) -> float:
        """Occupancy at time ``t`` (linear interpolation on the grid)."""
        return float(np.interp(t, self.times, self.occupancy))

    def then(self, other: "CoolingTimeline") -> "CoolingTimeline":
        """Append a segment whose grid starts at zero, shifted to follow this one."""
        times = np.concatenate([self.times, self.times[-1] + other.times[1:]])
        occ = np.concatenate([self.occupancy, other.occupancy[1:]])
        return CoolingTimeline(times, occ, other.steady_state, other.rate_total)


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InvalidArgument("t_grid must be a non-empty 1-D sequence")
    if t[0] != 0 or np.any(np.diff(t) <= 0):
        raise InvalidArgument("t_grid must start at 0 and increase strictly")
    return t


def integrate_numerically(n0, gamma_m_t, n_m_thermal, gamma_opt, n_sr, t_grid):
    """Adaptive Runge-Kutta solution of the rate equation, for cross-checks."""
    t = _check_grid(t_grid)
    g = gamma_m_t + gamma_opt
    drive = gamma_m_t * n_m_thermal + gamma_opt * n_sr

    def rhs(_, n):
        return -g * n + drive

    if t.size == 1:
        return np.array([float(n0)])
    sol = solve_ivp(rhs, (0.0, t[-1]), [float(n0)], method="RK45", t_eval=t,
                    rtol=1e-10, atol=1e-12 * max(abs(n0), abs(drive / g), 1.0))
    return sol.y[0]


def evolve_occupancy(n0, gamma_m_t, n_m_thermal, gamma_opt, n_sr, t_grid,
                     crosscheck: bool = True) -> CoolingTimeline:
    """Closed-form relaxation toward the detailed-balance occupancy.

    With ``crosscheck`` the result is compared against
    :func:`integrate_numerically` and a mismatch above 1e-6 relative raises
    ``RuntimeError``.
    """
    if gamma_m_t < 0 or gamma_opt < 0:
        raise InvalidArgument("rates must be >= 0")
    if n0 < 0 or n_m_thermal < 0 or n_sr < 0:
        raise InvalidArgument("occupancies must be >= 0")
    t = _check_grid(t_grid)
    g = gamma_m_t + gamma_opt
    n_ss = float(steady_state_occupancy(gamma_m_t, n_m_thermal, gamma_opt, n_sr))
    occ = n_ss + (n0 - n_ss) * np.exp(-g * t)
    if crosscheck:
        ref = integrate_numerically(n0, gamma_m_t, n_m_thermal, gamma_opt, n_sr, t)
        scale = max(abs(n0), n_ss, 1e-300)
        tol = CROSSCHECK_RTOL * np.maximum(np.abs(occ), 1e-6 * scale)
        if np.any(np.abs(ref - occ) > tol):
            raise RuntimeError("closed form and integrator disagree beyond 1e-6")
    return CoolingTimeline(t, occ, n_ss, g)


def pump_off_rethermalization(n_start, gamma_m_t, n_m_thermal, t_grid,
                              crosscheck: bool = True) -> CoolingTimeline:
    """Relaxation back to the bath once the cooling pump is switched off."""
    if not gamma_m_t > 0:
        raise InvalidArgument("gamma_m_t must be > 0 with the pump off")
    return evolve_occupancy(n_start, gamma_m_t, n_m_thermal, 0.0, 0.0, t_grid, crosscheck)
