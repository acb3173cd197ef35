"""Fitting sideband spectra and turning fitted areas into occupancies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FitNotConverged, InconsistentOccupancy, InsufficientData, InvalidArgument
from .physics import MechanicalMode, bose_occupancy, ground_state_probability
from .spectra import PsdTrace, SpectrumModel

PARAM_NAMES = ("floor", "area", "center", "width")
MIN_BINS = 50
MAX_ITER = 200
STEP_TOL = 1e-8
CALIBRATION_T_MIN = 0.150
REWEIGHT_PASSES = 5
_MU_MAX = 1e20


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class FitResult:
    model: SpectrumModel
    std_errors: np.ndarray
    covariance: np.ndarray
    chi2_reduced: float
    converged: bool
    iterations: int

    def relative_error(self, name: str) -> float:
        i = PARAM_NAMES.index(name)
        value = self.model.as_array()[i]
        return abs(self.std_errors[i] / value) if value != 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "std_errors": {k: _finite_or_none(v) for k, v in zip(PARAM_NAMES, self.std_errors)},
            "covariance": [[_finite_or_none(v) for v in row] for row in self.covariance],
            "chi2_reduced": _finite_or_none(self.chi2_reduced),
            "converged": self.converged,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class CalibrationFit:
    """Sideband power per quantum per unit cooling rate."""

    cal: float
    cal_err: float
    fit_range: tuple[float, float]
    points_used: int

    def to_dict(self) -> dict:
        return {"cal": self.cal, "cal_err": self.cal_err,
                "fit_range": list(self.fit_range), "points_used": self.points_used}


@dataclass(frozen=True)
class OccupancyResult:
    n_eff: float
    n_sr: float
    n_m: float
    n_m_err: float
    p0: float
    n_eff_err: float = 0.0
    consistent: bool = True

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("n_eff", "n_eff_err", "n_sr", "n_m", "n_m_err", "p0", "consistent")}


# Lorentzian fit ------------------------------------------------------------

def _model_and_jacobian(p, u):
    floor, area, c, w = p
    d = u - c
    den = d * d + 0.25 * w * w
    lor = (w / (2.0 * math.pi)) / den
    jac = np.empty((u.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = lor
    jac[:, 2] = area * (w / math.pi) * d / (den * den)
    jac[:, 3] = area * (1.0 - 0.5 * w * w / den) / (2.0 * math.pi * den)
    return floor + area * lor, jac


def initial_guess(trace: PsdTrace) -> SpectrumModel:
    """Median floor, extremum of |values - floor|, width of span/20.

    The extremum is taken after a boxcar smooth over span/40 so that a
    single noisy bin cannot outrank a weak line.
    """
    v = trace.values
    floor = float(np.median(v))
    if floor <= 0:
        floor = float(np.mean(v)) or 1.0
    n_box = max(1, v.size // 40)
    dev = np.convolve(v - floor, np.ones(n_box) / n_box, mode="same")
    k = int(np.argmax(np.abs(dev)))
    span = float(trace.freqs[-1] - trace.freqs[0])
    width = span / 20.0
    area = dev[k] * math.pi * width / 2.0
    return SpectrumModel(floor, float(area), float(trace.freqs[k]), width)


def _lm(u, y, sig, p, max_iter):
    """Levenberg-Marquardt on scaled coordinates with fixed per-bin sigma."""
    inv_sig = 1.0 / sig

    def chi2_at(q):
        m, j = _model_and_jacobian(q, u)
        r = (y - m) * inv_sig
        return float(r @ r), r, j * inv_sig[:, None]

    chi2, r, jw = chi2_at(p)
    mu = 1e-3
    it = 0
    while it < max_iter:
        it += 1
        a = jw.T @ jw
        grad = jw.T @ r
        diag = np.diag(a).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        accepted = False
        while mu < _MU_MAX:
            try:
                step = np.linalg.solve(a + mu * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = p + step
            if trial[3] <= 0 or trial[0] <= 0:
                mu *= 10.0
                continue
            chi2_t, r_t, jw_t = chi2_at(trial)
            if chi2_t <= chi2:
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            # no downhill direction left at working precision
            return p, chi2, jw, it, True
        p, chi2, r, jw = trial, chi2_t, r_t, jw_t
        mu = max(mu / 10.0, 1e-12)
        step_scale = np.array([abs(p[0]), max(abs(p[1]), p[0] * p[3]), p[3], p[3]])
        if np.max(np.abs(step) / step_scale) < STEP_TOL:
            return p, chi2, jw, it, True
    return p, chi2, jw, it, False


def fit_lorentzian(trace: PsdTrace, init: SpectrumModel | None = None,
                   reweight: bool = True) -> FitResult:
    """Weighted Levenberg-Marquardt fit of floor + signed Lorentzian.

    The first pass uses sigma_i = value_i/sqrt(n_avg). With ``reweight``,
    later passes take sigma from the fitted model instead, which removes
    the downward bias that data-derived weights give Gamma-distributed
    bins. Converged means the relative step fell below 1e-8; otherwise
    :class:`FitNotConverged` is raised with the last iterate attached.
    """
    n = trace.freqs.size
    if n < MIN_BINS:
        raise InvalidArgument(f"trace has {n} bins, need at least {MIN_BINS}")
    if init is None:
        init = initial_guess(trace)

    w0 = 0.5 * (trace.freqs[0] + trace.freqs[-1])
    s = float(trace.freqs[-1] - trace.freqs[0])
    ys = float(np.median(trace.values))
    if ys <= 0:
        ys = float(np.mean(trace.values)) or 1.0
    u = (trace.freqs - w0) / s
    y = trace.values / ys
    tiny = 1e-12 * max(float(y.max()), 1.0)
    root_n = math.sqrt(trace.n_avg)
    scale = np.array([ys, ys * s, s, s])
    offset = np.array([0.0, 0.0, w0, 0.0])
    p = (init.as_array() - offset) / scale

    sig = np.maximum(y, tiny) / root_n
    p, chi2, jw, total, converged = _lm(u, y, sig, p, MAX_ITER)
    for _ in range(REWEIGHT_PASSES if reweight else 0):
        if not converged:
            break
        sig = np.maximum(_model_and_jacobian(p, u)[0], tiny) / root_n
        p_new, chi2, jw, it, converged = _lm(u, y, sig, p, MAX_ITER - total)
        total += it
        moved = np.max(np.abs(p_new - p) / np.array([abs(p[0]), max(abs(p[1]), p[0] * p[3]), p[3], p[3]]))
        p = p_new
        if moved < STEP_TOL:
            break

    cov = _covariance(jw.T @ jw) * np.outer(scale, scale)
    with np.errstate(invalid="ignore"):
        std = np.sqrt(np.diag(cov))
    phys = p * scale + offset
    model = SpectrumModel(float(phys[0]), float(phys[1]), float(phys[2]), float(phys[3]))
    result = FitResult(model, std, cov, chi2 / max(n - 4, 1), converged, total)
    if not converged:
        raise FitNotConverged(f"no convergence after {total} iterations", result)
    return result


def _covariance(a):
    """Inverse normal matrix; directions with no data support get inf variance."""
    d = np.sqrt(np.diag(a))
    dead = d <= 1e-10 * max(d.max(), 1e-300)
    cov = np.zeros_like(a)
    live = ~dead
    if live.any():
        sub = a[np.ix_(live, live)]
        dl = d[live]
        inv = np.linalg.pinv(sub / np.outer(dl, dl), hermitian=True)
        cov[np.ix_(live, live)] = 0.5 * (inv + inv.T) / np.outer(dl, dl)
    cov[dead, dead] = np.inf
    return cov


# calibration ---------------------------------------------------------------

def calibrate_conversion(points: Sequence[tuple[float, float]], mode: MechanicalMode,
                         gamma_opt: float, t_min: float = CALIBRATION_T_MIN) -> CalibrationFit:
    """Fit P = cal * n_th(T) * gamma_opt through the origin.

    Points colder than ``t_min`` are dropped: the mode decouples from the
    fridge there and equipartition no longer holds.
    """
    if not gamma_opt > 0:
        raise InvalidArgument("gamma_opt must be > 0")
    use = [(float(t), float(pw)) for t, pw in points if t >= t_min]
    if len(use) < 3:
        raise InsufficientData(f"{len(use)} points at T >= {t_min} K, need 3")
    t = np.array([p[0] for p in use])
    pw = np.array([p[1] for p in use])
    x = bose_occupancy(mode.omega_m, t) * gamma_opt
    sxx = float(x @ x)
    cal = float(x @ pw) / sxx
    resid = pw - cal * x
    s2 = float(resid @ resid) / (len(use) - 1)
    return CalibrationFit(cal, math.sqrt(s2 / sxx), (float(t.min()), float(t.max())), len(use))


# occupancy -----------------------------------------------------------------

def occupancy_from_fit(fit: FitResult, cal: CalibrationFit, gamma_opt: float,
                       n_sr: float, n_sr_err: float = 0.0) -> OccupancyResult:
    """Mode occupancy with the squashing correction n_m = n_eff + 2 n_sr.

    n_eff comes straight from the fitted (signed) area. Raises
    :class:`InconsistentOccupancy` if n_m is negative by more than its error.
    """
    if not fit.converged:
        raise InvalidArgument("fit did not converge")
    if not gamma_opt > 0:
        raise InvalidArgument("gamma_opt must be > 0")
    k = cal.cal * gamma_opt
    area = fit.model.area
    n_eff = area / k
    sig_area = fit.std_errors[PARAM_NAMES.index("area")]
    sig_eff = math.hypot(sig_area / k, n_eff * cal.cal_err / cal.cal)
    n_m = n_eff + 2.0 * n_sr
    n_m_err = math.sqrt(sig_eff**2 + 4.0 * n_sr_err**2)
    if n_m + n_m_err < 0:
        raise InconsistentOccupancy(
            f"n_m = {n_m:.4g} +/- {n_m_err:.4g} is negative; check n_sr")
    p0 = ground_state_probability(max(n_m, 0.0))
    return OccupancyResult(n_eff, n_sr, n_m, n_m_err, p0, sig_eff, n_m >= 0)
