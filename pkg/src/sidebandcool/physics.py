"""Closed-form relations for a mechanical mode parametrically coupled to a
microwave cavity.

Units: SI throughout. Frequencies and rates are angular (rad/s, 1/s); the
``hz`` helpers at the bottom do the 2*pi conversion for I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _codata

from .errors import InvalidArgument, OutOfDomain

__all__ = [
    "PhysicalConstants", "CONSTANTS", "MechanicalMode", "CavityMode",
    "Coupling", "PumpConfig", "bose_occupancy", "zero_point_amplitude",
    "beam_mass", "parallel_plate_dcg_dx", "coupling_from_geometry",
    "optical_damping_rate", "cavity_effective_occupancy",
    "steady_state_occupancy", "ground_state_probability", "cooling_power",
    "gamma_m_thermal", "damping_law_valid", "bath_heating_rate", "rethermalization_time",
    "frequency_pull", "force_noise_heating_rate", "sideband_asymmetry",
    "hz_to_angular", "angular_to_hz",
]

# below this hbar*omega/(k_B*T) the Laurent series replaces expm1
_SERIES_THRESHOLD = 1e-6
# linear damping law is documented as valid below this temperature
LINEAR_DAMPING_T_MAX = 0.6


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _codata.hbar
    k_B: float = _codata.k


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class MechanicalMode:
    """Flexural mode with damping linear in temperature.

    ``mass`` is the geometric mass; ``effective_mass_factor`` scales it for
    the mode-shape correction.
    """

    omega_m: float
    mass: float
    q_ref: float = 1e6
    t_ref: float = 0.1
    effective_mass_factor: float = 1.0

    def __post_init__(self):
        for name in ("omega_m", "mass", "q_ref", "t_ref", "effective_mass_factor"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"MechanicalMode.{name} must be > 0")

    @property
    def effective_mass(self) -> float:
        return self.mass * self.effective_mass_factor


@dataclass(frozen=True)
class CavityMode:
    omega_sr: float
    gamma_sr: float
    n_sr_thermal: float = 0.0

    def __post_init__(self):
        if not self.gamma_sr > 0:
            raise InvalidArgument("CavityMode.gamma_sr must be > 0")
        if not self.omega_sr > self.gamma_sr:
            raise InvalidArgument("CavityMode.omega_sr must exceed gamma_sr")
        if not self.n_sr_thermal >= 0:
            raise InvalidArgument("CavityMode.n_sr_thermal must be >= 0")


@dataclass(frozen=True)
class Coupling:
    """Dispersive coupling: ``g`` in rad/s/m, ``lam`` (the quadratic
    coefficient) in rad/s/m^2, plus the capacitances behind them."""

    g: float
    lam: float = 0.0
    c_g: float = 450e-18
    c_t: float = 260e-15
    gap: float = 75e-9

    def __post_init__(self):
        if not self.g >= 0:
            raise InvalidArgument("Coupling.g must be >= 0")
        if not self.c_g > 0:
            raise InvalidArgument("Coupling.c_g must be > 0")
        if not self.c_t > self.c_g:
            raise InvalidArgument("Coupling.c_t must exceed c_g")
        if not self.gap > 0:
            raise InvalidArgument("Coupling.gap must be > 0")


@dataclass(frozen=True)
class PumpConfig:
    """Intracavity pump photon number and detuning from the cavity.

    ``detuning=None`` means the red sideband, ``-omega_m``.
    """

    n_p: float
    detuning: float | None = None

    def __post_init__(self):
        if not self.n_p >= 0:
            raise InvalidArgument("PumpConfig.n_p must be >= 0")

    def resolved_detuning(self, mode: MechanicalMode) -> float:
        return -mode.omega_m if self.detuning is None else self.detuning


def bose_occupancy(omega, temperature, constants: PhysicalConstants = CONSTANTS):
    """Mean thermal occupancy 1/(exp(hbar*omega/k_B*T) - 1).

    Vectorized over both arguments. Returns 0 at T = 0 and uses the series
    1/x - 1/2 + x/12 when x = hbar*omega/k_B*T is tiny.
    """
    omega = np.asarray(omega, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    if np.any(omega <= 0):
        raise InvalidArgument("omega must be > 0")
    if np.any(temperature < 0):
        raise InvalidArgument("temperature must be >= 0")
    omega, temperature = np.broadcast_arrays(omega, temperature)
    out = np.zeros(omega.shape)
    hot = temperature > 0
    x = np.full(omega.shape, np.inf)
    x[hot] = constants.hbar * omega[hot] / (constants.k_B * temperature[hot])
    small = x < _SERIES_THRESHOLD
    regular = hot & ~small
    with np.errstate(over="ignore"):
        out[regular] = 1.0 / np.expm1(x[regular])
    xs = x[small]
    out[small] = 1.0 / xs - 0.5 + xs / 12.0
    return out[()] if out.ndim == 0 else out


def zero_point_amplitude(mode: MechanicalMode, constants: PhysicalConstants = CONSTANTS) -> float:
    """Ground-state rms displacement sqrt(hbar / (2 m omega_m))."""
    return math.sqrt(constants.hbar / (2.0 * mode.effective_mass * mode.omega_m))


def beam_mass(length, width, layer_thicknesses, layer_densities) -> float:
    """Mass of a layered rectangular beam."""
    if len(layer_thicknesses) != len(layer_densities):
        raise InvalidArgument("layer_thicknesses and layer_densities differ in length")
    if length <= 0 or width <= 0:
        raise InvalidArgument("length and width must be > 0")
    if any(t < 0 for t in layer_thicknesses) or any(d <= 0 for d in layer_densities):
        raise InvalidArgument("layer thicknesses must be >= 0 and densities > 0")
    return float(sum(length * width * t * d for t, d in zip(layer_thicknesses, layer_densities)))


def parallel_plate_dcg_dx(c_g: float, gap: float) -> float:
    """Parallel-plate estimate of dC_g/dx = C_g / gap."""
    if gap <= 0:
        raise InvalidArgument("gap must be > 0")
    return c_g / gap


def coupling_from_geometry(omega_sr: float, c_t: float, dcg_dx: float) -> float:
    """Frequency pull per displacement, omega_sr * dC_g/dx / (2 C_t)."""
    if omega_sr <= 0 or c_t <= 0 or dcg_dx < 0:
        raise InvalidArgument("omega_sr and c_t must be > 0, dcg_dx >= 0")
    return omega_sr * dcg_dx / (2.0 * c_t)


def optical_damping_rate(x_zp, g, n_p, gamma_sr):
    """Resolved-sideband cooling rate 4 x_zp^2 g^2 n_p / gamma_sr."""
    if not gamma_sr > 0:
        raise InvalidArgument("gamma_sr must be > 0")
    if np.any(np.asarray(n_p) < 0) or x_zp < 0 or g < 0:
        raise InvalidArgument("x_zp, g and n_p must be >= 0")
    return 4.0 * x_zp**2 * g**2 * n_p / gamma_sr


def cavity_effective_occupancy(gamma_sr: float, omega_m: float, n_sr_thermal: float) -> float:
    """Effective cavity bath occupancy seen by the mechanical mode.

    The (gamma_sr / 4 omega_m)^2 term is the back-action floor from quantum
    fluctuations of the pump; the rest is the thermal photon population.
    """
    if not omega_m > 0:
        raise InvalidArgument("omega_m must be > 0")
    r2 = (gamma_sr / (4.0 * omega_m)) ** 2
    return r2 + n_sr_thermal * (1.0 + 2.0 * r2)


def steady_state_occupancy(gamma_m_t, n_m_thermal, gamma_opt, n_sr_eff):
    """Detailed-balance occupancy: rate-weighted mean of the two baths."""
    total = np.asarray(gamma_m_t + gamma_opt, dtype=float)
    if np.any(total <= 0):
        raise InvalidArgument("gamma_m_t + gamma_opt must be > 0")
    return (gamma_m_t * n_m_thermal + gamma_opt * n_sr_eff) / total


def ground_state_probability(n_m: float) -> float:
    """Thermal-state ground-state population 1/(n+1)."""
    if n_m < 0:
        raise InvalidArgument("n_m must be >= 0")
    return 1.0 / (n_m + 1.0)


def cooling_power(omega_m, gamma_opt, constants: PhysicalConstants = CONSTANTS):
    return constants.hbar * omega_m * gamma_opt


def gamma_m_thermal(mode: MechanicalMode, temperature):
    """Intrinsic energy damping rate, linear in T through (t_ref, q_ref).

    The law is anchored below 0.6 K; see :func:`damping_law_valid`.
    """
    if np.any(np.asarray(temperature) < 0):
        raise InvalidArgument("temperature must be >= 0")
    return (mode.omega_m / mode.q_ref) * (np.asarray(temperature, dtype=float) / mode.t_ref)[()]


def damping_law_valid(temperature) -> bool:
    return bool(np.all(np.asarray(temperature) <= LINEAR_DAMPING_T_MAX))


def bath_heating_rate(gamma_m_t, n_m_thermal):
    """Quanta per second entering from the mechanical bath."""
    return gamma_m_t * n_m_thermal


def rethermalization_time(n_dot_t: float) -> float:
    """Mean time for one bath quantum to enter the mode."""
    if not n_dot_t > 0:
        raise InvalidArgument("n_dot_t must be > 0")
    return 1.0 / n_dot_t


def frequency_pull(lam, n_p, mode: MechanicalMode, constants: PhysicalConstants = CONSTANTS):
    """First-order mechanical frequency shift from the x^2 coupling term.

    The term -hbar*lam*x^2*n_p adds a spring constant -2*hbar*lam*n_p, so
    delta_omega = -hbar*lam*n_p / (m*omega_m).
    """
    return -constants.hbar * lam * n_p / (mode.effective_mass * mode.omega_m)


def force_noise_heating_rate(s_f, mode: MechanicalMode, constants: PhysicalConstants = CONSTANTS):
    """Heating rate S_F / (4 m hbar omega_m) for a single-sided force PSD S_F in N^2/Hz."""
    if np.any(np.asarray(s_f) < 0):
        raise InvalidArgument("s_f must be >= 0")
    return s_f / (4.0 * mode.effective_mass * constants.hbar * mode.omega_m)


def sideband_asymmetry(n_m):
    """Ratio of down- to up-conversion rates, (n+1)/n."""
    if np.isinf(n_m):
        return 1.0
    if not n_m > 0:
        raise OutOfDomain("sideband asymmetry diverges for n_m <= 0")
    return (n_m + 1.0) / n_m


def hz_to_angular(f):
    return 2.0 * math.pi * np.asarray(f, dtype=float)[()]


def angular_to_hz(omega):
    return np.asarray(omega, dtype=float)[()] / (2.0 * math.pi)
