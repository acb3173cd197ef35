"""Sideband cooling of a mechanical resonator by a driven microwave cavity:
forward model, synthetic spectra, occupancy inference and pump design."""

from .physics import (  # noqa: F401
    CONSTANTS, CavityMode, Coupling, MechanicalMode, PumpConfig, bath_heating_rate, beam_mass,
    bose_occupancy, cavity_effective_occupancy, cooling_power, coupling_from_geometry,
    force_noise_heating_rate, frequency_pull, gamma_m_thermal, ground_state_probability,
    optical_damping_rate, rethermalization_time, sideband_asymmetry, steady_state_occupancy,
    zero_point_amplitude,
)
from .spectra import PsdTrace, SpectrumModel, add_measurement_noise, synthesize_psd  # noqa: F401
from .inference import (  # noqa: F401
    CalibrationFit, FitResult, OccupancyResult, calibrate_conversion, fit_lorentzian, occupancy_from_fit,
)
from .dynamics import CoolingTimeline, evolve_occupancy, pump_off_rethermalization  # noqa: F401
from .design import CoolingSystem, HeatingModel, optimize_pump, sweep_occupancy_vs_pump  # noqa: F401

__version__ = "0.1.0"
