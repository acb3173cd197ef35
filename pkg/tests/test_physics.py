import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sidebandcool import physics as ph
from sidebandcool.errors import InvalidArgument, OutOfDomain

from conftest import GAMMA_SR, G_DEVICE, LAMBDA_DEVICE, OMEGA_M, OMEGA_SR, T_FRIDGE, TWO_PI

HBAR = ph.CONSTANTS.hbar
KB = ph.CONSTANTS.k_B

rates = st.floats(1e-3, 1e7, allow_nan=False)
occupancies = st.floats(0.0, 1e4, allow_nan=False)


class TestBose:
    def test_mechanical_mode_at_fridge_temperature(self):
        assert ph.bose_occupancy(OMEGA_M, T_FRIDGE) == pytest.approx(480, rel=0.01)

    def test_cavity_thermal_photons(self):
        assert ph.bose_occupancy(OMEGA_SR, T_FRIDGE) == pytest.approx(0.093, rel=0.01)

    def test_ln2_gives_one(self):
        t = 0.3
        omega = math.log(2) * KB * t / HBAR
        assert ph.bose_occupancy(omega, t) == pytest.approx(1.0, rel=1e-14)

    def test_zero_temperature(self):
        assert ph.bose_occupancy(OMEGA_M, 0.0) == 0.0

    def test_series_branch_matches_high_precision(self):
        t = 1.0
        for x in (1e-9, 5e-7, 2e-6):
            omega = x * KB * t / HBAR
            exact = float(1 / mpmath.expm1(mpmath.mpf(HBAR) * omega / (mpmath.mpf(KB) * t)))
            assert ph.bose_occupancy(omega, t) == pytest.approx(exact, rel=1e-12)

    def test_invalid_omega(self):
        with pytest.raises(InvalidArgument):
            ph.bose_occupancy(0.0, 0.1)

    def test_vectorized(self):
        out = ph.bose_occupancy(OMEGA_M, np.array([0.0, 0.1, 0.2]))
        assert out.shape == (3,) and out[0] == 0 and out[2] > out[1]

    @given(st.floats(1e5, 1e11), st.floats(1e-2, 10.0), st.floats(1.001, 3.0))
    def test_monotone(self, omega, t, k):
        assert ph.bose_occupancy(omega, t * k) > ph.bose_occupancy(omega, t)
        assert ph.bose_occupancy(omega * k, t) < ph.bose_occupancy(omega, t)

    @given(st.floats(1e-8, 0.01), st.floats(1e-2, 10.0))
    def test_equipartition_limit(self, x, t):
        omega = x * KB * t / HBAR
        classical = KB * t / (HBAR * omega) - 0.5
        assert ph.bose_occupancy(omega, t) == pytest.approx(classical, rel=1e-3)


class TestGeometry:
    def test_beam_mass_hand_arithmetic(self, mass):
        # 30e-6 * 170e-9 = 5.1e-12 m^2; 60e-9*3100 + 80e-9*2700 = 4.02e-4 kg/m^2
        assert mass == pytest.approx(5.1e-12 * 4.02e-4, rel=1e-12)
        assert mass == pytest.approx(2.05e-15, rel=1e-3)

    def test_zero_thickness_layer(self):
        a = ph.beam_mass(1e-6, 1e-7, [1e-8], [2000.0])
        b = ph.beam_mass(1e-6, 1e-7, [1e-8, 0.0], [2000.0, 5000.0])
        assert a == b

    def test_mass_linear_in_length(self):
        assert ph.beam_mass(2e-6, 1e-7, [1e-8], [2000.0]) == pytest.approx(
            2 * ph.beam_mass(1e-6, 1e-7, [1e-8], [2000.0]), rel=1e-15)

    def test_mismatched_layers(self):
        with pytest.raises(InvalidArgument):
            ph.beam_mass(1e-6, 1e-7, [1e-8, 1e-8], [2000.0])

    def test_zero_point_amplitude_high_precision(self, mode):
        mpmath.mp.dps = 40
        exact = mpmath.sqrt(mpmath.mpf(HBAR) / (2 * mpmath.mpf(mode.mass) * mpmath.mpf(mode.omega_m)))
        assert ph.zero_point_amplitude(mode) == pytest.approx(float(exact), rel=1e-14)
        # the device's 2.05 pg beam: 2.55e-14 m (2.58e-14 corresponds to 2.0 pg)
        assert ph.zero_point_amplitude(mode) == pytest.approx(2.549e-14, rel=1e-3)

    def test_zero_point_scaling(self, mode):
        x = ph.zero_point_amplitude(mode)
        heavy = ph.MechanicalMode(mode.omega_m, 4 * mode.mass)
        stiff = ph.MechanicalMode(4 * mode.omega_m, mode.mass)
        assert ph.zero_point_amplitude(heavy) == pytest.approx(x / 2, rel=1e-14)
        assert ph.zero_point_amplitude(stiff) == pytest.approx(x / 2, rel=1e-14)

    def test_effective_mass_factor(self, mode):
        m = ph.MechanicalMode(mode.omega_m, mode.mass, effective_mass_factor=0.25)
        assert ph.zero_point_amplitude(m) == pytest.approx(2 * ph.zero_point_amplitude(mode), rel=1e-14)

    def test_mode_invariants(self):
        with pytest.raises(InvalidArgument):
            ph.MechanicalMode(0.0, 1e-15)
        with pytest.raises(InvalidArgument):
            ph.CavityMode(1e3, 1e4)
        with pytest.raises(InvalidArgument):
            ph.Coupling(1.0, c_g=1e-15, c_t=1e-16)


class TestCoupling:
    def test_device_geometry(self):
        g = ph.coupling_from_geometry(OMEGA_SR, 260e-15, ph.parallel_plate_dcg_dx(450e-18, 75e-9))
        # 7.5e9 Hz * 6e-12 F/m / 5.2e-13 F = 86.538e9 Hz/m
        assert g / TWO_PI * 1e-12 == pytest.approx(86.538, rel=1e-4)
        assert abs(g / TWO_PI * 1e-12 - 84) <= 5

    def test_zero_derivative(self):
        assert ph.coupling_from_geometry(OMEGA_SR, 260e-15, 0.0) == 0.0

    def test_halving_ct_doubles(self):
        a = ph.coupling_from_geometry(OMEGA_SR, 260e-15, 6e-12)
        b = ph.coupling_from_geometry(OMEGA_SR, 130e-15, 6e-12)
        assert b == pytest.approx(2 * a, rel=1e-15)


class TestOpticalDamping:
    def test_device_numbers(self):
        assert ph.optical_damping_rate(2.58e-14, G_DEVICE, 3e7, GAMMA_SR) == pytest.approx(5.9e3, rel=0.01)

    def test_zero_pump(self):
        assert ph.optical_damping_rate(2.58e-14, G_DEVICE, 0.0, GAMMA_SR) == 0.0

    def test_zero_linewidth_rejected(self):
        with pytest.raises(InvalidArgument):
            ph.optical_damping_rate(2.58e-14, G_DEVICE, 1.0, 0.0)

    @given(st.floats(1.0, 1e9), st.floats(1e-15, 1e-13), st.floats(1e12, 1e16))
    def test_linearity(self, n_p, x, g):
        a = ph.optical_damping_rate(x, g, n_p, GAMMA_SR)
        assert ph.optical_damping_rate(x, g, 2 * n_p, GAMMA_SR) == pytest.approx(2 * a, rel=1e-14)
        assert ph.optical_damping_rate(x, 3 * g, n_p, GAMMA_SR) == pytest.approx(9 * a, rel=1e-14)

    def test_composed_from_geometry(self, mass):
        # hand chain: m -> x_zp -> g(geometry) -> rate, in 40-digit arithmetic
        mpmath.mp.dps = 40
        mp = mpmath.mpf
        m = mp("5.1e-12") * mp("4.02e-4")
        w = 2 * mpmath.pi * mp("6.3e6")
        x2 = mp(HBAR) / (2 * m * w)
        g = 2 * mpmath.pi * mp("7.5e9") * (mp("450e-18") / mp("75e-9")) / (2 * mp("260e-15"))
        expected = float(4 * x2 * g**2 * mp("3e7") / (2 * mpmath.pi * mp("6e5")))
        mode = ph.MechanicalMode(OMEGA_M, mass)
        g_geo = ph.coupling_from_geometry(OMEGA_SR, 260e-15, ph.parallel_plate_dcg_dx(450e-18, 75e-9))
        rate = ph.optical_damping_rate(ph.zero_point_amplitude(mode), g_geo, 3e7, GAMMA_SR)
        assert rate == pytest.approx(expected, rel=1e-12)
        assert rate == pytest.approx(6.11e3, rel=0.01)


class TestCavityOccupancy:
    def test_backaction_floor(self):
        assert ph.cavity_effective_occupancy(GAMMA_SR, OMEGA_M, 0.0) == pytest.approx(5.67e-4, rel=0.01)
        assert ph.cavity_effective_occupancy(GAMMA_SR, OMEGA_M, 0.0) == pytest.approx((600 / 25200) ** 2, rel=1e-12)

    def test_with_thermal_photons(self):
        assert ph.cavity_effective_occupancy(GAMMA_SR, OMEGA_M, 0.09) == pytest.approx(0.0907, rel=1e-3)

    def test_narrow_cavity_limit(self):
        assert ph.cavity_effective_occupancy(0.0, OMEGA_M, 0.09) == 0.09

    @given(st.floats(0, 1e8), st.floats(1e3, 1e9), occupancies)
    def test_floor_invariant(self, gsr, wm, nth):
        assert ph.cavity_effective_occupancy(gsr, wm, nth) >= (gsr / (4 * wm)) ** 2


class TestSteadyState:
    def test_no_cooling(self):
        assert ph.steady_state_occupancy(40.0, 480.0, 0.0, 2.0) == 480.0

    def test_cooling_dominated(self):
        assert ph.steady_state_occupancy(1.0, 480.0, 1e9, 2.0) == pytest.approx(2.0, rel=1e-6)

    def test_worked_example(self):
        assert ph.steady_state_occupancy(40.0, 480.0, 5000.0, 2.0) == pytest.approx(29200 / 5040, rel=1e-12)
        assert ph.steady_state_occupancy(40.0, 480.0, 5000.0, 2.0) == pytest.approx(5.79, abs=0.005)

    def test_both_rates_zero(self):
        with pytest.raises(InvalidArgument):
            ph.steady_state_occupancy(0.0, 480.0, 0.0, 2.0)

    @given(rates, occupancies, rates, occupancies)
    def test_convex_combination(self, gm, nth, go, nsr):
        n = ph.steady_state_occupancy(gm, nth, go, nsr)
        lo, hi = min(nth, nsr), max(nth, nsr)
        assert lo * (1 - 1e-12) - 1e-300 <= n <= hi * (1 + 1e-12)


class TestScalars:
    def test_ground_state_probability(self):
        assert ph.ground_state_probability(3.8) == pytest.approx(0.208, abs=5e-4)
        assert ph.ground_state_probability(0.0) == 1.0
        assert ph.ground_state_probability(0.5) == pytest.approx(0.667, abs=5e-4)
        with pytest.raises(InvalidArgument):
            ph.ground_state_probability(-0.1)

    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    def test_ground_state_probability_range(self, a, b):
        pa, pb = ph.ground_state_probability(a), ph.ground_state_probability(b)
        assert 0 < pa <= 1
        if a < b:
            assert pa >= pb

    def test_cooling_power(self):
        assert ph.cooling_power(OMEGA_M, 2.4e4) == pytest.approx(1.0e-22, rel=0.05)
        assert ph.cooling_power(OMEGA_M, 0.0) == 0.0
        assert ph.cooling_power(OMEGA_M, 4.8e4) == pytest.approx(2 * ph.cooling_power(OMEGA_M, 2.4e4), rel=1e-15)

    def test_damping_law(self, mode):
        assert ph.gamma_m_thermal(mode, 0.1) == pytest.approx(OMEGA_M / 1e6, rel=1e-14)
        assert ph.gamma_m_thermal(mode, 0.1) == pytest.approx(39.6, abs=0.05)
        assert ph.gamma_m_thermal(mode, 0.146) == pytest.approx(57.8, abs=0.05)
        assert ph.gamma_m_thermal(mode, 0.0) == 0.0
        assert ph.damping_law_valid(0.146) and not ph.damping_law_valid(0.8)

    def test_bath_heating(self, mode):
        rate = ph.bath_heating_rate(57.8, 480.0)
        assert rate == pytest.approx(2.8e4, rel=0.01)
        assert rate == pytest.approx(3e4, rel=0.1)
        assert ph.bath_heating_rate(0.0, 480.0) == 0.0 == ph.bath_heating_rate(57.8, 0.0)

    def test_bath_heating_quadratic_in_temperature(self, mode):
        t = np.linspace(0.2, 0.6, 21)
        rate = ph.bath_heating_rate(ph.gamma_m_thermal(mode, t), ph.bose_occupancy(mode.omega_m, t))
        slope = np.polyfit(np.log(t), np.log(rate), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.01)

    def test_rethermalization_time(self):
        assert ph.rethermalization_time(5e5) == pytest.approx(2e-6, rel=1e-15)
        assert ph.rethermalization_time(3e4) == pytest.approx(33.3e-6, rel=2e-3)
        assert ph.rethermalization_time(1e6) == pytest.approx(ph.rethermalization_time(5e5) / 2, rel=1e-15)
        with pytest.raises(InvalidArgument):
            ph.rethermalization_time(0.0)

    def test_frequency_pull(self, mode):
        shift = ph.frequency_pull(LAMBDA_DEVICE, 3e7, mode)
        assert shift / TWO_PI == pytest.approx(-82, abs=0.5)
        assert ph.frequency_pull(LAMBDA_DEVICE, 0.0, mode) == 0.0
        assert ph.frequency_pull(LAMBDA_DEVICE, 6e7, mode) == pytest.approx(2 * shift, rel=1e-15)

    def test_force_noise(self, mode):
        rate = ph.force_noise_heating_rate(1e-36, mode)
        assert rate == pytest.approx(2.9e4, rel=0.01)
        x = ph.zero_point_amplitude(mode)
        assert rate == pytest.approx(1e-36 * x**2 / (2 * HBAR**2), rel=1e-14)
        assert ph.force_noise_heating_rate(0.0, mode) == 0.0

    def test_sideband_asymmetry(self):
        assert ph.sideband_asymmetry(1.0) == 2.0
        assert ph.sideband_asymmetry(3.8) == pytest.approx(4.8 / 3.8, rel=1e-15)
        assert ph.sideband_asymmetry(3.8) == pytest.approx(1.263, abs=5e-4)
        assert ph.sideband_asymmetry(1e12) == pytest.approx(1.0, rel=1e-11)
        assert ph.sideband_asymmetry(math.inf) == 1.0
        with pytest.raises(OutOfDomain):
            ph.sideband_asymmetry(0.0)

    @settings(max_examples=50)
    @given(st.floats(1e-40, 1e-30), st.floats(1e-3, 10.0))
    def test_bilinearity(self, s_f, k):
        m = ph.MechanicalMode(OMEGA_M, 2e-15)
        assert ph.force_noise_heating_rate(k * s_f, m) == pytest.approx(k * ph.force_noise_heating_rate(s_f, m), rel=1e-14)
        assert ph.bath_heating_rate(k * 40.0, 480.0) == pytest.approx(k * ph.bath_heating_rate(40.0, 480.0), rel=1e-14)

    def test_hz_round_trip(self):
        assert ph.angular_to_hz(ph.hz_to_angular(6.3e6)) == pytest.approx(6.3e6, rel=1e-15)
