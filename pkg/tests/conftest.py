import math

import pytest

from sidebandcool.design import CoolingSystem, HeatingModel
from sidebandcool.physics import CavityMode, Coupling, MechanicalMode, beam_mass, bose_occupancy

TWO_PI = 2 * math.pi
OMEGA_M = TWO_PI * 6.3e6
OMEGA_SR = TWO_PI * 7.5e9
GAMMA_SR = TWO_PI * 600e3
T_FRIDGE = 0.146
G_DEVICE = TWO_PI * 84e3 / 1e-9
LAMBDA_DEVICE = TWO_PI * 2.1e3 / 1e-18


@pytest.fixture
def mass():
    return beam_mass(30e-6, 170e-9, [60e-9, 80e-9], [3100.0, 2700.0])


@pytest.fixture
def mode(mass):
    return MechanicalMode(OMEGA_M, mass, q_ref=1e6, t_ref=0.1)


@pytest.fixture
def cavity():
    return CavityMode(OMEGA_SR, GAMMA_SR, float(bose_occupancy(OMEGA_SR, T_FRIDGE)))


def make_system(gamma_opt_scale=1.0):
    mass = beam_mass(30e-6, 170e-9, [60e-9, 80e-9], [3100.0, 2700.0])
    mode = MechanicalMode(OMEGA_M, mass, q_ref=1e6, t_ref=0.1)
    cavity = CavityMode(OMEGA_SR, GAMMA_SR, float(bose_occupancy(OMEGA_SR, T_FRIDGE)))
    return CoolingSystem(mode, cavity, Coupling(G_DEVICE, LAMBDA_DEVICE), T_FRIDGE, gamma_opt_scale)


@pytest.fixture
def system():
    return make_system()


@pytest.fixture
def two_anchor_heating():
    return HeatingModel.from_anchors(3e4, 3e7, 3e8, 5e5)


# synthetic sideband used by the round-trip suites: a -0.5 quanta dip
# reaches 90% of the floor, so every n_eff in [-0.5, 500] is representable
RT_GAMMA_OPT = 5000.0
RT_GAMMA_M_T = 58.0
RT_WIDTH = RT_GAMMA_OPT + RT_GAMMA_M_T
RT_FLOOR = 1.0
RT_CAL = 0.9 * math.pi * RT_WIDTH / 2 / (0.5 * RT_GAMMA_OPT)
RT_N_AVG = 10_000


def round_trip_n_eff(rng, i):
    """Draws cycling through dips, small peaks and log-spread large peaks."""
    kind = i % 3
    if kind == 0:
        return rng.uniform(-0.5, -0.01)
    if kind == 1:
        return rng.uniform(0.01, 5.0)
    return math.exp(rng.uniform(math.log(5.0), math.log(500.0)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
