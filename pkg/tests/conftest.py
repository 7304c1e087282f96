import math

import pytest

import device
import utils

FIT_V_SIGMA = 93.6
FIT_V_DELTA = 30.15
PLASMA_GHZ = 32.9


@pytest.fixture
def design_cell():
    return device.CellParams(l_j=0.94e-9, c_g=0.13e-12, c_i=0.57e-12,
                             plasma_frequency=utils.ghz_to_omega(PLASMA_GHZ))


@pytest.fixture
def fitted_cell():
    return device.CellParams.from_velocities(FIT_V_SIGMA, FIT_V_DELTA, PLASMA_GHZ)


@pytest.fixture
def uniform_line(fitted_cell):
    return device.LineSpec(cell=fitted_cell, n_cells=400, ports="bloch")


@pytest.fixture
def defect_line(fitted_cell):
    return device.LineSpec(cell=fitted_cell, n_cells=400, defects=((165, "open_junction"),), ports="bloch")


@pytest.fixture
def short_line(fitted_cell):
    return device.LineSpec(cell=fitted_cell, n_cells=20, ports="nominal")


def omega(f_ghz):
    return 2 * math.pi * f_ghz * 1e9
