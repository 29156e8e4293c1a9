"""Shared configurations.

``BASELINE`` is the reference configuration used by the acceptance suite.
Its inner edge is an attractive inverse-square singularity with complex
exponents, so the discrete spectrum does not converge there. ``WELL_POSED``
(q = 1) and ``WELL_POSED_Q2`` (q = 2) are configurations whose inner
exponents are real; they exercise the same machinery on a problem that has a
limit.
"""
import pytest

from pdm_hulthen.core import FieldConfig, ModelParams, PhysicalConstants
from pdm_hulthen.oracle import RadialGrid, solve_radial

NATURAL = PhysicalConstants()

BASELINE = ModelParams(v0=1.0, v1=0.1, lam=0.1, q=1.0, m0=1.0)
BASELINE_FIELD = FieldConfig(0.0, 0.0)
BASELINE_M = 0
BASELINE_GRID = RadialGrid(1e-3, 600.0, 4000)

WELL_POSED = ModelParams(v0=23.0, v1=0.1, lam=1.0, q=1.0, m0=1.0)
WELL_POSED_FIELD = FieldConfig(6.0, 1.0)
WELL_POSED_M = 2
WELL_POSED_ENERGIES = (-4.8903, -2.2629, -0.6355)

WELL_POSED_Q2 = ModelParams(v0=26.4, v1=0.1, lam=1.0, q=2.0, m0=1.0)
WELL_POSED_Q2_FIELD = FieldConfig(10.0, 1.0)


def well_posed_grid(n_points=4000):
    return RadialGrid(1e-3, 40.0, n_points)


def well_posed_q2_grid(n_points=4000):
    from math import log
    rs = log(2.0)
    return RadialGrid(rs + 1e-3, rs + 40.0, n_points)


@pytest.fixture(scope="session")
def baseline_solution():
    return solve_radial(BASELINE, BASELINE_FIELD, BASELINE_M, NATURAL, BASELINE_GRID, 4)


@pytest.fixture(scope="session")
def well_posed_solution():
    return solve_radial(WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M, NATURAL, well_posed_grid(8000), 3)
