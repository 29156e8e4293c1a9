import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from conftest import (
    BASELINE,
    BASELINE_FIELD,
    BASELINE_GRID,
    BASELINE_M,
    NATURAL,
    WELL_POSED,
    WELL_POSED_ENERGIES,
    WELL_POSED_FIELD,
    WELL_POSED_M,
    well_posed_grid,
)
from pdm_hulthen.core import FieldConfig, ModelParams
from pdm_hulthen.errors import InvalidQ, NonMonotoneRefinement, OutOfDomain
from pdm_hulthen.oracle import (
    RadialGrid,
    b_inner,
    build_sl_problem,
    convergence_study,
    count_nodes,
    default_grid,
    drift_coefficient,
    free_particle_problem,
    integrating_factor,
    log_integrating_factor,
    residual_norm,
    richardson_order,
    richardson_orders,
    solve_eigenproblem,
    solve_radial,
)


# -- grid ------------------------------------------------------------------

def test_grid_spacing_and_nodes():
    g = RadialGrid(1.0, 2.0, 21)
    assert g.h == pytest.approx(0.05)
    assert g.nodes[0] == 1.0 and g.nodes[-1] == pytest.approx(2.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(0.0, 1.0, 15)
    with pytest.raises(ValueError):
        RadialGrid(1.0, 1.0, 100)


def test_extended_grid_keeps_spacing():
    g = RadialGrid(1e-3, 600.0, 4000)
    e = g.with_spacing_extended(1.5)
    assert e.h == pytest.approx(g.h, rel=1e-12)
    assert e.rho_max >= 1.5 * 600.0 - 1.5 * 1e-3 - 1e-9


def test_default_grid_respects_singularity():
    p = replace(BASELINE, q=3.0)
    g = default_grid(p, 100)
    assert g.rho_min > math.log(3.0) / p.lam
    assert g.rho_max == pytest.approx(600.0)


# -- integrating factor ----------------------------------------------------

def test_integrating_factor_hand_value():
    p = ModelParams(1.0, 0.0, 1.0, 1.0, 1.0)
    assert integrating_factor(math.log(2.0), p) == pytest.approx(0.25, rel=1e-14)


def test_integrating_factor_identically_one_for_q_minus_one():
    p = replace(BASELINE, q=-1.0)
    assert np.all(integrating_factor(np.linspace(1e-3, 600, 1001), p) == 1.0)


def test_integrating_factor_rejects_q_zero():
    with pytest.raises(InvalidQ):
        integrating_factor(1.0, replace(BASELINE, q=0.0))


@settings(max_examples=200)
@given(st.floats(-3.0, 4.0).filter(lambda q: abs(q) > 1e-2), st.floats(0.05, 3.0), st.floats(1e-2, 40.0))
def test_log_derivative_of_mu_is_drift(q, lam, x):
    p = ModelParams(1.0, 0.0, lam, q, 1.0)
    singular = math.log(q) / lam if q > 0 else -math.inf
    rho = max(singular, 0.0) + x / lam
    h = 1e-4 * min(1.0 / lam, rho - singular)
    num = (log_integrating_factor(rho + h, p) - log_integrating_factor(rho - h, p)) / (2 * h)
    exact = drift_coefficient(rho, p)
    if exact != 0.0:
        assert abs(num - exact) <= 1e-6 * abs(exact)


def test_log_integrating_factor_matches_direct_form():
    rho = np.linspace(0.5, 20.0, 50)
    np.testing.assert_allclose(np.exp(log_integrating_factor(rho, BASELINE)), integrating_factor(rho, BASELINE),
                               rtol=1e-13)


# -- Sturm-Liouville build -------------------------------------------------

def test_q_minus_one_gives_plain_laplacian():
    p = replace(BASELINE, q=-1.0)
    slp = build_sl_problem(p, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID)
    _, off, _ = slp.matrices()
    np.testing.assert_array_equal(off, np.full(off.shape, -1.0 / BASELINE_GRID.h ** 2))


def test_operator_symmetric_by_construction():
    small = build_sl_problem(BASELINE, BASELINE_FIELD, 0, NATURAL, RadialGrid(1e-3, 600.0, 40))
    d, o, _ = small.matrices()
    a = np.diag(d) + np.diag(o, 1) + np.diag(o, -1)
    assert np.max(np.abs(a - a.T)) == 0.0


def test_weight_positive_on_baseline():
    slp = build_sl_problem(BASELINE, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID)
    assert np.all(slp.weight[1:-1] > 0) and np.all(slp.mu > 0)


def test_build_rejects_grid_inside_singularity():
    p = replace(BASELINE, q=3.0)
    with pytest.raises(OutOfDomain):
        build_sl_problem(p, BASELINE_FIELD, 0, NATURAL, RadialGrid(5.0, 100.0, 100))


# -- eigensolver -----------------------------------------------------------

def free_grid(n):
    return RadialGrid(0.0, math.pi, n)


def test_free_particle_spectrum():
    sol = solve_eigenproblem(free_particle_problem(RadialGrid(0.0, math.pi, 2000)), 3)
    np.testing.assert_allclose(sol.eigenvalues, [1.0, 4.0, 9.0], rtol=5e-3)


def test_free_particle_order():
    orders = richardson_orders(lambda n: solve_eigenproblem(free_particle_problem(free_grid(n)), 3).eigenvalues,
                               [500, 999, 1997], lambda n: free_grid(n).h)
    np.testing.assert_allclose(orders, 2.0, atol=0.1)


def test_solver_matches_lapack():
    slp = build_sl_problem(WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M, NATURAL, well_posed_grid(1500))
    diag, off, w = slp.matrices()
    s = 1.0 / np.sqrt(w)
    ref = eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:], select="i", select_range=(0, 4))[0]
    sol = solve_eigenproblem(slp, 5)
    np.testing.assert_allclose(sol.eigenvalues, ref, rtol=1e-12, atol=1e-12)


def test_eigenvalues_sorted_and_vectors_normalized(well_posed_solution):
    sol = well_posed_solution
    assert np.all(np.diff(sol.eigenvalues) > 0)
    slp = build_sl_problem(WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M, NATURAL, sol.grid)
    for v in sol.eigenvectors:
        assert b_inner(slp, v, v) == pytest.approx(1.0, rel=1e-12)
        assert v[0] == 0.0 and v[-1] == 0.0
        assert v[np.argmax(np.abs(v))] > 0


def test_well_posed_energies(well_posed_solution):
    np.testing.assert_allclose(well_posed_solution.eigenvalues, WELL_POSED_ENERGIES, rtol=2e-4)


def test_node_counts_baseline(baseline_solution):
    assert [count_nodes(v) for v in baseline_solution.eigenvectors] == [0, 1, 2, 3]


def test_node_counts_up_to_five():
    sol = solve_radial(WELL_POSED, WELL_POSED_FIELD, 0, NATURAL, well_posed_grid(3000), 6)
    assert [count_nodes(v) for v in sol.eigenvectors] == list(range(6))


def test_b_orthogonality(baseline_solution):
    slp = build_sl_problem(BASELINE, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID)
    vecs = baseline_solution.eigenvectors
    for i in range(len(vecs)):
        for j in range(i):
            assert abs(b_inner(slp, vecs[i], vecs[j])) < 1e-10


def test_rho_max_stability_baseline(baseline_solution):
    ext = solve_radial(BASELINE, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID.with_spacing_extended(1.5), 4)
    rel = np.abs(ext.eigenvalues - baseline_solution.eigenvalues) / np.abs(baseline_solution.eigenvalues)
    assert np.all(rel < 1e-6)


def test_well_posed_convergence_order():
    orders = convergence_study(WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M, NATURAL, [1000, 1999, 3997],
                               levels=3, rho_min=1e-3, rho_max=40.0)
    np.testing.assert_allclose(orders, 2.0, atol=0.3)


@pytest.mark.xfail(strict=True, reason="baseline eigenvalues scale like 1/h (inverse-square collapse at the inner edge)")
def test_baseline_convergence_order():
    orders = convergence_study(BASELINE, BASELINE_FIELD, BASELINE_M, NATURAL, [4000, 7999, 15997],
                               levels=3, rho_min=1e-3, rho_max=600.0)
    np.testing.assert_allclose(orders, 2.0, atol=0.3)


def test_convergence_study_requires_doubling():
    with pytest.raises(ValueError):
        convergence_study(WELL_POSED, WELL_POSED_FIELD, 0, NATURAL, [1000, 1500, 3000])
    with pytest.raises(ValueError):
        convergence_study(WELL_POSED, WELL_POSED_FIELD, 0, NATURAL, [1000, 2000])


def test_richardson_order_exact_power_law():
    hs = [0.1, 0.05, 0.025]
    assert richardson_order(hs, [1 + 3 * h ** 2 for h in hs]) == pytest.approx(2.0, abs=1e-9)
    assert richardson_order(hs, [1 + 3 / h for h in hs]) == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(NonMonotoneRefinement):
        richardson_order(hs, [1.0, 2.0, 1.0])


# -- residual and nodes ----------------------------------------------------

def test_residual_of_zero_is_zero():
    assert residual_norm(-1.0, np.zeros(BASELINE_GRID.n_points), BASELINE, BASELINE_FIELD, 0, NATURAL,
                         BASELINE_GRID) == 0.0


def test_residual_small_for_oracle_pair_on_fine_grid():
    g = well_posed_grid(16000)
    sol = solve_radial(WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M, NATURAL, g, 1)
    r = residual_norm(sol.eigenvalues[0], sol.eigenvectors[0], WELL_POSED, WELL_POSED_FIELD, WELL_POSED_M,
                      NATURAL, g)
    perturbed = residual_norm(1.01 * sol.eigenvalues[0], sol.eigenvectors[0], WELL_POSED, WELL_POSED_FIELD,
                              WELL_POSED_M, NATURAL, g)
    assert r < 5e-3
    assert perturbed >= 10 * r


@pytest.mark.xfail(strict=True, reason="baseline oracle pairs do not converge, residual stays O(10)")
def test_baseline_oracle_residual(baseline_solution):
    r = residual_norm(baseline_solution.eigenvalues[0], baseline_solution.eigenvectors[0], BASELINE,
                      BASELINE_FIELD, 0, NATURAL, BASELINE_GRID)
    assert r < 1e-4


@pytest.mark.xfail(strict=True, reason="baseline discretization residual dominates a 1% energy shift")
def test_baseline_residual_sensitivity(baseline_solution):
    e, v = baseline_solution.eigenvalues[0], baseline_solution.eigenvectors[0]
    r = residual_norm(e, v, BASELINE, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID)
    assert residual_norm(1.01 * e, v, BASELINE, BASELINE_FIELD, 0, NATURAL, BASELINE_GRID) >= 10 * r


def test_count_nodes_basic():
    assert count_nodes(np.ones(10)) == 0
    x = np.linspace(0, np.pi, 101)[1:-1]
    assert count_nodes(np.sin(2 * x)) == 1
    assert count_nodes(np.array([1.0, 1e-14, -1e-14, 1.0])) == 0
    assert count_nodes(np.zeros(5)) == 0
