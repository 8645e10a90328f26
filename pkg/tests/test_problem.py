import logging

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import two_qubit_problem
from resource_action.errors import ConfigError, DimensionError, FactorizationError, GridError
from resource_action.quantum.qmath import DephasingBasis, HilbertFactorization
from resource_action.quantum.reference import (
    TWO_QUBIT_ENDPOINTS,
    coherence_integrand,
    el_residual_k2,
    entanglement_integrand,
    two_qubit_family,
)
from resource_action.quantum.resources import Bipartition, PotentialSpec
from resource_action.quantum.statefam import PAULI, HamiltonianFamily
from resource_action.solver.problem import (
    ActionProblem,
    Path,
    SolverSettings,
    accumulate,
    action,
    build_result,
    derivative_matrix,
    el_residual,
    fd_weights,
    lagrangian,
    lagrangian_batch,
    node_velocities,
    residual_max,
)

DELTA = TWO_QUBIT_ENDPOINTS[1] - TWO_QUBIT_ENDPOINTS[0]


def _straight_line_integral(integrand):
    return quad(lambda s: float(integrand(DELTA[0] * s, DELTA[1] * s)), 0.0, 1.0, limit=200, epsabs=1e-13)[0]


def _qubit_problem(kinetic="K2", lambda_B=(1.0,)):
    fam = HamiltonianFamily(PAULI["X"][None], [1, 0], HilbertFactorization((2,)))
    spec = PotentialSpec("coherence", dephasing_basis=DephasingBasis.computational(2))
    return ActionProblem(fam, kinetic, spec, [0.0], lambda_B)


# --- problem and path types ---


def test_problem_validation():
    with pytest.raises(DimensionError):
        two_qubit_problem(lambda_A=[0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        two_qubit_problem(kinetic="K3")
    wrong = PotentialSpec("entanglement", Bipartition(HilbertFactorization((2, 4)), (0,)))
    with pytest.raises(FactorizationError):
        ActionProblem(two_qubit_family(), "K2", wrong, [0, 0], [1, 1])


def test_path_validation():
    with pytest.raises(GridError):
        Path(np.zeros((8, 2)))
    with pytest.raises(GridError):
        Path(np.zeros(20))
    path = Path(np.zeros((9, 2)))
    assert path.n == 8
    with pytest.raises(ValueError):
        path.nodes[0, 0] = 1.0


def test_straight_line_is_pinned():
    problem = two_qubit_problem()
    path = Path.straight_line(problem, 64)
    path.check_pinned(problem)
    np.testing.assert_allclose(path.nodes[32], 0.5 * DELTA, atol=1e-15)

    moved = path.nodes.copy()
    moved[-1, 0] += 1e-12
    with pytest.raises(GridError):
        Path(moved).check_pinned(problem)


def test_resampling_keeps_endpoints_and_lines():
    problem = two_qubit_problem()
    path = Path.straight_line(problem, 64).resampled(100)
    assert path.n == 100
    path.check_pinned(problem)
    np.testing.assert_allclose(path.nodes, Path.straight_line(problem, 100).nodes, atol=1e-14)


def test_solver_settings_validation():
    assert SolverSettings().grid_n == 400
    with pytest.raises(ConfigError, match="solver.method"):
        SolverSettings(method="gradient")
    with pytest.raises(ConfigError, match="solver.grid_n"):
        SolverSettings(grid_n=4)
    with pytest.raises(ConfigError, match="solver.restarts"):
        SolverSettings(restarts=2.5)
    with pytest.raises(ConfigError, match="solver.rtol"):
        SolverSettings(rtol=0.0)


# --- Lagrangian ---


def test_lagrangian_examples():
    lam, vel = [np.pi / 8, np.pi / 4], [1.0, 2.0]
    assert lagrangian(two_qubit_problem(), lam, vel) == pytest.approx(5.0 - 0.25, abs=1e-12)
    assert lagrangian(two_qubit_problem(kinetic="K1"), lam, vel) == pytest.approx(np.sqrt(5.0) - 0.25, abs=1e-12)
    assert lagrangian(two_qubit_problem("none"), lam, vel) == pytest.approx(5.0, abs=1e-12)


def test_batch_matches_pointwise(rng):
    for kinetic in ("K1", "K2"):
        problem = two_qubit_problem("antiflatness", kinetic)
        lambdas, velocities = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
        values, kinetic_part, potential_part = lagrangian_batch(problem, lambdas, velocities)
        for k in range(6):
            assert values[k] == pytest.approx(lagrangian(problem, lambdas[k], velocities[k]), abs=1e-12)
        np.testing.assert_allclose(values, kinetic_part - potential_part, atol=1e-15)


# --- stencils ---


def test_fd_weights_reproduce_classic_stencils():
    np.testing.assert_allclose(fd_weights([-2, -1, 0, 1, 2]), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12], atol=1e-13)
    np.testing.assert_allclose(
        fd_weights([-2, -1, 0, 1, 2], derivative=2), [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12], atol=1e-12
    )
    np.testing.assert_allclose(fd_weights([0, 1]), [-1, 1], atol=1e-15)


def test_derivative_matrix_is_exact_on_quartics():
    n = 16
    s = np.linspace(0, 1, n + 1)
    d = derivative_matrix(n)
    np.testing.assert_allclose(d @ (s**4 - 2 * s**3 + s), 4 * s**3 - 6 * s**2 + 1, atol=1e-10)
    with pytest.raises(GridError):
        derivative_matrix(3)


def test_node_velocities_of_straight_line():
    path = Path.straight_line(two_qubit_problem(), 32)
    np.testing.assert_allclose(node_velocities(path), np.tile(DELTA, (33, 1)), atol=1e-10)


# --- action ---


def test_geodesic_action_of_straight_line():
    squared = float(DELTA @ DELTA)
    path = Path.straight_line(two_qubit_problem("none"), 64)
    assert action(two_qubit_problem("none"), path) == pytest.approx(squared, rel=1e-10)
    assert action(two_qubit_problem("none", "K1"), path) == pytest.approx(np.sqrt(squared), rel=1e-10)


def test_action_of_straight_line_with_potential():
    problem = two_qubit_problem("entanglement")
    expected = float(DELTA @ DELTA) - _straight_line_integral(entanglement_integrand)
    assert action(problem, Path.straight_line(problem, 400)) == pytest.approx(expected, abs=1e-6)


def test_action_converges_under_refinement():
    problem = two_qubit_problem("coherence")
    coarse = action(problem, Path.straight_line(problem, 200))
    fine = action(problem, Path.straight_line(problem, 400))
    assert coarse == pytest.approx(fine, abs=1e-6)


# --- Euler-Lagrange residual ---


def test_straight_geodesic_has_zero_residual():
    problem = two_qubit_problem("none")
    residual = el_residual(problem, Path.straight_line(problem, 64))
    assert residual.shape == (63, 2)
    assert residual_max(residual) < 1e-6


def test_residual_matches_closed_form_on_straight_line():
    problem = two_qubit_problem("entanglement")
    path = Path.straight_line(problem, 64)
    residual = el_residual(problem, path)
    theta, phi = path.nodes[1:-1, 0], path.nodes[1:-1, 1]
    zero = np.zeros_like(theta)
    expected = np.stack(el_residual_k2("entanglement", theta, phi, zero, zero), axis=1)
    np.testing.assert_allclose(residual, expected, atol=1e-6)


def test_k1_residual_along_the_velocity_is_the_potential_rate():
    # K1 is blind to reparametrization, so λ'·r reduces to dV/ds on any path
    problem = two_qubit_problem("entanglement", "K1")
    path = Path.straight_line(problem, 64)
    along = np.einsum("ki,ki->k", node_velocities(path)[1:-1], el_residual(problem, path))
    theta, phi = path.nodes[1:-1, 0], path.nodes[1:-1, 1]
    rate = DELTA[0] * np.sin(4 * theta) * np.sin(2 * phi) ** 2 + DELTA[1] * np.sin(2 * theta) ** 2 * np.sin(4 * phi)
    np.testing.assert_allclose(along, rate, atol=1e-5)


def test_k1_rest_points_are_flagged(caplog):
    problem = two_qubit_problem("entanglement", "K1", lambda_B=[0.0, 0.0])
    with caplog.at_level(logging.WARNING):
        residual = el_residual(problem, Path.straight_line(problem, 16))
    assert np.all(np.isnan(residual))
    assert np.isnan(residual_max(residual))
    assert "residual undefined" in caplog.text


def test_residual_max_ignores_flagged_rows():
    residual = np.array([[np.nan, np.nan], [0.5, -2.0], [1.0, 0.0]])
    assert residual_max(residual) == 2.0


# --- accumulated resources ---


def test_accumulation_along_straight_line():
    problem = two_qubit_problem()
    totals = accumulate(problem, Path.straight_line(problem, 400))
    assert totals["E"] == pytest.approx(_straight_line_integral(entanglement_integrand), abs=1e-7)
    assert totals["Q"] == pytest.approx(_straight_line_integral(coherence_integrand), abs=1e-7)
    assert totals["F"] >= 0.0


def test_single_subsystem_accumulation_reports_nan():
    problem = _qubit_problem()
    totals = accumulate(problem, Path.straight_line(problem, 64))
    assert np.isnan(totals["E"]) and np.isnan(totals["F"])
    assert totals["Q"] == pytest.approx(0.25 - np.sin(4.0) / 16, abs=1e-6)


def test_build_result_of_straight_line():
    problem = two_qubit_problem("coherence")
    path = Path.straight_line(problem, 64)
    result = build_result(problem, path, "transcription", 0, True, SolverSettings())
    assert result.accumulated == result.baseline
    assert result.action == pytest.approx(action(problem, path))
    assert result.el_residual.shape == (63, 2)
    assert result.el_residual_max == pytest.approx(residual_max(result.el_residual))


def test_build_result_rejects_unpinned_paths():
    problem = two_qubit_problem()
    nodes = Path.straight_line(problem, 64).nodes.copy()
    nodes[0] += 0.1
    with pytest.raises(GridError):
        build_result(problem, Path(nodes), "transcription", 0, True, SolverSettings())
