import numpy as np
import pytest
import sympy

from conftest import random_state, two_qubit_spec
from resource_action.errors import BasisError, FactorizationError
from resource_action.quantum.qmath import DephasingBasis, HilbertFactorization
from resource_action.quantum.reference import (
    antiflatness_integrand,
    coherence_integrand,
    entanglement_integrand,
    two_qubit_state,
)
from resource_action.quantum.resources import (
    Bipartition,
    PotentialKind,
    PotentialSpec,
    antiflatness,
    coherence,
    entanglement,
    potential_gradient,
    potential_value,
    potential_values,
    resource_values,
)
from resource_action.quantum.statefam import densities, state_jet

THETA, PHI = sympy.symbols("theta phi")
CLOSED_FORMS = {
    "entanglement": sympy.sin(2 * THETA) ** 2 * sympy.sin(2 * PHI) ** 2 / 2,
    "antiflatness": (
        -2 * sympy.sin(2 * THETA) ** 4 * sympy.cos(8 * PHI)
        - 2 * sympy.sin(4 * THETA) ** 2 * sympy.cos(4 * PHI)
        + sympy.sin(2 * THETA) ** 2 * (3 * sympy.cos(4 * THETA) + 5)
    )
    / 64,
    "coherence": (5 - sympy.cos(4 * THETA)) / 8,
}


def _rho(theta, phi):
    return densities(two_qubit_state(theta, phi))


def _full_spec(dims, kind="entanglement", keep=(0,)):
    fact = HilbertFactorization(dims)
    return PotentialSpec(kind, Bipartition(fact, keep), DephasingBasis.computational(fact.dim))


# --- values ---


def test_entanglement_examples():
    spec = two_qubit_spec("entanglement")
    assert entanglement(_rho(0.0, 0.0), spec) == pytest.approx(0.0, abs=1e-15)
    assert entanglement(_rho(np.pi / 8, np.pi / 4), spec) == pytest.approx(0.25, abs=1e-14)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert entanglement(densities(bell), spec) == pytest.approx(0.5, abs=1e-15)


def test_antiflatness_examples():
    spec = two_qubit_spec("antiflatness")
    theta = phi = np.pi / 8
    assert antiflatness(_rho(theta, phi), spec) == pytest.approx(
        float(antiflatness_integrand(theta, phi)), abs=1e-14
    )
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert antiflatness(densities(bell), spec) == pytest.approx(0.0, abs=1e-15)
    assert antiflatness(_rho(0.0, 0.3), spec) == pytest.approx(0.0, abs=1e-15)


def test_coherence_examples():
    spec = two_qubit_spec("coherence")
    assert coherence(_rho(np.pi / 4, 0.9), spec) == pytest.approx(0.75, abs=1e-14)
    assert coherence(_rho(0.0, 0.0), spec) == pytest.approx(0.5, abs=1e-15)
    uniform = np.full(4, 0.5)
    assert coherence(densities(uniform), spec) == pytest.approx(0.75, abs=1e-15)
    assert coherence(densities(np.eye(4)[2]), spec) == pytest.approx(0.0, abs=1e-15)


def test_functionals_match_closed_forms_on_a_grid():
    theta, phi = np.meshgrid(np.linspace(-np.pi, np.pi, 50), np.linspace(0, 2 * np.pi, 50))
    rho = _rho(theta, phi)
    spec = two_qubit_spec("entanglement")
    np.testing.assert_allclose(entanglement(rho, spec), entanglement_integrand(theta, phi), atol=1e-12)
    np.testing.assert_allclose(antiflatness(rho, spec), antiflatness_integrand(theta, phi), atol=1e-12)
    np.testing.assert_allclose(coherence(rho, spec), coherence_integrand(theta, phi), atol=1e-12)


def test_potential_value_uses_the_jet_state(two_qubit):
    jet = state_jet(two_qubit, [np.pi / 8, np.pi / 4], [1.0, 1.0])
    assert potential_value(jet, two_qubit_spec("entanglement")) == pytest.approx(0.25, abs=1e-14)
    assert potential_value(jet, two_qubit_spec("none")) == 0.0


# --- invariances and bounds ---


def test_values_ignore_global_phase(rng):
    spec = _full_spec((2, 3))
    psi = random_state(rng, 6)
    shifted = np.exp(1.3j) * psi
    for functional in (entanglement, antiflatness, coherence):
        assert functional(densities(shifted), spec) == pytest.approx(
            functional(densities(psi), spec), abs=1e-14
        )


def test_entanglement_and_antiflatness_are_symmetric_under_swap(rng):
    spec = _full_spec((2, 3))
    swapped = PotentialSpec("entanglement", spec.bipartition.swapped(), spec.dephasing_basis)
    for _ in range(20):
        rho = densities(random_state(rng, 6))
        assert entanglement(rho, spec) == pytest.approx(entanglement(rho, swapped), abs=1e-13)
        assert antiflatness(rho, spec) == pytest.approx(antiflatness(rho, swapped), abs=1e-13)


def test_resources_stay_in_range(rng):
    spec = _full_spec((2, 3, 2), keep=(1,))
    states = np.stack([random_state(rng, 12) for _ in range(200)])
    values = resource_values(states, spec)
    assert np.all(values["E"] >= -1e-14)
    assert np.all(values["E"] <= 1 - 1 / 3 + 1e-14)
    assert np.all(values["F"] >= -1e-14)
    assert np.all(values["Q"] >= -1e-14)
    assert np.all(values["Q"] <= 1 - 1 / 12 + 1e-14)


def test_coherence_vanishes_only_on_basis_states(rng):
    basis_vectors = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0].T
    spec = PotentialSpec("coherence", dephasing_basis=DephasingBasis.from_vectors(basis_vectors))
    for k in range(3):
        assert coherence(densities(basis_vectors[k]), spec) == pytest.approx(0.0, abs=1e-13)
    assert coherence(densities(np.eye(3)[0]), spec) > 1e-3


# --- stacks, dispatch, missing structure ---


def test_potential_values_on_stacks():
    spec = two_qubit_spec("coherence")
    thetas = np.linspace(0, np.pi, 7)
    psi = two_qubit_state(thetas, np.zeros_like(thetas))
    np.testing.assert_allclose(potential_values(psi, spec), coherence_integrand(thetas), atol=1e-14)
    np.testing.assert_array_equal(potential_values(psi, two_qubit_spec("none")), np.zeros(7))


def test_single_subsystem_reports_nan_for_bipartite_resources(rng):
    spec = PotentialSpec("coherence", dephasing_basis=DephasingBasis.computational(3))
    values = resource_values(random_state(rng, 3)[None], spec)
    assert np.isnan(values["E"][0])
    assert np.isnan(values["F"][0])
    assert np.isfinite(values["Q"][0])


def test_potential_spec_validation():
    fact = HilbertFactorization((2, 2))
    with pytest.raises(FactorizationError):
        PotentialSpec("entanglement")
    with pytest.raises(FactorizationError):
        PotentialSpec("antiflatness", dephasing_basis=DephasingBasis.computational(4))
    with pytest.raises(BasisError):
        PotentialSpec("coherence", Bipartition(fact, (0,)))
    with pytest.raises(ValueError):
        PotentialSpec("magic", Bipartition(fact, (0,)))
    with pytest.raises(FactorizationError):
        Bipartition(fact, (0, 1))
    with pytest.raises(FactorizationError):
        PotentialSpec("entanglement", Bipartition(fact, (0,))).check(8)
    with pytest.raises(BasisError):
        PotentialSpec("coherence", dephasing_basis=DephasingBasis.computational(2)).check(4)
    assert PotentialSpec("none").kind is PotentialKind.NONE


# --- gradients ---


def test_entanglement_gradient_example(two_qubit):
    grad = potential_gradient(two_qubit, [np.pi / 8, np.pi / 4], two_qubit_spec("entanglement"))
    np.testing.assert_allclose(grad, [1.0, 0.0], atol=1e-8)


@pytest.mark.parametrize("kind", ["entanglement", "antiflatness", "coherence"])
def test_gradients_match_analytic_derivatives(two_qubit, kind):
    expr = CLOSED_FORMS[kind]
    d_theta = sympy.lambdify((THETA, PHI), sympy.diff(expr, THETA), "numpy")
    d_phi = sympy.lambdify((THETA, PHI), sympy.diff(expr, PHI), "numpy")
    spec = two_qubit_spec(kind)
    for theta in np.linspace(0, np.pi / 2, 20):
        for phi in np.linspace(0, 2 * np.pi, 20):
            grad = potential_gradient(two_qubit, [theta, phi], spec)
            expected = [float(d_theta(theta, phi)), float(d_phi(theta, phi))]
            np.testing.assert_allclose(grad, expected, atol=1e-6)


def test_gradient_of_zero_potential(two_qubit):
    grad = potential_gradient(two_qubit, [0.3, 0.4], two_qubit_spec("none"))
    np.testing.assert_array_equal(grad, [0.0, 0.0])
