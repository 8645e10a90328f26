import numpy as np
import pytest

from conftest import random_family
from resource_action.errors import GaugeInvarianceError, SingularMetricError
from resource_action.quantum.geometry import (
    christoffel,
    fs_speed,
    fs_speed_squared,
    gauge_transform_check,
    metric_tensors,
    qgt,
    require_invertible,
)
from resource_action.quantum.qmath import HilbertFactorization
from resource_action.quantum.statefam import PAULI, HamiltonianFamily, state_jet
from resource_action.utils.helpers import fd_steps

KET_0 = np.array([1, 0], dtype=complex)


def _qubit_family(*labels):
    return HamiltonianFamily(np.stack([PAULI[c] for c in labels]), KET_0, HilbertFactorization((2,)))


def test_two_qubit_metric_is_identity(two_qubit, rng):
    for lam in rng.uniform(-np.pi, np.pi, size=(10, 2)):
        tensor = qgt(two_qubit, lam)
        np.testing.assert_allclose(tensor.g, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(tensor.beta, [0.0, 0.0], atol=1e-12)


def test_phase_only_direction_has_zero_metric():
    tensor = qgt(_qubit_family("Z"), [0.8])
    np.testing.assert_allclose(tensor.g, [[0.0]], atol=1e-14)
    np.testing.assert_allclose(tensor.beta, [1.0], atol=1e-14)
    np.testing.assert_allclose(tensor.gamma, [[1.0]], atol=1e-14)


def test_rotation_direction_has_unit_metric():
    tensor = qgt(_qubit_family("X"), [0.0])
    np.testing.assert_allclose(tensor.g, [[1.0]], atol=1e-14)


def test_speeds_on_the_two_qubit_family(two_qubit):
    jet = state_jet(two_qubit, [0.2, 0.9], [1.0, 2.0])
    assert fs_speed_squared(jet) == pytest.approx(5.0, abs=1e-12)
    assert fs_speed(jet) == pytest.approx(np.sqrt(5.0), abs=1e-12)
    jet = state_jet(two_qubit, [0.2, 0.9], [3.0, 4.0])
    assert fs_speed(jet) == pytest.approx(5.0, abs=1e-12)


def test_speed_squared_is_the_metric_quadratic_form(rng):
    fam = random_family(rng, (2, 2), m=3)
    for _ in range(20):
        lam, lam_prime = rng.normal(size=3), rng.normal(size=3)
        g = qgt(fam, lam).g
        jet = state_jet(fam, lam, lam_prime)
        assert fs_speed_squared(jet) == pytest.approx(lam_prime @ g @ lam_prime, abs=1e-10)


def test_tensor_symmetries(rng):
    fam = random_family(rng, (2, 3), m=3)
    for lam in rng.normal(size=(10, 3)):
        tensor = qgt(fam, lam)
        np.testing.assert_allclose(tensor.sigma, -tensor.sigma.T, atol=1e-15)
        np.testing.assert_allclose(tensor.gamma, tensor.gamma.T, atol=1e-15)
        assert np.linalg.eigvalsh(tensor.g)[0] >= -1e-12


def test_metric_tensors_match_pointwise(rng):
    fam = random_family(rng, (2, 2), m=2)
    points = rng.normal(size=(5, 2))
    stacked = metric_tensors(fam, points)
    for lam, g in zip(points, stacked):
        np.testing.assert_allclose(g, qgt(fam, lam).g, atol=1e-13)


# --- gauge transformations ---


def test_trivial_gauge_changes_nothing(two_qubit):
    report = gauge_transform_check(two_qubit, [0.3, 1.2], 0.0, [0.0, 0.0])
    assert report.gamma_error < 1e-14
    np.testing.assert_allclose(report.after.gamma, report.before.gamma, atol=1e-14)


def test_constant_gauge_leaves_every_piece_fixed(two_qubit):
    report = gauge_transform_check(two_qubit, [0.3, 1.2], 2.1, [0.0, 0.0])
    np.testing.assert_allclose(report.after.beta, report.before.beta, atol=1e-14)
    np.testing.assert_allclose(report.after.g, report.before.g, atol=1e-14)


def test_linear_gauge_shifts_connection(two_qubit):
    lam = np.array([0.3, 1.2])
    grad = np.array([0.3, 0.7])
    report = gauge_transform_check(two_qubit, lam, grad @ lam, grad)
    np.testing.assert_allclose(report.after.beta, report.before.beta + grad, atol=1e-12)
    np.testing.assert_allclose(report.after.g, report.before.g, atol=1e-12)
    assert report.g_error < 1e-12


def test_random_gauges_keep_the_metric(rng):
    fam = random_family(rng, (2, 2), m=3)
    for _ in range(100):
        report = gauge_transform_check(fam, rng.normal(size=3), rng.uniform(0, 2 * np.pi), rng.normal(size=3))
        assert max(report.gamma_error, report.beta_error, report.g_error) <= 1e-8


def test_gauge_violation_is_reported(two_qubit):
    with pytest.raises(GaugeInvarianceError) as excinfo:
        gauge_transform_check(two_qubit, [0.3, 1.2], 0.5, [1.0, -1.0], tol=-1.0)
    assert excinfo.value.quantity == "gamma"
    assert excinfo.value.difference.shape == (2, 2)


# --- connection ---


def test_flat_family_has_vanishing_christoffel_symbols(two_qubit):
    gamma = christoffel(two_qubit, [0.4, 2.0])
    assert gamma.shape == (2, 2, 2)
    np.testing.assert_allclose(gamma, 0.0, atol=1e-6)


def test_singular_metric_is_rejected():
    with pytest.raises(SingularMetricError):
        christoffel(_qubit_family("Z"), [0.5])
    with pytest.raises(SingularMetricError):
        require_invertible(np.diag([1.0, 1e-9]))


def test_connection_is_metric_compatible():
    fam = _qubit_family("X", "Z")
    lam = np.array([0.7, 0.4])
    step = 1e-4
    g = qgt(fam, lam).g
    assert np.linalg.eigvalsh(g)[0] > 1e-4

    gamma = christoffel(fam, lam, step)
    h = fd_steps(lam, step)
    shifts = np.diag(h)
    dg = (metric_tensors(fam, lam + shifts) - metric_tensors(fam, lam - shifts)) / (2 * h[:, None, None])
    # ∂_c g_ab = Γ^d_ca g_db + Γ^d_cb g_ad
    transported = np.einsum("dca,db->cab", gamma, g) + np.einsum("dcb,ad->cab", gamma, g)
    np.testing.assert_allclose(transported, dg, atol=1e-6)
    np.testing.assert_allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-10)
