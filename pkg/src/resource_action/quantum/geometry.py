"""
Fubini-Study kinetic terms and the pulled-back quantum geometric tensor.

For ψ(λ) with partials ∂_iψ:

    <∂_iψ, ∂_jψ> = γ_ij + i σ_ij,    β_i = -i <ψ, ∂_iψ>,    g_ij = γ_ij - β_i β_j

γ and β shift under a λ-dependent phase ψ -> e^{iα(λ)} ψ; g does not.
"""

import logging
from dataclasses import dataclass

import numpy as np

from resource_action.errors import GaugeInvarianceError, SingularMetricError
from resource_action.quantum.statefam import evolve
from resource_action.utils.helpers import fd_steps

log = logging.getLogger(__name__)

# Smallest metric eigenvalue treated as invertible
SINGULAR_EIG_TOL = 1e-8


@dataclass(frozen=True)
class QGTResult:
    """
    Quantum geometric tensor at one parameter point.

    Attributes:
        gamma: m×m real symmetric, Re<∂_iψ, ∂_jψ>.
        sigma: m×m real antisymmetric, Im<∂_iψ, ∂_jψ>.
        beta: m-vector, -i<ψ, ∂_iψ> (real for normalized ψ).
        g: m×m gauge-invariant metric γ - ββᵀ.
    """

    gamma: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    g: np.ndarray


def tensor_parts(psi, dpsi):
    """(γ, σ, β, g) from states of shape (..., d) and partials of shape (..., m, d)."""
    overlaps = np.einsum("...id,...jd->...ij", dpsi.conj(), dpsi)
    connection = -1j * np.einsum("...d,...id->...i", psi.conj(), dpsi)
    leak = float(np.max(np.abs(connection.imag))) if connection.size else 0.0
    if leak > 1e-10:
        log.warning("Connection has an imaginary part of %.3e; state norm is drifting", leak)
    gamma = overlaps.real
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))
    sigma = overlaps.imag
    sigma = 0.5 * (sigma - np.swapaxes(sigma, -1, -2))
    beta = connection.real
    g = gamma - np.einsum("...i,...j->...ij", beta, beta)
    return gamma, sigma, beta, g


def qgt(fam, lam):
    """
    Assemble γ, σ, β and g at λ from the exact state partials.

    Args:
        fam (HamiltonianFamily): The family.
        lam (array_like): Parameter point of length m.

    Returns:
        QGTResult: The tensor and its gauge-dependent pieces.
    """
    lam = fam.check_params(lam)
    psi, dpsi = evolve(fam, lam)
    gamma, sigma, beta, g = tensor_parts(psi, dpsi)
    return QGTResult(gamma=gamma, sigma=sigma, beta=beta, g=g)


def metric_tensors(fam, lambdas):
    """Pulled-back metric g at a stack of parameter points, shape (..., m, m)."""
    lambdas = fam.check_params(lambdas)
    psi, dpsi = evolve(fam, lambdas)
    return tensor_parts(psi, dpsi)[3]


def fs_speed_squared(jet):
    """K2 = <ψ'|(1 - |ψ><ψ|)|ψ'>."""
    norm2 = np.vdot(jet.psi_prime, jet.psi_prime).real
    along = np.vdot(jet.psi, jet.psi_prime)
    return max(0.0, float(norm2 - abs(along) ** 2))


def fs_speed(jet):
    """K1 = sqrt(K2)."""
    return float(np.sqrt(fs_speed_squared(jet)))


@dataclass(frozen=True)
class GaugeReport:
    """Tensor pieces before and after the phase shift, with their worst deviations from the transformation laws."""

    before: QGTResult
    after: QGTResult
    gamma_error: float
    beta_error: float
    g_error: float


def gauge_transform_check(fam, lam, alpha_value, alpha_grad, tol=1e-8):
    """
    Recompute the tensor for the phase-shifted family e^{iα(λ)} ψ(λ) and check
    the transformation laws

        γ'_ij = γ_ij + β_i ∂_jα + β_j ∂_iα + ∂_iα ∂_jα,   β'_i = β_i + ∂_iα,   g' = g

    Args:
        fam (HamiltonianFamily): The family.
        lam (array_like): Parameter point.
        alpha_value (float): α(λ).
        alpha_grad (array_like): ∇α(λ), length m.
        tol (float): Largest tolerated elementwise deviation.

    Returns:
        GaugeReport: Both tensors and the deviations.

    Raises:
        GaugeInvarianceError: If a law fails; carries the offending difference.
    """
    lam = fam.check_params(lam)
    grad = fam.check_params(alpha_grad, "alpha_grad")
    psi, dpsi = evolve(fam, lam)
    before = QGTResult(*tensor_parts(psi, dpsi))

    phase = np.exp(1j * alpha_value)
    psi_t = phase * psi
    dpsi_t = phase * (dpsi + 1j * grad[:, None] * psi[None, :])
    after = QGTResult(*tensor_parts(psi_t, dpsi_t))

    beta = before.beta
    predicted_gamma = (
        before.gamma + np.outer(beta, grad) + np.outer(grad, beta) + np.outer(grad, grad)
    )
    checks = [
        ("gamma", after.gamma - predicted_gamma),
        ("beta", after.beta - (beta + grad)),
        ("g", after.g - before.g),
    ]
    errors = {}
    for name, diff in checks:
        worst = float(np.max(np.abs(diff)))
        errors[name] = worst
        if worst > tol:
            raise GaugeInvarianceError(
                f"{name} violates its gauge transformation law by {worst:.3e} (tolerance {tol:.1e})",
                quantity=name,
                difference=diff,
            )
    return GaugeReport(
        before=before,
        after=after,
        gamma_error=errors["gamma"],
        beta_error=errors["beta"],
        g_error=errors["g"],
    )


def require_invertible(g, lam=None):
    """
    Raise SingularMetricError unless the smallest eigenvalue of g exceeds 1e-8.

    Returns:
        numpy.ndarray: g⁻¹.
    """
    smallest = float(np.linalg.eigvalsh(g)[0])
    if smallest <= SINGULAR_EIG_TOL:
        where = "" if lam is None else f" at lambda = {np.round(lam, 6).tolist()}"
        raise SingularMetricError(
            f"metric is singular{where} (smallest eigenvalue {smallest:.3e}); "
            "a parameter direction only changes the global phase"
        )
    return np.linalg.inv(g)


def christoffel(fam, lam, step=1e-4):
    """
    Γ^a_bc = ½ g^ad (∂_b g_dc + ∂_c g_db - ∂_d g_bc), ∂g by central differences.

    Returns:
        numpy.ndarray: Shape (m, m, m), indexed [a, b, c].

    Raises:
        SingularMetricError: If g is not invertible at λ.
    """
    lam = fam.check_params(lam)
    m = fam.n_params
    h = fd_steps(lam, step)
    shifts = np.diag(h)
    points = np.concatenate([lam[None, :], lam + shifts, lam - shifts])
    metrics = metric_tensors(fam, points)
    g_inv = require_invertible(metrics[0], lam)

    # dg[k, i, j] = ∂_k g_ij
    dg = (metrics[1 : m + 1] - metrics[m + 1 :]) / (2.0 * h[:, None, None])
    lowered = (
        np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    )
    return 0.5 * np.einsum("ad,dbc->abc", g_inv, lowered)
