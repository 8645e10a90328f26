"""
Closed forms for the two-qubit family H(θ, φ) = θ X⊗X + φ Z⊗Z acting on
Ω = (|00> + |01>)/√2.

Used as test oracles and to document the bundled configurations. All
functions broadcast over numpy arrays of angles.
"""

import numpy as np

from resource_action.quantum.statefam import PRESET_STATES, HamiltonianFamily

# λ_A = (θ, φ) = (0, 0), λ_B = (π/4, 2π); both endpoint states are separable
TWO_QUBIT_ENDPOINTS = (np.array([0.0, 0.0]), np.array([np.pi / 4, 2 * np.pi]))

# Published (Ē, F̄, Q̄) along the K2 optimal path, keyed by the potential driving it
REFERENCE_ACCUMULATED = {
    "entanglement": {"E": 0.131526, "F": 0.0281002, "Q": 0.631313},
    "antiflatness": {"E": 0.125793, "F": 0.0275045, "Q": 0.62578},
    "coherence": {"E": 0.131308, "F": 0.0280876, "Q": 0.631308},
}


def two_qubit_family():
    return HamiltonianFamily.from_pauli(["XX", "ZZ"], PRESET_STATES["plus01"])


def two_qubit_state(theta, phi):
    """(e^{iφ}cosθ, e^{-iφ}cosθ, i e^{-iφ}sinθ, i e^{iφ}sinθ)/√2, stacked on the last axis."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    up, down = np.exp(1j * phi), np.exp(-1j * phi)
    return np.stack([up * c, down * c, 1j * down * s, 1j * up * s], axis=-1) / np.sqrt(2)


def entanglement_integrand(theta, phi):
    return 0.5 * np.sin(2 * theta) ** 2 * np.sin(2 * phi) ** 2


def antiflatness_integrand(theta, phi):
    s2 = np.sin(2 * theta) ** 2
    return (
        -2 * s2**2 * np.cos(8 * phi)
        - 2 * np.sin(4 * theta) ** 2 * np.cos(4 * phi)
        + s2 * (3 * np.cos(4 * theta) + 5)
    ) / 64


def coherence_integrand(theta, phi=None):
    """Independent of φ; ``phi`` is accepted for a uniform call signature."""
    theta = np.asarray(theta, dtype=float)
    value = (5 - np.cos(4 * theta)) / 8
    if phi is not None:
        value = value + np.zeros_like(np.asarray(phi, dtype=float))
    return value


INTEGRANDS = {
    "entanglement": entanglement_integrand,
    "antiflatness": antiflatness_integrand,
    "coherence": coherence_integrand,
}


def el_residual_k2(kind, theta, phi, theta_pp, phi_pp):
    """
    Euler-Lagrange system of L = θ'² + φ'² - V for the two-qubit family.

    Returns:
        tuple: (θ-equation, φ-equation) residuals; both vanish on a stationary path.

    Raises:
        ValueError: If ``kind`` is not one of the three resources.
    """
    if kind == "entanglement":
        r_theta = np.sin(4 * theta) * np.sin(2 * phi) ** 2 + 2 * theta_pp
        r_phi = np.sin(2 * theta) ** 2 * np.sin(4 * phi) + 2 * phi_pp
    elif kind == "antiflatness":
        s2 = np.sin(2 * theta)
        r_theta = (
            2 * theta_pp
            - 0.25 * s2**3 * np.cos(2 * theta) * np.cos(8 * phi)
            - 0.125 * np.sin(8 * theta) * np.cos(4 * phi)
            + np.sin(4 * theta) / 16
            + 3 * np.sin(8 * theta) / 32
        )
        r_phi = (
            0.25 * s2**4 * np.sin(8 * phi)
            + 0.125 * np.sin(4 * theta) ** 2 * np.sin(4 * phi)
            + 2 * phi_pp
        )
    elif kind == "coherence":
        r_theta = 2 * theta_pp + 0.5 * np.sin(4 * theta)
        r_phi = 2 * phi_pp + 0.0 * theta
    else:
        raise ValueError(f"no closed-form system for potential {kind!r}")
    return r_theta, r_phi


def el_residual_k1_entanglement(theta, phi, theta_p, phi_p, theta_pp, phi_pp):
    """Euler-Lagrange system of L = sqrt(θ'² + φ'²) - E for the two-qubit family."""
    speed3 = (theta_p**2 + phi_p**2) ** 1.5
    r_theta = np.sin(4 * theta) * np.sin(2 * phi) ** 2 + (
        theta_pp * phi_p**2 - theta_p * phi_p * phi_pp
    ) / speed3
    r_phi = np.sin(2 * theta) ** 2 * np.sin(4 * phi) + (
        theta_p**2 * phi_pp - theta_p * theta_pp * phi_p
    ) / speed3
    return r_theta, r_phi
