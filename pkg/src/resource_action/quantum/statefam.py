"""Parametrized Hamiltonian families H(λ) = Σ λ_μ G_μ and the evolved states ψ(λ) = exp(iH(λ))|Ω>."""

import logging
from dataclasses import dataclass

import numpy as np

from resource_action.errors import DimensionError, HermiticityError
from resource_action.quantum.qmath import (
    HilbertFactorization,
    as_operator,
    dagger,
    exp_i_hermitian,
    frechet_exp_i,
    kron_all,
)

log = logging.getLogger(__name__)

PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Named reference states
PRESET_STATES = {
    "plus01": np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2),
}


def pauli_string(label, max_dim=None):
    """
    Tensor product of single-qubit Paulis, e.g. "XX" -> X⊗X.

    Raises:
        ValueError: If ``label`` is empty or has a character outside {I, X, Y, Z}.
    """
    label = label.strip().upper()
    if not label or any(c not in PAULI for c in label):
        raise ValueError(f"invalid Pauli string {label!r}; use characters from IXYZ")
    return kron_all([PAULI[c] for c in label], max_dim=max_dim)


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    """
    Linear family of Hermitian generators acting on a fixed reference state.

    Attributes:
        generators (numpy.ndarray): Shape (m, d, d), the G_μ (so ∂_μ H = G_μ).
        reference_state (numpy.ndarray): Unit vector Ω of length d.
        factorization (HilbertFactorization): Local dimensions of the d-dimensional space.
    """

    generators: np.ndarray
    reference_state: np.ndarray
    factorization: HilbertFactorization

    def __post_init__(self):
        generators = as_operator(self.generators, "generators")
        if generators.ndim == 2:
            generators = generators[None]
        if generators.ndim != 3 or generators.shape[0] == 0:
            raise DimensionError("generators must be a non-empty list of square matrices")
        deviation = np.max(np.abs(generators - dagger(generators)))
        if deviation > 1e-10:
            raise HermiticityError(f"generators are not Hermitian (max|G - G†| = {deviation:.3e})")
        generators = 0.5 * (generators + dagger(generators))

        dim = generators.shape[-1]
        omega = np.array(self.reference_state, dtype=complex).reshape(-1)
        if omega.shape[0] != dim:
            raise DimensionError(
                f"reference state has length {omega.shape[0]}, generators have dimension {dim}"
            )
        norm = np.linalg.norm(omega)
        if abs(norm - 1.0) > 1e-12:
            raise DimensionError(f"reference state is not normalized (norm {norm:.15f})")

        fact = self.factorization
        if not isinstance(fact, HilbertFactorization):
            fact = HilbertFactorization(tuple(fact))
        fact.check(dim)

        generators.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "generators", generators)
        object.__setattr__(self, "reference_state", omega)
        object.__setattr__(self, "factorization", fact)

    @classmethod
    def from_pauli(cls, labels, reference_state):
        """Qubit family from Pauli strings such as ["XX", "ZZ"]."""
        generators = np.stack([pauli_string(label) for label in labels])
        n_qubits = len(labels[0].strip())
        return cls(generators, reference_state, HilbertFactorization((2,) * n_qubits))

    @property
    def n_params(self):
        return self.generators.shape[0]

    @property
    def dim(self):
        return self.generators.shape[-1]

    def check_params(self, lam, name="lambda"):
        """Return ``lam`` as a float array of length m, or raise DimensionError."""
        lam = np.asarray(lam, dtype=float)
        if lam.shape[-1:] != (self.n_params,):
            raise DimensionError(f"{name} must have length {self.n_params}, got shape {lam.shape}")
        return lam


@dataclass(frozen=True)
class StateJet:
    """
    State and first derivatives at one parameter point.

    Attributes:
        psi: ψ(λ), unit vector.
        dpsi_dmu: Shape (m, d), the partials ∂_μ ψ.
        psi_prime: ψ' = Σ_μ λ'_μ ∂_μ ψ.
    """

    psi: np.ndarray
    dpsi_dmu: np.ndarray
    psi_prime: np.ndarray


def hamiltonian_at(fam, lam):
    """H(λ) = Σ_μ λ_μ G_μ; accepts a single λ or a stack of shape (n, m)."""
    lam = fam.check_params(lam)
    return np.einsum("...m,mij->...ij", lam.astype(complex), fam.generators)


def evolve(fam, lambdas, derivatives=True):
    """
    Evolve the reference state at a batch of parameter points.

    Args:
        fam (HamiltonianFamily): The family.
        lambdas (array_like): Shape (n, m) or (m,).
        derivatives (bool): Also return the exact partials ∂_μ ψ.

    Returns:
        tuple: ``psi`` with shape (..., d) and, when requested, ``dpsi`` with
        shape (..., m, d); otherwise ``dpsi`` is None.
    """
    h = hamiltonian_at(fam, lambdas)
    omega = fam.reference_state
    psi = exp_i_hermitian(h) @ omega
    if not derivatives:
        return psi, None
    d_unitary = frechet_exp_i(h[..., None, :, :], fam.generators)
    dpsi = d_unitary @ omega
    return psi, dpsi


def state_jet(fam, lam, lam_prime):
    """
    ψ(λ), its parameter partials, and the path derivative ψ' along λ'.

    Raises:
        DimensionError: If λ or λ' does not have length m.
    """
    lam = fam.check_params(lam)
    lam_prime = fam.check_params(lam_prime, "lambda_prime")
    psi, dpsi = evolve(fam, lam)
    psi_prime = np.einsum("m,md->d", lam_prime.astype(complex), dpsi)
    return StateJet(psi=psi, dpsi_dmu=dpsi, psi_prime=psi_prime)


def densities(psi):
    """|ψ><ψ| for a state vector or a stack of state vectors."""
    psi = np.asarray(psi, dtype=complex)
    return np.einsum("...i,...j->...ij", psi, psi.conj())


def density(jet):
    """Rank-one projector |ψ><ψ| of the jet's state."""
    return densities(jet.psi)
