"""
Resource potentials of a pure state: linear-entropy entanglement E,
anti-flatness F and 2-norm coherence Q.

All functionals take density operators and accept stacks along leading
axes. They are invariant under the global phase of ψ by construction.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from resource_action.errors import BasisError, FactorizationError
from resource_action.quantum.qmath import (
    DephasingBasis,
    HilbertFactorization,
    dephase,
    partial_trace,
    purity,
)
from resource_action.quantum.statefam import densities, density, evolve
from resource_action.utils.helpers import fd_steps

log = logging.getLogger(__name__)


class PotentialKind(str, Enum):
    ENTANGLEMENT = "entanglement"
    ANTIFLATNESS = "antiflatness"
    COHERENCE = "coherence"
    NONE = "none"


@dataclass(frozen=True)
class Bipartition:
    """Split H = H_X ⊗ H_Y; ``keep`` lists the subsystems forming X."""

    factorization: HilbertFactorization
    keep: tuple

    def __post_init__(self):
        object.__setattr__(self, "keep", self.factorization.normalize_keep(self.keep))

    @property
    def complement(self):
        return tuple(i for i in range(self.factorization.n_subsystems) if i not in self.keep)

    def swapped(self):
        """The same split with the roles of X and Y exchanged."""
        return Bipartition(self.factorization, self.complement)

    def reduce(self, rho):
        """ψ_X = tr_Y[ρ]."""
        return partial_trace(rho, self.factorization, self.keep)


@dataclass(frozen=True)
class PotentialSpec:
    """
    Which resource acts as the potential V, plus the structure every resource needs.

    ``bipartition`` is required for entanglement and anti-flatness,
    ``dephasing_basis`` for coherence. Both may be supplied regardless of
    ``kind`` so that all three resources can be accumulated along a path.
    """

    kind: PotentialKind
    bipartition: Bipartition = None
    dephasing_basis: DephasingBasis = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        needs_split = self.kind in (PotentialKind.ENTANGLEMENT, PotentialKind.ANTIFLATNESS)
        if needs_split and self.bipartition is None:
            raise FactorizationError(f"potential {self.kind.value!r} needs a bipartition")
        if self.kind is PotentialKind.COHERENCE and self.dephasing_basis is None:
            raise BasisError("potential 'coherence' needs a dephasing basis")

    def check(self, dim):
        """Validate the spec against a Hilbert-space dimension."""
        if self.bipartition is not None:
            self.bipartition.factorization.check(dim)
        if self.dephasing_basis is not None and self.dephasing_basis.dim != dim:
            raise BasisError(
                f"dephasing basis has dimension {self.dephasing_basis.dim}, states have dimension {dim}"
            )


def _require_bipartition(spec):
    if spec.bipartition is None:
        raise FactorizationError("this resource needs a bipartition")
    return spec.bipartition


def _require_basis(spec):
    if spec.dephasing_basis is None:
        raise BasisError("coherence needs a dephasing basis")
    return spec.dephasing_basis


def entanglement(psi_density, spec):
    """E(ψ) = 1 - tr[ψ_X²]; lies in [0, 1 - 1/d_X] for pure states."""
    reduced = _require_bipartition(spec).reduce(psi_density)
    return 1.0 - purity(reduced)


def antiflatness(psi_density, spec):
    """F(ψ) = tr[ψ_X³] - (tr[ψ_X²])², unnormalized; zero for flat reduced spectra."""
    reduced = _require_bipartition(spec).reduce(psi_density)
    second = purity(reduced)
    third = np.einsum("...ij,...jk,...ki->...", reduced, reduced, reduced).real
    return third - second**2


def coherence(psi_density, spec):
    """Q(ψ) = 1 - Pur[D_B(ψ)], the squared 2-norm coherence of a pure state."""
    return 1.0 - purity(dephase(psi_density, _require_basis(spec)))


_FUNCTIONALS = {
    PotentialKind.ENTANGLEMENT: entanglement,
    PotentialKind.ANTIFLATNESS: antiflatness,
    PotentialKind.COHERENCE: coherence,
}


def potential_of_density(rho, spec):
    """V on density operators (stacks allowed); zero for kind none."""
    if spec.kind is PotentialKind.NONE:
        return np.zeros(np.shape(rho)[:-2])
    return _FUNCTIONALS[spec.kind](rho, spec)


def potential_value(jet, spec):
    """V evaluated on the state carried by ``jet``."""
    return float(potential_of_density(density(jet), spec))


def potential_values(psi, spec):
    """V at a stack of state vectors."""
    if spec.kind is PotentialKind.NONE:
        return np.zeros(np.shape(psi)[:-1])
    return potential_of_density(densities(psi), spec)


def resource_values(psi, spec):
    """
    E, F and Q at a stack of state vectors.

    Resources whose structure is missing from ``spec`` (no bipartition,
    no basis) come back as NaN.
    """
    rho = densities(psi)
    nan = np.full(rho.shape[:-2], np.nan)
    values = {}
    if spec.bipartition is not None:
        values["E"] = entanglement(rho, spec)
        values["F"] = antiflatness(rho, spec)
    else:
        values["E"] = nan
        values["F"] = nan
    values["Q"] = coherence(rho, spec) if spec.dephasing_basis is not None else nan
    return values


def potential_gradient(fam, lam, spec, step=1e-5):
    """
    ∂V/∂λ by central differences with step h_μ = step·max(1, |λ_μ|).

    Returns:
        numpy.ndarray: Gradient of length m.
    """
    lam = fam.check_params(lam)
    h = fd_steps(lam, step)
    shifts = np.diag(h)
    points = np.concatenate([lam + shifts, lam - shifts])
    psi, _ = evolve(fam, points, derivatives=False)
    values = potential_values(psi, spec)
    m = fam.n_params
    return (values[:m] - values[m:]) / (2.0 * h)
