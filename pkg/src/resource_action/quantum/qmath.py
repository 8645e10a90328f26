"""
Dense complex linear algebra for small Hilbert spaces.

Every operator is a ``numpy.ndarray`` of dtype complex128 whose last two axes
are square. Functions accept stacks of operators along leading axes, so a
whole grid of parameter points can be pushed through one call.

Sign convention: ``exp_i_hermitian(H)`` returns exp(+iH). Most libraries
(and most physics texts) evolve with exp(-iHt); here U(λ) = exp(+iH(λ))
because that is how the state family is defined.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from resource_action.errors import (
    BasisError,
    DimensionError,
    FactorizationError,
    HermiticityError,
    NumericalError,
)

log = logging.getLogger(__name__)

# Deviation thresholds for Hermiticity checks
HERMITIAN_SILENT_TOL = 1e-12
HERMITIAN_HARD_TOL = 1e-8

DEFAULT_MAX_DIM = 64
_max_dim = DEFAULT_MAX_DIM


def set_max_dim(max_dim):
    """Set the largest Hilbert-space dimension the dense backend accepts."""
    global _max_dim
    if int(max_dim) < 1:
        raise DimensionError(f"max_dim must be positive, got {max_dim}")
    _max_dim = int(max_dim)


def get_max_dim():
    """Return the largest Hilbert-space dimension the dense backend accepts."""
    return _max_dim


def as_operator(a, name="operator"):
    """
    Coerce ``a`` to a complex array whose last two axes are square.

    Raises:
        DimensionError: If ``a`` is not (a stack of) square matrices.
    """
    arr = np.asarray(a, dtype=complex)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def dagger(a):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a, name="operator"):
    """
    Return (A + A†)/2 after checking that A is Hermitian up to roundoff.

    Deviations up to 1e-12 are repaired silently, up to 1e-8 with a warning;
    anything larger is a hard error.

    Raises:
        HermiticityError: If max|A - A†| exceeds 1e-8.
    """
    arr = as_operator(a, name)
    deviation = float(np.max(np.abs(arr - dagger(arr)))) if arr.size else 0.0
    if deviation > HERMITIAN_HARD_TOL:
        raise HermiticityError(
            f"{name} is not Hermitian (max|A - A†| = {deviation:.3e})"
        )
    if deviation > HERMITIAN_SILENT_TOL:
        log.warning("Symmetrizing %s (max|A - A†| = %.3e)", name, deviation)
    return 0.5 * (arr + dagger(arr))


def is_hermitian(a, tol=1e-10):
    """True when max|A - A†| <= tol."""
    arr = as_operator(a)
    return bool(np.max(np.abs(arr - dagger(arr))) <= tol)


@dataclass(frozen=True)
class HilbertFactorization:
    """
    Ordered local dimensions of a tensor-product Hilbert space.

    Subsystem 0 is the most significant index, matching ``kron``.
    """

    subsystem_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 1 for d in dims):
            raise FactorizationError(
                f"subsystem dimensions must be positive integers, got {self.subsystem_dims}"
            )
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self):
        return int(np.prod(self.subsystem_dims))

    @property
    def n_subsystems(self):
        return len(self.subsystem_dims)

    def check(self, dim):
        """Raise FactorizationError unless the product of local dimensions equals ``dim``."""
        if self.dim != dim:
            raise FactorizationError(
                f"factorization {list(self.subsystem_dims)} has dimension {self.dim}, "
                f"operator has dimension {dim}"
            )

    def normalize_keep(self, keep):
        """
        Validate a set of kept subsystem indices and return it sorted.

        Raises:
            FactorizationError: If ``keep`` is empty, covers every subsystem,
                or names an index out of range.
        """
        kept = sorted({int(k) for k in keep})
        if not kept:
            raise FactorizationError("bipartition keeps no subsystem")
        if len(kept) == self.n_subsystems:
            raise FactorizationError("bipartition keeps every subsystem")
        if kept[0] < 0 or kept[-1] >= self.n_subsystems:
            raise FactorizationError(
                f"subsystem index out of range in {kept} for {self.n_subsystems} subsystems"
            )
        return tuple(kept)

    def kept_dim(self, keep):
        return int(np.prod([self.subsystem_dims[k] for k in keep]))


def kron(a, b, max_dim=None):
    """
    Kronecker product with the first factor as the most significant index.

    Raises:
        DimensionError: If dim(a)·dim(b) exceeds the dense-backend maximum.
    """
    a = as_operator(a, "a")
    b = as_operator(b, "b")
    limit = _max_dim if max_dim is None else max_dim
    dim = a.shape[-1] * b.shape[-1]
    if dim > limit:
        raise DimensionError(
            f"Kronecker product of dimension {dim} exceeds the dense maximum {limit}"
        )
    return np.kron(a, b)


def kron_all(factors, max_dim=None):
    """Left-to-right Kronecker product of a non-empty sequence of operators."""
    factors = list(factors)
    if not factors:
        raise DimensionError("kron_all needs at least one factor")
    result = as_operator(factors[0])
    for factor in factors[1:]:
        result = kron(result, factor, max_dim=max_dim)
    return result


def partial_trace(rho, fact, keep):
    """
    Trace out every subsystem not listed in ``keep``.

    Args:
        rho (numpy.ndarray): Operator (or stack of operators) on the full space.
        fact (HilbertFactorization): Local dimensions of the full space.
        keep (iterable of int): Subsystems that survive the trace.

    Returns:
        numpy.ndarray: Reduced operator(s) on the kept subsystems, ordered as in ``fact``.

    Raises:
        FactorizationError: On a dimension mismatch or a degenerate keep set.
    """
    rho = as_operator(rho, "rho")
    fact.check(rho.shape[-1])
    kept = fact.normalize_keep(keep)
    traced = [i for i in range(fact.n_subsystems) if i not in kept]
    dims = fact.subsystem_dims
    n = fact.n_subsystems
    lead = rho.shape[:-2]
    n_lead = len(lead)

    tensor = rho.reshape(lead + dims + dims)
    rows = [n_lead + i for i in kept + tuple(traced)]
    cols = [n_lead + n + i for i in kept + tuple(traced)]
    tensor = np.transpose(tensor, list(range(n_lead)) + rows + cols)

    d_keep = fact.kept_dim(kept)
    d_traced = fact.dim // d_keep
    tensor = tensor.reshape(lead + (d_keep, d_traced, d_keep, d_traced))
    return np.einsum("...ajbj->...ab", tensor)


def purity(rho):
    """Re tr[ρ²] for an operator or a stack of operators."""
    rho = as_operator(rho, "rho")
    return np.einsum("...ij,...ji->...", rho, rho).real


def exp_i_hermitian(h):
    """
    U = exp(+iH) for Hermitian H via eigendecomposition.

    Raises:
        HermiticityError: If H is not Hermitian.
        NumericalError: If the eigensolver fails.
    """
    h = hermitian_part(h, "H")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        norm = float(np.linalg.norm(h))
        raise NumericalError(
            f"Eigendecomposition of H failed (||H||_F = {norm:.3e}).\nDetails: {e}",
            norm=norm,
        ) from e
    phases = np.exp(1j * w)
    return (v * phases[..., None, :]) @ dagger(v)


def frechet_exp_i(h, e):
    """
    Directional derivative of H -> exp(iH) at H along E.

    Uses the block identity
    exp(i[[H, E], [0, H]]) = [[exp(iH), D], [0, exp(iH)]],
    which needs no eigenvalue-gap assumption. ``h`` and ``e`` broadcast
    against each other over leading axes.

    Raises:
        HermiticityError: If H or E is not Hermitian.
        NumericalError: If the matrix exponential fails.
    """
    h = hermitian_part(h, "H")
    e = hermitian_part(e, "E")
    h, e = np.broadcast_arrays(h, e)
    d = h.shape[-1]
    block = np.zeros(h.shape[:-2] + (2 * d, 2 * d), dtype=complex)
    block[..., :d, :d] = h
    block[..., :d, d:] = e
    block[..., d:, d:] = h
    try:
        expanded = scipy.linalg.expm(1j * block)
    except (ValueError, np.linalg.LinAlgError) as err:
        norm = float(np.linalg.norm(block))
        raise NumericalError(
            f"Block exponential failed (||block||_F = {norm:.3e}).\nDetails: {err}",
            norm=norm,
        ) from err
    return expanded[..., :d, d:]


class DephasingBasis:
    """
    A complete set of rank-1 orthogonal projectors χ_k.

    Validated once at construction, so ``dephase`` can be called in inner
    loops without re-checking.
    """

    def __init__(self, projectors, tol=1e-10):
        projectors = as_operator(projectors, "projectors")
        if projectors.ndim != 3:
            raise BasisError("projectors must be a list of square matrices")
        k, d, _ = projectors.shape
        if k != d:
            raise BasisError(f"a complete rank-1 basis on dimension {d} needs {d} projectors, got {k}")

        # Each χ_k Hermitian, idempotent, trace one
        if np.max(np.abs(projectors - dagger(projectors))) > tol:
            raise BasisError("projectors are not Hermitian")
        if np.max(np.abs(projectors @ projectors - projectors)) > tol:
            raise BasisError("projectors are not idempotent")
        traces = np.einsum("kii->k", projectors).real
        if np.max(np.abs(traces - 1.0)) > tol:
            raise BasisError("projectors are not rank one")

        # Mutual orthogonality and completeness
        products = np.einsum("aij,bjk->abik", projectors, projectors)
        off_diagonal = products[~np.eye(k, dtype=bool)]
        if off_diagonal.size and np.max(np.abs(off_diagonal)) > tol:
            raise BasisError("projectors are not mutually orthogonal")
        if np.max(np.abs(projectors.sum(axis=0) - np.eye(d))) > tol:
            raise BasisError("projectors do not sum to the identity")

        self.projectors = projectors
        self.dim = d

    @classmethod
    def computational(cls, dim):
        """Projectors onto the computational basis states |k><k|."""
        projectors = np.zeros((dim, dim, dim), dtype=complex)
        projectors[np.arange(dim), np.arange(dim), np.arange(dim)] = 1.0
        return cls(projectors)

    @classmethod
    def from_vectors(cls, vectors, tol=1e-8):
        """
        Build the basis from kets |k>.

        Raises:
            BasisError: If a ket is not normalized within ``tol``.
        """
        vectors = np.asarray(vectors, dtype=complex)
        if vectors.ndim != 2:
            raise BasisError("basis vectors must be a list of equal-length amplitude lists")
        norms = np.linalg.norm(vectors, axis=1)
        if np.max(np.abs(norms - 1.0)) > tol:
            raise BasisError(f"basis vectors are not normalized (norms {np.round(norms, 10).tolist()})")
        vectors = vectors / norms[:, None]
        return cls(np.einsum("ki,kj->kij", vectors, vectors.conj()))


def dephase(rho, basis):
    """
    Dephasing superoperator Σ_k χ_k ρ χ_k.

    Args:
        rho (numpy.ndarray): Operator or stack of operators.
        basis (DephasingBasis or sequence of projectors): Dephasing basis.

    Raises:
        BasisError: If ``basis`` is not a complete rank-1 orthogonal set.
        DimensionError: If the basis and operator dimensions differ.
    """
    if not isinstance(basis, DephasingBasis):
        basis = DephasingBasis(basis)
    rho = as_operator(rho, "rho")
    if rho.shape[-1] != basis.dim:
        raise DimensionError(
            f"basis dimension {basis.dim} does not match operator dimension {rho.shape[-1]}"
        )
    chi = basis.projectors
    return np.einsum("kij,...jl,klm->...im", chi, rho, chi)
