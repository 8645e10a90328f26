"""
Problem statement, discretized paths, and the quantities both solvers share:
the Lagrangian, the action, Euler-Lagrange residuals and accumulated resources.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.integrate import simpson

from resource_action.errors import ConfigError, DimensionError, GridError
from resource_action.quantum.geometry import fs_speed, fs_speed_squared, tensor_parts
from resource_action.quantum.resources import (
    potential_value,
    potential_values,
    resource_values,
)
from resource_action.quantum.statefam import evolve, state_jet
from resource_action.utils.helpers import fd_steps

log = logging.getLogger(__name__)

MIN_NODES = 8
# Below this Fubini-Study speed the K1 Lagrangian has no derivative in λ'
REST_SPEED_TOL = 1e-8


class KineticTerm(str, Enum):
    K1 = "K1"
    K2 = "K2"


@dataclass(frozen=True, eq=False)
class ActionProblem:
    """
    A least-action problem: I[λ] = ∫₀¹ ds (K(λ, λ') - V(ψ(λ))) with λ(0), λ(1) fixed.

    Attributes:
        family (HamiltonianFamily): Generators and reference state.
        kinetic (KineticTerm): K1 (Fubini-Study speed) or K2 (its square).
        potential (PotentialSpec): Potential V and the structure for accumulating E, F, Q.
        lambda_A, lambda_B (numpy.ndarray): Endpoints at s = 0 and s = 1.
    """

    family: object
    kinetic: KineticTerm
    potential: object
    lambda_A: np.ndarray
    lambda_B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kinetic", KineticTerm(self.kinetic))
        for name in ("lambda_A", "lambda_B"):
            value = np.array(getattr(self, name), dtype=float).reshape(-1)
            if value.shape != (self.family.n_params,):
                raise DimensionError(
                    f"{name} must have length {self.family.n_params}, got {value.shape[0]}"
                )
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        self.potential.check(self.family.dim)

    @property
    def n_params(self):
        return self.family.n_params


@dataclass(frozen=True, eq=False)
class Path:
    """
    Nodes λ(s_k) on the uniform grid s_k = k/N, k = 0..N.

    Attributes:
        nodes (numpy.ndarray): Shape (N+1, m).
    """

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2:
            raise GridError(f"path nodes must be an (N+1)×m array, got shape {nodes.shape}")
        if nodes.shape[0] - 1 < MIN_NODES:
            raise GridError(f"path needs N >= {MIN_NODES} intervals, got {nodes.shape[0] - 1}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self):
        return self.nodes.shape[0] - 1

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.n + 1)

    @classmethod
    def straight_line(cls, problem, n):
        s = np.linspace(0.0, 1.0, n + 1)[:, None]
        return cls((1.0 - s) * problem.lambda_A + s * problem.lambda_B)

    @classmethod
    def from_interior(cls, problem, interior):
        """Pin an (N-1)×m block of interior nodes between the problem's endpoints."""
        interior = np.asarray(interior, dtype=float).reshape(-1, problem.n_params)
        return cls(np.vstack([problem.lambda_A, interior, problem.lambda_B]))

    def check_pinned(self, problem):
        """
        Raises:
            GridError: If the first or last node differs from the problem's endpoints.
        """
        if self.nodes.shape[1] != problem.n_params:
            raise GridError(
                f"path has {self.nodes.shape[1]} parameters, problem has {problem.n_params}"
            )
        if not (
            np.array_equal(self.nodes[0], problem.lambda_A)
            and np.array_equal(self.nodes[-1], problem.lambda_B)
        ):
            raise GridError("path endpoints are not pinned to lambda_A and lambda_B")

    def resampled(self, n):
        """Linear interpolation onto a uniform grid with ``n`` intervals."""
        s_new = np.linspace(0.0, 1.0, n + 1)
        columns = [np.interp(s_new, self.grid, self.nodes[:, mu]) for mu in range(self.nodes.shape[1])]
        nodes = np.stack(columns, axis=1)
        nodes[0], nodes[-1] = self.nodes[0], self.nodes[-1]
        return Path(nodes)


@dataclass
class SolveResult:
    """
    Outcome of one solve.

    ``accumulated`` and ``baseline`` map "E", "F", "Q" to path integrals along
    the optimal path and along the straight line between the same endpoints.
    ``el_residual`` has one row per interior node; NaN rows mark K1 rest
    points where the residual is undefined.
    """

    path: Path
    action: float
    el_residual_max: float
    accumulated: dict
    method: str
    iterations: int
    converged: bool = True
    el_residual: np.ndarray = None
    baseline: dict = None
    init: str = "straight_line"
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by both solvers."""

    method: str = "transcription"
    grid_n: int = 400
    max_iter: int = 100000
    restarts: int = 16
    seed: int = 0
    grad_tol: float = 1e-8
    rel_tol: float = 1e-12
    newton_tol: float = 1e-10
    fd_step: float = 1e-5
    christoffel_step: float = 1e-4
    rtol: float = 1e-10
    atol: float = 1e-12
    speed_weight: float = 1.0

    def __post_init__(self):
        if self.method not in ("transcription", "shooting"):
            raise ConfigError("solver.method", f"must be 'transcription' or 'shooting', got {self.method!r}")
        for name in ("grid_n", "max_iter", "restarts", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"solver.{name}", f"must be an integer, got {value!r}")
        if self.grid_n < MIN_NODES:
            raise ConfigError("solver.grid_n", f"must be at least {MIN_NODES}, got {self.grid_n}")
        if self.max_iter < 1 or self.restarts < 1:
            raise ConfigError("solver", "max_iter and restarts must be positive")
        for name in (
            "grad_tol",
            "rel_tol",
            "newton_tol",
            "fd_step",
            "christoffel_step",
            "rtol",
            "atol",
            "speed_weight",
        ):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(f"solver.{name}", f"must be a positive number, got {value!r}")


# --- Lagrangian ---


def lagrangian(problem, lam, lam_prime):
    """L = K(ψ') - V(ψ) at one point, with K = K1 or K2 from the state jet."""
    jet = state_jet(problem.family, lam, lam_prime)
    if problem.kinetic is KineticTerm.K1:
        kinetic = fs_speed(jet)
    else:
        kinetic = fs_speed_squared(jet)
    return kinetic - potential_value(jet, problem.potential)


def _kinetic(problem, g, velocities, floor=0.0):
    """
    K and ∂K/∂λ' from the metric; ∂K/∂λ' is NaN at K1 rest points.

    A positive ``floor`` replaces the K1 speed by √(K2 + floor²), which is
    smooth everywhere.
    """
    gv = np.einsum("...ij,...j->...i", g, velocities)
    k2 = np.maximum(np.einsum("...i,...i->...", velocities, gv), 0.0)
    if problem.kinetic is KineticTerm.K2:
        return k2, 2.0 * gv
    if floor > 0.0:
        speed = np.sqrt(k2 + floor**2)
        return speed, gv / speed[..., None]
    speed = np.sqrt(k2)
    with np.errstate(divide="ignore", invalid="ignore"):
        d_kinetic = np.where((speed > REST_SPEED_TOL)[..., None], gv / speed[..., None], np.nan)
    return speed, d_kinetic


def lagrangian_batch(problem, lambdas, velocities):
    """
    L, K and V at a stack of points.

    Returns:
        tuple: (L, K, V), each of shape (n,).
    """
    psi, dpsi = evolve(problem.family, lambdas)
    g = tensor_parts(psi, dpsi)[3]
    kinetic, _ = _kinetic(problem, g, velocities)
    potential = potential_values(psi, problem.potential)
    return kinetic - potential, kinetic, potential


def kinetic_potential_partials(problem, lambdas, velocities, step=1e-5, floor=0.0):
    """
    K and V with their partials at a stack of points.

    ∂K/∂λ and ∂V/∂λ come from central differences with h_μ = step·max(1, |λ_μ|);
    ∂K/∂λ' is exact (2gλ' for K2, gλ'/K1 for K1). ``floor`` smooths the K1
    speed as in ``_kinetic``; the returned ``speed`` is always the raw one.

    Returns:
        tuple: (K, V, dK_dlam, dV_dlam, dK_dvel, speed) with shapes
        (n,), (n,), (n, m), (n, m), (n, m), (n,).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    n, m = lambdas.shape
    h = fd_steps(lambdas, step)
    eye = np.eye(m)
    plus = lambdas[:, None, :] + h[:, :, None] * eye
    minus = lambdas[:, None, :] - h[:, :, None] * eye
    points = np.concatenate([lambdas, plus.reshape(-1, m), minus.reshape(-1, m)])
    repeated = np.concatenate([velocities, np.repeat(velocities, m, axis=0), np.repeat(velocities, m, axis=0)])

    psi, dpsi = evolve(problem.family, points)
    g = tensor_parts(psi, dpsi)[3]
    kinetic, d_kinetic = _kinetic(problem, g, repeated, floor)
    potential = potential_values(psi, problem.potential)

    def central(values):
        up = values[n : n + n * m].reshape(n, m)
        down = values[n + n * m :].reshape(n, m)
        return (up - down) / (2.0 * h)

    speed = np.sqrt(np.maximum(np.einsum("ni,nij,nj->n", velocities, g[:n], velocities), 0.0))
    return kinetic[:n], potential[:n], central(kinetic), central(potential), d_kinetic[:n], speed


def lagrangian_partials(problem, lambdas, velocities, step=1e-5):
    """
    L with its partials in λ and λ' at a stack of points.

    Returns:
        tuple: (L, dL_dlam, dL_dvel, speed) with shapes (n,), (n, m), (n, m), (n,).
    """
    kinetic, potential, dK_dlam, dV_dlam, dK_dvel, speed = kinetic_potential_partials(
        problem, lambdas, velocities, step
    )
    return kinetic - potential, dK_dlam - dV_dlam, dK_dvel, speed


# --- Finite differences and quadrature ---


def fd_weights(offsets, derivative=1):
    """
    Weights w_j with Σ_j w_j f(x_j) ≈ f^(derivative)(0), exact for polynomials
    of degree < len(offsets). Offsets are in units of the grid spacing.
    """
    offsets = np.asarray(offsets, dtype=float)
    powers = np.arange(len(offsets))
    vandermonde = offsets[None, :] ** powers[:, None]
    rhs = np.zeros(len(offsets))
    rhs[derivative] = factorial(derivative)
    return np.linalg.solve(vandermonde, rhs)


@lru_cache(maxsize=16)
def derivative_matrix(n):
    """
    (N+1)×(N+1) first-derivative operator on s_k = k/N with fourth-order
    stencils: central in the interior, off-center one node from either end,
    one-sided at the endpoints.
    """
    if n < 4:
        raise GridError(f"fourth-order stencils need N >= 4, got {n}")
    h = 1.0 / n
    matrix = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        start = min(max(k - 2, 0), n - 4)
        offsets = np.arange(start, start + 5) - k
        matrix[k, start : start + 5] = fd_weights(offsets) / h
    matrix.setflags(write=False)
    return matrix


def node_velocities(path):
    """λ'(s_k) at every node."""
    return derivative_matrix(path.n) @ path.nodes


def action(problem, path):
    """
    I = ∫₀¹ L ds by composite Simpson over the nodes, λ' from fourth-order stencils.

    Raises:
        GridError: If the path is too short for the stencils.
    """
    lagrange, _, _ = lagrangian_batch(problem, path.nodes, node_velocities(path))
    return float(simpson(lagrange, x=path.grid))


def el_residual(problem, path, step=1e-5):
    """
    r_kμ = d/ds[∂L/∂λ'_μ] - ∂L/∂λ_μ at the interior nodes, shape (N-1, m).

    Rows whose stencil touches a K1 rest point are NaN.
    """
    vel = node_velocities(path)
    _, dL_dlam, dL_dvel, speed = lagrangian_partials(problem, path.nodes, vel, step)
    residual = (derivative_matrix(path.n) @ dL_dvel - dL_dlam)[1:-1]
    if problem.kinetic is KineticTerm.K1:
        at_rest = int(np.count_nonzero(speed <= REST_SPEED_TOL))
        if at_rest:
            log.warning(
                "K1 speed vanishes at %d of %d nodes; residual undefined there", at_rest, path.n + 1
            )
    return residual


def residual_max(residual):
    """Max-norm of a residual field, ignoring flagged rows; NaN when every row is flagged."""
    finite = np.abs(residual[np.isfinite(residual)])
    return float(finite.max()) if finite.size else float("nan")


def resource_profile(problem, path):
    """E, F, Q at every node (NaN where the structure is missing)."""
    psi, _ = evolve(problem.family, path.nodes, derivatives=False)
    return resource_values(psi, problem.potential)


def accumulate(problem, path):
    """Ē, F̄, Q̄ by Simpson quadrature along the path."""
    profile = resource_profile(problem, path)
    grid = path.grid
    return {
        name: float(simpson(values, x=grid)) if np.all(np.isfinite(values)) else float("nan")
        for name, values in profile.items()
    }


def build_result(problem, path, method, iterations, converged, settings, init="straight_line", diagnostics=None):
    """Evaluate action, residuals and accumulated resources for a finished path."""
    path.check_pinned(problem)
    residual = el_residual(problem, path, settings.fd_step)
    accumulated = accumulate(problem, path)
    baseline = accumulate(problem, Path.straight_line(problem, path.n))
    result = SolveResult(
        path=path,
        action=action(problem, path),
        el_residual_max=residual_max(residual),
        accumulated=accumulated,
        method=method,
        iterations=int(iterations),
        converged=bool(converged),
        el_residual=residual,
        baseline=baseline,
        init=init,
        diagnostics=diagnostics or {},
    )
    log.info(
        "%s finished: action=%.10g residual=%.3e E=%.6g F=%.6g Q=%.6g",
        method,
        result.action,
        result.el_residual_max,
        accumulated["E"],
        accumulated["F"],
        accumulated["Q"],
    )
    return result
