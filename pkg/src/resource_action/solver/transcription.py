"""
Direct transcription: minimize the discretized action over the interior nodes.

The nodal path is read as a piecewise quadratic, one element per pair of
grid intervals, integrated with three-point Gauss-Legendre quadrature. The
optimizer works in coordinates whitened by the Cholesky factor of the
kinetic stiffness matrix, so its conditioning does not degrade with N.
"""

import logging
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from resource_action.errors import DegenerateSpeedError, GridError
from resource_action.quantum.geometry import metric_tensors
from resource_action.solver.problem import (
    REST_SPEED_TOL,
    KineticTerm,
    Path,
    SolverSettings,
    build_result,
    kinetic_potential_partials,
)

log = logging.getLogger(__name__)

MIN_TRANSCRIPTION_NODES = 32

_GAUSS_POINTS = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 9.0


@lru_cache(maxsize=8)
def element_operators(n):
    """
    Interpolation and differentiation from nodes to quadrature points.

    Returns:
        tuple: ``values`` (Q×(N+1)), ``slopes`` (Q×(N+1)) and ``weights`` (Q,),
        with Q = 3N/2, so that ∫₀¹ f(λ, λ') ds ≈ Σ_q weights_q f(values @ nodes, slopes @ nodes).
    """
    h = 1.0 / n
    t = _GAUSS_POINTS
    shape = np.stack([0.5 * t * (t - 1.0), 1.0 - t**2, 0.5 * t * (t + 1.0)], axis=1)
    slope = np.stack([t - 0.5, -2.0 * t, t + 0.5], axis=1) / h

    n_elements = n // 2
    n_quad = 3 * n_elements
    values = np.zeros((n_quad, n + 1))
    slopes = np.zeros((n_quad, n + 1))
    for e in range(n_elements):
        rows = slice(3 * e, 3 * e + 3)
        cols = slice(2 * e, 2 * e + 3)
        values[rows, cols] = shape
        slopes[rows, cols] = slope
    weights = np.tile(h * _GAUSS_WEIGHTS, n_elements)
    for arr in (values, slopes, weights):
        arr.setflags(write=False)
    return values, slopes, weights


class _Whitening:
    """
    Affine change of variables X = X0 + R_A⁻¹ Y R_G⁻ᵀ for the interior nodes X,
    where R_AᵀR_A is the stiffness matrix and R_GᵀR_G a reference metric.
    """

    def __init__(self, stiffness, metric, origin):
        self.r_a = scipy.linalg.cholesky(stiffness, lower=False)
        self.r_g = scipy.linalg.cholesky(metric, lower=False)
        self.origin = origin

    def to_nodes(self, y):
        y = y.reshape(self.origin.shape)
        z = scipy.linalg.solve_triangular(self.r_a, y)
        return self.origin + scipy.linalg.solve_triangular(self.r_g, z.T).T

    def pull_back(self, grad_x):
        z = scipy.linalg.solve_triangular(self.r_a, grad_x, trans="T")
        return scipy.linalg.solve_triangular(self.r_g, z.T, trans="T").T.ravel()


def _reference_metric(problem, g_mean, mean_speed):
    m = problem.n_params
    eigs = np.linalg.eigvalsh(g_mean)
    if eigs[0] <= 1e-8 * max(1.0, eigs[-1]):
        log.debug("Mean metric is near-singular; preconditioning with the identity")
        g_mean = np.eye(m)
    if problem.kinetic is KineticTerm.K2:
        return 2.0 * g_mean
    return g_mean / max(mean_speed, 1e-3)


def _count_rest(speed):
    return int(np.count_nonzero(speed <= REST_SPEED_TOL))


def _speed_penalty(speed, weights, weight):
    """
    P = (weight / 2c) Σ_q w_q (K1_q - c)², with c = Σ_q w_q K1_q, and ∂P/∂K1_q.

    Zero exactly when the path runs at uniform speed.
    """
    mean = float(weights @ speed)
    deviation = speed - mean
    penalty = 0.5 * weight / mean * float(weights @ deviation**2)
    return penalty, weights * (weight / mean * deviation - penalty / mean)


def solve_transcription(problem, n=None, init=None, settings=None):
    """
    Minimize the action over interior nodes with L-BFGS-B.

    The K1 action is blind to where the nodes sit along the curve; there the
    objective also carries ``settings.speed_weight`` times a term that
    vanishes at uniform speed, so nodes cannot bunch up into a rest point.
    The reported action and residual are those of the plain K1 Lagrangian.

    Args:
        problem (ActionProblem): The problem.
        n (int): Grid intervals; even and at least 32. Defaults to settings.grid_n.
        init (Path): Starting path; resampled onto the grid if needed.
            Defaults to the straight line between the endpoints.
        settings (SolverSettings): Tolerances and limits.

    Returns:
        SolveResult: ``converged`` is False when the iteration limit was hit
        or a K1 path came to rest; the path is then the best one found.

    Raises:
        GridError: On an odd or too small grid, or an init with wrong endpoints.
        DegenerateSpeedError: For K1 when the starting path is at rest somewhere.
    """
    settings = settings or SolverSettings()
    n = settings.grid_n if n is None else int(n)
    if n < MIN_TRANSCRIPTION_NODES or n % 2:
        raise GridError(f"transcription needs an even N >= {MIN_TRANSCRIPTION_NODES}, got {n}")

    if init is None:
        start, init_label = Path.straight_line(problem, n), "straight_line"
    else:
        init.check_pinned(problem)
        start = init if init.n == n else init.resampled(n)
        init_label = "user"

    values, slopes, weights = element_operators(n)
    w = weights[:, None]
    is_k1 = problem.kinetic is KineticTerm.K1

    lam0 = values @ start.nodes
    g0 = metric_tensors(problem.family, lam0)
    vel0 = slopes @ start.nodes
    speed0 = np.sqrt(np.maximum(np.einsum("qi,qij,qj->q", vel0, g0, vel0), 0.0))
    mean_speed = float(weights @ speed0)
    if is_k1 and _count_rest(speed0):
        raise DegenerateSpeedError(
            f"K1 speed vanishes at {_count_rest(speed0)} quadrature points of the starting path; "
            "the K1 Lagrangian is not differentiable at rest. Use the K2 kinetic term, or endpoints that differ."
        )
    floor = 1e-6 * mean_speed if is_k1 else 0.0

    def evaluate(nodes):
        lam_q = values @ nodes
        vel_q = slopes @ nodes
        kinetic, potential, dK_dlam, dV_dlam, dK_dvel, speed = kinetic_potential_partials(
            problem, lam_q, vel_q, settings.fd_step, floor
        )
        coef = weights
        penalty = 0.0
        if is_k1:
            penalty, dP_dK = _speed_penalty(kinetic, weights, settings.speed_weight)
            coef = weights + dP_dK
        grad = values.T @ (coef[:, None] * dK_dlam - w * dV_dlam) + slopes.T @ (coef[:, None] * dK_dvel)
        return float(weights @ (kinetic - potential)), penalty, grad[1:-1], speed

    start_action, start_penalty, _, _ = evaluate(start.nodes)
    start_total = start_action + start_penalty
    stiffness = (slopes.T @ (w * slopes))[1:-1, 1:-1]
    whitening = _Whitening(stiffness, _reference_metric(problem, g0.mean(axis=0), mean_speed), start.nodes[1:-1])
    log.info(
        "Transcription: N=%d, %s, potential=%s, start action %.10g",
        n,
        problem.kinetic.value,
        problem.potential.kind.value,
        start_action,
    )

    def objective(y):
        interior = whitening.to_nodes(y)
        nodes = np.vstack([problem.lambda_A, interior, problem.lambda_B])
        raw, penalty, grad_x, _ = evaluate(nodes)
        return raw + penalty - start_total, whitening.pull_back(grad_x)

    iteration = [0]

    def progress(y):
        iteration[0] += 1
        if iteration[0] % 100 == 0:
            log.debug("iteration %d", iteration[0])

    res = minimize(
        objective,
        np.zeros(start.nodes[1:-1].size),
        jac=True,
        method="L-BFGS-B",
        callback=progress,
        options={
            "maxiter": settings.max_iter,
            "maxfun": 2 * settings.max_iter,
            "gtol": settings.grad_tol,
            "ftol": settings.rel_tol,
            "maxcor": 20,
        },
    )
    grad_norm = float(np.max(np.abs(res.jac))) if res.jac is not None and res.jac.size else 0.0
    # Line-search stalls at the finite-difference noise floor are accepted, and flagged
    stalled = not res.success and res.status == 2 and grad_norm < 1e-6
    converged = bool(res.success or stalled)
    if stalled:
        log.info("Line search stalled with max gradient %.2e; accepted as converged", grad_norm)
    elif not converged:
        log.warning(
            "Transcription did not converge after %d iterations (%s); returning the best path found",
            res.nit,
            res.message,
        )

    path = Path.from_interior(problem, whitening.to_nodes(res.x))
    final_action, final_penalty, _, final_speed = evaluate(path.nodes)
    diagnostics = {
        "optimizer_message": str(res.message),
        "convergence": "optimizer" if res.success else "line_search_stall" if stalled else "none",
        "function_evaluations": int(res.nfev),
        "gradient_max_norm": grad_norm,
        "discrete_action": final_action,
        "start_action": start_action,
    }
    if is_k1:
        rest = _count_rest(final_speed)
        if rest:
            log.warning("K1 path came to rest at %d quadrature points; result flagged", rest)
            converged = False
        diagnostics.update(
            {
                "speed_weight": settings.speed_weight,
                "speed_penalty": final_penalty,
                "speed_spread": float(np.max(np.abs(final_speed / (weights @ final_speed) - 1.0))),
                "rest_points": rest,
            }
        )
    return build_result(
        problem,
        path,
        "transcription",
        res.nit,
        converged,
        settings,
        init=init_label,
        diagnostics=diagnostics,
    )
