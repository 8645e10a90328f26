"""
Shooting for K2 problems.

The Euler-Lagrange equations of L = λ'ᵀ g λ' - V are integrated as a
geodesic equation with a force,

    λ''^a = -Γ^a_bc λ'^b λ'^c - ½ g^ab ∂_b V,

from λ_A with a trial velocity, and the velocity is corrected by a hybrid
Newton iteration until the trajectory lands on λ_B.
"""

import logging

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from resource_action.errors import ShootingError, SingularMetricError
from resource_action.quantum.geometry import christoffel, metric_tensors, require_invertible
from resource_action.quantum.resources import PotentialKind, potential_gradient
from resource_action.solver.problem import (
    KineticTerm,
    Path,
    SolverSettings,
    action,
    build_result,
)

log = logging.getLogger(__name__)

# Relative scale of the random perturbations of the trial velocity between restarts
RESTART_SPREAD = 0.5


def _equations(problem, settings):
    fam = problem.family
    spec = problem.potential
    free = spec.kind is PotentialKind.NONE

    def rhs(s, y):
        m = fam.n_params
        lam, vel = y[:m], y[m:]
        gamma = christoffel(fam, lam, settings.christoffel_step)
        acc = -np.einsum("abc,b,c->a", gamma, vel, vel)
        if not free:
            g_inv = require_invertible(metric_tensors(fam, lam), lam)
            acc -= 0.5 * g_inv @ potential_gradient(fam, lam, spec, settings.fd_step)
        return np.concatenate([vel, acc])

    return rhs


def _integrate(problem, rhs, v0, settings, s_eval=None):
    y0 = np.concatenate([problem.lambda_A, v0])
    return solve_ivp(
        rhs,
        (0.0, 1.0),
        y0,
        method="RK45",
        t_eval=s_eval,
        rtol=settings.rtol,
        atol=settings.atol,
    )


def _shoot(problem, rhs, v0, settings):
    """Newton-correct one trial velocity. Returns (velocity, miss, evaluations) or None."""
    m = problem.n_params
    evaluations = [0]

    def miss(v):
        evaluations[0] += 1
        sol = _integrate(problem, rhs, v, settings)
        if sol.status != 0:
            return np.full(m, 1e6)
        return sol.y[:m, -1] - problem.lambda_B

    try:
        res = root(miss, v0, method="hybr", options={"xtol": 1e-13})
        final_miss = float(np.max(np.abs(miss(res.x))))
    except SingularMetricError as e:
        log.warning("Shooting branch left the invertible region: %s", e)
        return None
    return res.x, final_miss, evaluations[0]


def _dedupe(branches, tol=1e-6):
    unique = []
    for branch in branches:
        if not any(np.max(np.abs(branch["velocity"] - other["velocity"])) < tol for other in unique):
            unique.append(branch)
    return unique


def solve_shooting(problem, n=None, settings=None):
    """
    Solve a K2 problem by multiple shooting restarts; the least action wins.

    The first trial velocity is λ_B - λ_A (the straight line); later ones
    perturb it with a generator seeded from ``settings.seed``. Every branch
    found is reported in ``diagnostics["branches"]``.

    Args:
        problem (ActionProblem): A K2 problem.
        n (int): Grid intervals of the reported path. Defaults to settings.grid_n.
        settings (SolverSettings): Restarts, seed and tolerances.

    Raises:
        ShootingError: For K1 problems, or when no restart reaches λ_B.
        SingularMetricError: If g is singular at λ_A.
    """
    settings = settings or SolverSettings(method="shooting")
    n = settings.grid_n if n is None else int(n)
    if problem.kinetic is not KineticTerm.K2:
        raise ShootingError("shooting integrates the K2 equations only; use transcription for K1")

    require_invertible(metric_tensors(problem.family, problem.lambda_A), problem.lambda_A)
    rhs = _equations(problem, settings)
    rng = np.random.default_rng(settings.seed)
    straight = problem.lambda_B - problem.lambda_A
    spread = RESTART_SPREAD * (1.0 + np.abs(straight))
    # Endpoint miss tolerated on a branch: the integrator error bounds how close Newton can land
    accept_tol = max(settings.newton_tol, 10.0 * settings.rtol) * max(1.0, float(np.max(np.abs(problem.lambda_B))))
    if accept_tol > settings.newton_tol:
        log.info(
            "Accepting endpoint misses up to %.1e (newton_tol %.1e, integrator rtol %.1e)",
            accept_tol,
            settings.newton_tol,
            settings.rtol,
        )

    log.info(
        "Shooting: %d restarts, potential=%s, seed %d",
        settings.restarts,
        problem.potential.kind.value,
        settings.seed,
    )
    branches = []
    total_evaluations = 0
    grid = np.linspace(0.0, 1.0, n + 1)
    for attempt in range(settings.restarts):
        v0 = straight if attempt == 0 else straight + spread * rng.standard_normal(straight.shape)
        outcome = _shoot(problem, rhs, v0, settings)
        if outcome is None:
            continue
        velocity, final_miss, evaluations = outcome
        total_evaluations += evaluations
        if final_miss > accept_tol:
            log.warning("Shooting restart %d missed lambda_B by %.3e; rejected", attempt, final_miss)
            continue

        sol = _integrate(problem, rhs, velocity, settings, s_eval=grid)
        nodes = sol.y[: problem.n_params].T.copy()
        nodes[0], nodes[-1] = problem.lambda_A, problem.lambda_B
        path = Path(nodes)
        branches.append(
            {
                "restart": attempt,
                "velocity": velocity,
                "miss": final_miss,
                "action": action(problem, path),
                "path": path,
            }
        )
        log.debug("Restart %d: action %.12g, miss %.3e", attempt, branches[-1]["action"], final_miss)

    branches = _dedupe(branches)
    if not branches:
        raise ShootingError(
            f"no shooting branch reached lambda_B in {settings.restarts} restarts; "
            "try method 'transcription'"
        )
    best = min(branches, key=lambda b: b["action"])
    diagnostics = {
        "branches": [
            {
                "restart": b["restart"],
                "initial_velocity": b["velocity"].tolist(),
                "action": b["action"],
                "endpoint_miss": b["miss"],
            }
            for b in branches
        ],
        "selected_restart": best["restart"],
        "endpoint_miss": best["miss"],
        "endpoint_tolerance": accept_tol,
        "newton_tol": settings.newton_tol,
        "integrations": total_evaluations,
    }
    return build_result(
        problem,
        best["path"],
        "shooting",
        total_evaluations,
        True,
        settings,
        init="straight_line_velocity",
        diagnostics=diagnostics,
    )
