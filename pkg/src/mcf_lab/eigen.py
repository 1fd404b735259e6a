"""Eigenvalue extraction through the stationary problem with a ``k u`` term.

For ``k > 0`` the stationary equation ``F(u) - k u = 0`` has a unique
solution ``u_k``, and ``k * mean(u_k)`` tends to the eigenvalue as ``k -> 0``.
Steady states are reached by pseudo-time relaxation with the monotone
stepper; after each block of steps the constant mode, which relaxes only at
rate ``k``, is corrected in one shot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import (Grid, GridFunction, NumericalError, RadialProblem,
                    ScalarField, ScenarioError, SolverConfig, boundary_slope,
                    grid_gradient, radial_mean, sample, sup_norm)
from .parabolic import RadialStepper

log = logging.getLogger(__name__)

DEFAULT_K_GRID = 120


@dataclass
class KSolution:
    u: GridFunction
    lambda_k: float
    residual: float
    steps: int
    converged: bool
    history: list[float] = field(default_factory=list)


@dataclass
class EigenEstimate:
    lam: float
    w: GridFunction
    route: str
    anchor: int
    diagnostics: list[tuple[float, float, float, float]] = field(
        default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "route": self.route,
            "anchor_r": float(self.w.grid.nodes[self.anchor]),
            "diagnostics": [
                {"k": k, "eta": e, "lambda_k": lk, "steady_residual": res}
                for k, e, lk, res in self.diagnostics],
            **self.extras,
        }


def solve_k_problem(problem: RadialProblem, eta: float,
                    config: SolverConfig | None = None,
                    grid: Grid | None = None, u_init=None,
                    block: int = 2000, backend: str | None = None) -> KSolution:
    """Relax ``u_t = F(u) - k u`` to a steady state."""
    if not 0.0 < problem.k < 1.0:
        raise ScenarioError("k must lie in (0, 1)", "k")
    if not 0.0 < eta <= 1.0:
        raise ScenarioError("eta must lie in (0, 1]", "eta")
    config = config or SolverConfig(eta=eta, T=1.0, tol_steady=1e-7)
    grid = grid or Grid(problem.R, DEFAULT_K_GRID)
    stepper = RadialStepper(problem, grid, eta, backend=backend)
    dt = config.cfl_safety * stepper.stable_dt()
    if u_init is None:
        u = np.array(sample(problem.u0, grid).values, dtype=float)
    else:
        u = np.array(getattr(u_init, "values", u_init), dtype=float)
    k = problem.k
    n = problem.n
    history: list[float] = []
    steps = 0
    res = np.inf
    while steps < config.max_steps:
        rate = stepper.operator(u)
        res = float(np.max(np.abs(rate)))
        history.append(res)
        if res < config.tol_steady:
            break
        u += radial_mean(rate, grid, n) / k
        stepper.run(u, dt, block)
        steps += block
        if not np.all(np.isfinite(u)):
            raise NumericalError(f"k-problem diverged after {steps} steps")
    converged = res < config.tol_steady
    if not converged:
        raise NumericalError(
            f"no steady state within {steps} steps (residual {res:.3g}); "
            f"history tail {history[-5:]}")
    uk = GridFunction(grid, u)
    return KSolution(uk, k * radial_mean(u, grid, n), res, steps, converged,
                     history)


def _default_anchor(problem: RadialProblem, grid: Grid) -> int:
    c, _ = problem.coefficients(grid)
    if np.all(c >= 0):
        from .oracle import eigenvalue_formula
        return eigenvalue_formula(problem, grid).aubry_nodes[0]
    return 0


def eigen_limit(problem: RadialProblem, ks, etas,
                config: SolverConfig | None = None, grid: Grid | None = None,
                backend: str | None = None) -> EigenEstimate:
    """Double limit ``k -> 0`` then ``eta -> 0`` by linear extrapolation.

    For each ``eta`` the values ``lambda_k`` are fitted linearly in ``k``;
    with two or more ``eta`` values the intercepts are then fitted linearly in
    ``eta``, because the regularized eigenvalue itself carries an ``O(eta)``
    bias.
    """
    ks = sorted((float(k) for k in ks), reverse=True)
    etas = sorted((float(e) for e in etas), reverse=True)
    if not ks or not etas:
        raise ScenarioError("ks and etas must be nonempty")
    grid = grid or Grid(problem.R, DEFAULT_K_GRID)
    diagnostics = []
    per_eta = []
    bound_ku = bound_du = 0.0
    bounds = []
    last = None
    for eta in etas:
        lams = []
        u_prev = None
        for k in ks:
            cfg = config or SolverConfig(eta=eta, T=1.0, tol_steady=1e-7)
            sol = solve_k_problem(problem.with_(k=k), eta, cfg, grid,
                                  u_init=u_prev, backend=backend)
            # warm start: the next, smaller k has a steady state close to this
            u_prev = sol.u.values
            lams.append(sol.lambda_k)
            diagnostics.append((k, eta, sol.lambda_k, sol.residual))
            ku = sup_norm(sol.u.shifted(0.0)) * k
            du = sup_norm(grid_gradient(sol.u))
            bounds.append((k, eta, ku, du))
            bound_ku, bound_du = max(bound_ku, ku), max(bound_du, du)
            last = sol
        if len(ks) > 1:
            slope, icpt = np.polyfit(ks, lams, 1)
            fit_res = float(np.max(np.abs(np.polyval([slope, icpt], ks) - lams)))
        else:
            icpt, fit_res = lams[0], float("nan")
        per_eta.append((eta, float(icpt), fit_res))
    if len(etas) > 1:
        _, lam = np.polyfit([e for e, _, _ in per_eta],
                            [l for _, l, _ in per_eta], 1)
    else:
        lam = per_eta[0][1]
    anchor = _default_anchor(problem, grid)
    u = last.u.values
    w = GridFunction(grid, u - radial_mean(u, grid, problem.n)).anchored(anchor)
    extras = {
        "per_eta": [{"eta": e, "lambda_k0": l, "k_fit_residual": r}
                    for e, l, r in per_eta],
        "sup_k_u": bound_ku,
        "sup_grad_u": bound_du,
        "bounds": [{"k": k, "eta": e, "sup_k_u": a, "sup_grad_u": b}
                   for k, e, a, b in bounds],
    }
    return EigenEstimate(float(lam), w, "k-limit", anchor, diagnostics, extras)


# --------------------------------------------------------------------------
# stationary residuals
# --------------------------------------------------------------------------

BRANCHES = ("classical", "zero-slope")


def residual(problem: RadialProblem, lam: float, w, eta: float,
             q: float | None = None, branch: str = "classical",
             grid: Grid | None = None) -> GridFunction:
    """Nodewise residual of ``lam = F(w)`` with the boundary law at the last node.

    ``branch="classical"`` reads the boundary law as ``w_r(R) = p`` with ``p``
    the classical root; ``"zero-slope"`` reads it as ``w_r(R) = 0``, which
    satisfies the law in the viscosity sense when ``q < 1``.
    """
    q = problem.q if q is None else float(q)
    if isinstance(w, ScalarField):
        grid = grid or Grid(problem.R, 400)
        w = sample(w, grid)
    grid = w.grid
    prob = problem.with_(q=q, k=0.0)
    stepper = RadialStepper(prob, grid, eta)
    out = lam - stepper.operator(w.values, k=0.0)
    if branch == "classical":
        p = boundary_slope(prob.phi_R, q, eta)
    elif branch == "zero-slope":
        p = 0.0
    else:
        raise ValueError(f"unknown branch {branch!r}; expected one of {BRANCHES}")
    out[-1] = (w.values[-1] - w.values[-2]) / grid.h - p
    return GridFunction(grid, out)


def residual_branches(problem: RadialProblem, lam: float, w, eta: float,
                      q: float | None = None, grid: Grid | None = None
                      ) -> dict[str, GridFunction]:
    return {b: residual(problem, lam, w, eta, q, b, grid) for b in BRANCHES}
