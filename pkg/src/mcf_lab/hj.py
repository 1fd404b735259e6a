"""First-order level-set evolution (``eta = 0``) and large-time profiles."""

from __future__ import annotations

import numpy as np

from .model import Grid, GridFunction, RadialProblem, ScenarioError, SolverConfig
from .parabolic import DEFAULT_M, TimeSeries, run_stepper


def evolve_hj(problem: RadialProblem, config: SolverConfig,
              grid: Grid | None = None, backend: str | None = None) -> TimeSeries:
    """Upwind evolution of ``u_t = (n-1) u_r / r + c |u_r| - f``, ``u_r(R) = phi``."""
    if config.eta != 0.0:
        raise ScenarioError("evolve_hj needs eta = 0", "eta")
    if problem.q != 1.0:
        raise ScenarioError("the level-set scheme supports q = 1 only", "q")
    grid = grid or Grid(problem.R, DEFAULT_M)
    c, _ = problem.coefficients(grid)
    if np.any(c < 0):
        raise ScenarioError("forcing must be nonnegative", "c")
    problem.check_compatible(0.0)
    return run_stepper(problem, config, grid, backend)


def profile_from_evolution(series: TimeSeries, lam: float, t: float,
                           anchor: int | None = None) -> GridFunction:
    """``u(., t) - lam * t`` shifted to vanish at ``anchor``.

    The default anchor is the smallest node of the set where the eigenvalue
    formula attains its supremum.
    """
    u = series.at(t)
    if anchor is None:
        from .oracle import eigenvalue_formula
        anchor = eigenvalue_formula(series.problem, series.grid).aubry_nodes[0]
    return GridFunction(series.grid, u.values - lam * t).anchored(anchor)
