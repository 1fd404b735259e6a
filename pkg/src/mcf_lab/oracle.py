"""Control-theoretic ground truth for the radial level-set problem.

Trajectories move with velocity ``(n-1)/r + c(r) theta``, ``|theta| <= 1``, and
are reflected at ``r = R`` with multiplier ``l >= 0``; the running payoff is
``-f + phi l``. Three quantities are computed from this picture:

* the closed-form eigenvalue and the set of radii attaining it,
* the finite-horizon value by semi-Lagrangian value iteration,
* the lambda-normalized distance between radii, and from it the large-time
  profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import crossing_point
from .model import (Grid, GridFunction, NumericalError, RadialProblem,
                    ScenarioError, radial_mean, sample)

UNREACHABLE = -np.inf
REST_TOL = 1e-12
GAIN_TOL = 1e-8


@dataclass(frozen=True)
class AubryReport:
    r_cr: float
    lam: float
    aubry_nodes: tuple[int, ...]
    boundary_candidate: float
    interior_sup: float
    grid: Grid

    @property
    def aubry_radii(self) -> np.ndarray:
        return self.grid.nodes[list(self.aubry_nodes)]

    def to_dict(self) -> dict:
        return {
            "r_cr": None if math.isinf(self.r_cr) else self.r_cr,
            "lambda": self.lam,
            "aubry_nodes": [float(r) for r in self.aubry_radii],
            "boundary_candidate": self.boundary_candidate,
            "interior_sup": (None if math.isinf(self.interior_sup)
                             else self.interior_sup),
        }


def _require_nonnegative_c(problem: RadialProblem, grid: Grid) -> None:
    c, _ = problem.coefficients(grid)
    if np.any(c < 0):
        raise ScenarioError("forcing must be nonnegative for the oracle", "c")


def eigenvalue_formula(problem: RadialProblem, grid: Grid | None = None,
                       tol: float = 1e-9) -> AubryReport:
    grid = grid or Grid(problem.R, 400)
    _require_nonnegative_c(problem, grid)
    n, R, phi = problem.n, problem.R, problem.phi_R
    cR = float(problem.c.evaluate(R))
    fR = float(problem.f.evaluate(R))
    bc = -fR + phi * ((n - 1) / R + np.sign(phi) * cR)
    r_cr = crossing_point(problem)
    r = grid.nodes
    m = grid.m
    if math.isinf(r_cr):
        return AubryReport(r_cr, bc, (m,), bc, -math.inf, grid)

    # sup of -f over [r_cr, R]: grid nodes, the crossing point and table knots
    cand = [r_cr] + list(r[r >= r_cr])
    knots = getattr(problem.f, "knots", ())
    cand += [x for x in knots if x >= r_cr]
    vals = -np.asarray(problem.f.evaluate(np.asarray(cand)), float)
    interior = float(vals.max())
    lam = max(interior, bc)

    mf = -np.asarray(problem.f.evaluate(r), float)
    mask = (r >= r_cr - 0.5 * grid.h) & (mf >= lam - tol)
    mask[m] = mask[m] or bc >= lam - tol
    nodes = list(np.flatnonzero(mask))
    if not nodes:
        # supremum attained between nodes: take the nearest node
        arg = cand[int(np.argmax(vals))]
        nodes = [grid.nearest(arg)]
    return AubryReport(r_cr, lam, tuple(int(i) for i in nodes), bc, interior,
                       grid)


@dataclass(frozen=True)
class DPConfig:
    """Value-iteration controls; ``dt=None`` uses the largest admissible step."""

    m: int = 240
    dt: float | None = None
    horizon: float = 20.0
    controls_per_node: int = 3

    def __post_init__(self):
        if self.controls_per_node < 3:
            raise ScenarioError("need at least 3 controls per node",
                                "controls_per_node")
        if not self.horizon > 0:
            raise ScenarioError("horizon must be positive", "horizon")
        if self.dt is not None and not self.dt > 0:
            raise ScenarioError("dt must be positive", "dt")


def _speeds(problem: RadialProblem, grid: Grid):
    r = grid.nodes
    c, f = problem.coefficients(grid)
    a = np.empty_like(r)
    a[1:] = (problem.n - 1) / r[1:]
    a[0] = np.inf
    return a, c, f


def max_speed(problem: RadialProblem, grid: Grid) -> float:
    a, c, _ = _speeds(problem, grid)
    return float(np.max(a[1:] + np.abs(c[1:])))


@dataclass
class DPOperator:
    """Foot indices, interpolation weights and rewards for one time step."""

    grid: Grid
    dt: float
    idx: np.ndarray
    wt: np.ndarray
    reward: np.ndarray

    def advance(self, V: np.ndarray, nsteps: int, backend=None) -> np.ndarray:
        return kernels.dp_advance(V, self.idx, self.wt, self.reward, nsteps,
                                  backend=backend)


def build_dp_operator(problem: RadialProblem, dpc: DPConfig) -> DPOperator:
    grid = Grid(problem.R, dpc.m)
    _require_nonnegative_c(problem, grid)
    h, m, R = grid.h, grid.m, problem.R
    vmax = max_speed(problem, grid)
    dt = dpc.dt if dpc.dt is not None else h / vmax
    if dt * vmax > h * (1 + 1e-12):
        raise ScenarioError(
            f"dt={dt:.3g} lets trajectories skip cells (limit {h / vmax:.3g})",
            "dt")
    a, c, f = _speeds(problem, grid)
    r = grid.nodes
    K = dpc.controls_per_node
    feet = np.empty((m + 1, K))
    reward = np.empty((m + 1, K))

    # interior: extreme speeds, rest when admissible, optional densification
    ai, ci = a[1:m], c[1:m]
    lo, hi = ai - ci, ai + ci
    rest = np.where(ai <= ci * (1 + REST_TOL), 0.0, hi)
    v = [lo, rest, hi]
    for j in range(1, K - 2):
        v.append(lo + (hi - lo) * j / (K - 2))
    v = np.column_stack(v)
    feet[1:m] = np.clip(r[1:m, None] + dt * v, h, R)
    reward[1:m] = -dt * f[1:m, None]

    # origin: leaves immediately towards the first node
    feet[0] = h
    reward[0] = -dt * f[0]

    # boundary: stay and reflect, or leave inwards when the drift allows it
    aR, cR, fR = a[m], c[m], f[m]
    ls = [max(0.0, aR - cR), aR + cR]
    feet[m] = R
    reward[m, 0] = dt * (-fR + problem.phi_R * ls[0])
    reward[m, 1:] = dt * (-fR + problem.phi_R * ls[1])
    if aR - cR < 0:
        feet[m, 2] = max(h, R + dt * (aR - cR))
        reward[m, 2] = -dt * fR

    pos = feet / h
    idx = np.floor(pos + 1e-12).astype(np.int64)
    idx = np.clip(idx, 0, m)
    wt = np.clip(pos - idx, 0.0, 1.0)
    wt[idx == m] = 0.0
    return DPOperator(grid, dt, np.ascontiguousarray(idx),
                      np.ascontiguousarray(wt), np.ascontiguousarray(reward))


def dp_values(problem: RadialProblem, dpc: DPConfig, times,
              backend: str | None = None) -> list[GridFunction]:
    """Value function at each of the (increasing) ``times``."""
    op = build_dp_operator(problem, dpc)
    times = [float(t) for t in times]
    if any(t > dpc.horizon * (1 + 1e-12) for t in times):
        raise ScenarioError("time beyond the configured horizon", "horizon")
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nondecreasing")
    V = np.array(sample(problem.u0, op.grid).values, dtype=float)
    out, done = [], 0
    for t in times:
        steps = math.ceil(t / op.dt - 1e-9)
        op.advance(V, steps - done, backend)
        done = steps
        if not np.all(np.isfinite(V)):
            raise NumericalError(f"value iteration diverged by t={t}")
        out.append(GridFunction(op.grid, V))
    return out


def dp_value(problem: RadialProblem, dpc: DPConfig, t: float,
             backend: str | None = None) -> GridFunction:
    return dp_values(problem, dpc, [t], backend)[0]


def dp_eigenvalue(problem: RadialProblem, dpc: DPConfig,
                  window: tuple[float, float] = (10.0, 20.0),
                  backend: str | None = None) -> tuple[float, GridFunction]:
    """Mean and pointwise growth rate of the value between two times."""
    t1, t2 = window
    v1, v2 = dp_values(problem, dpc, [t1, t2], backend)
    op_dt = build_dp_operator(problem, dpc).dt
    span = (math.ceil(t2 / op_dt - 1e-9) - math.ceil(t1 / op_dt - 1e-9)) * op_dt
    slope = (v2.values - v1.values) / span
    return radial_mean(slope, v1.grid, problem.n), GridFunction(v1.grid, slope)


@dataclass
class DistanceResult:
    grid: Grid
    matrix: np.ndarray
    converged: bool
    iterations: int
    lam: float = 0.0
    meta: dict = field(default_factory=dict)

    def reachable(self) -> np.ndarray:
        return np.isfinite(self.matrix)


def _edge_weights(problem: RadialProblem, grid: Grid, lam: float):
    a, c, f = _speeds(problem, grid)
    h, m = grid.h, grid.m
    a = a.copy()
    a[0] = 2.0 * (problem.n - 1) / h
    g = -f - lam
    v_hi = a + c
    v_lo = np.maximum(a - c, 0.0)
    can_rest = a <= c * (1 + REST_TOL)
    # lambda comes from a bisected crossing point: forgive that round-off
    g = np.where(can_rest & (g > 0) & (g < GAIN_TOL), 0.0, g)
    if np.any((g > 0) & can_rest):
        bad = float(grid.nodes[np.argmax((g > 0) & can_rest)])
        raise ValueError(
            f"running payoff exceeds lambda at the rest point r={bad:.4g}; "
            "distances are unbounded")
    with np.errstate(divide="ignore"):
        wR = np.where(g <= 0, g * h / v_hi, g * h / np.where(v_lo > 0, v_lo, 1.0))
        left = a < c
        wL = np.where(left, g * h / np.where(left, c - a, 1.0), UNREACHABLE)
    wR[m] = UNREACHABLE
    wL[0] = UNREACHABLE
    return wR, wL


def distance(problem: RadialProblem, lam: float, dpc: DPConfig,
             max_iter: int | None = None) -> DistanceResult:
    """Best lambda-normalized payoff ``d[i, j]`` of travelling from node i to j.

    Cells are crossed at the speed that is best for the sign of the running
    payoff, which turns the sup over trajectories into a longest-path problem
    on the node chain.
    """
    grid = Grid(problem.R, dpc.m)
    _require_nonnegative_c(problem, grid)
    wR, wL = _edge_weights(problem, grid, lam)
    m = grid.m
    D = np.full((m + 1, m + 1), UNREACHABLE)
    np.fill_diagonal(D, 0.0)
    max_iter = max_iter or 4 * (m + 1) + 10
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = D.copy()
        new[:-1] = np.maximum(new[:-1], wR[:-1, None] + D[1:])
        new[1:] = np.maximum(new[1:], wL[1:, None] + D[:-1])
        if np.array_equal(new, D):
            converged = True
            break
        D = new
    return DistanceResult(grid, D, converged, it, lam)


def asymptotic_profile(problem: RadialProblem, dpc: DPConfig,
                       report: AubryReport | None = None,
                       reversed_order: bool = False) -> GridFunction:
    """Large-time profile built from distances to and from the Aubry nodes.

    ``reversed_order`` swaps the argument order of the distance in both
    maximizations; the default order is the one matching the evolution.
    """
    grid = Grid(problem.R, dpc.m)
    report = report or eigenvalue_formula(problem, grid)
    if report.grid != grid:
        report = eigenvalue_formula(problem, grid)
    dres = distance(problem, report.lam, dpc)
    if not dres.converged:
        raise NumericalError("distance iteration did not converge")
    D = dres.matrix.T if reversed_order else dres.matrix
    u0 = sample(problem.u0, grid).values
    w0 = np.max(D + u0[None, :], axis=1)
    A = list(report.aubry_nodes)
    w = np.max(D[:, A] + w0[None, A], axis=1)
    if not np.all(np.isfinite(w)):
        raise NumericalError("some radii cannot reach the Aubry set")
    return GridFunction(grid, w - w[A[0]])


def sticking_interval(problem: RadialProblem, tol: float = 1e-9,
                      cells: int = 4096) -> tuple[float, float]:
    """``[a, b]``: first radius where ``c = (n-1)/r`` and the end of that contact.

    Inside the interval trajectories can rest but not move left; beyond ``b``
    they can move both ways. Returns ``(inf, inf)`` when ``c`` never reaches
    ``(n-1)/r``.
    """
    a = crossing_point(problem)
    if math.isinf(a):
        return a, a
    knots = getattr(problem.c, "knots", None)
    # a table is exact at its knots; sampling between them would only add
    # interpolation error to a contact of (n-1)/r
    r = np.asarray(knots) if knots else np.linspace(0.0, problem.R, cells + 1)
    r = np.union1d(r[r >= a], [a])
    g = r * np.asarray(problem.c.evaluate(r), float) - (problem.n - 1)
    above = np.flatnonzero(g > tol * max(1.0, problem.n - 1))
    if above.size == 0:
        return a, float(problem.R)
    j = int(above[0])
    return a, float(r[j - 1]) if j > 0 else a


def pointwise_speed_formula(problem: RadialProblem, grid: Grid) -> GridFunction:
    """Large-time growth rate at each node for sticky forcing and ``phi = 0``.

    With trajectories forced right below ``a``, able to rest but not to move
    left on ``[a, b]`` and free beyond ``b``, the rate at ``r`` is the best
    value of ``-f`` over ``s >= clip(r, a, b)``.
    """
    a, b = sticking_interval(problem)
    r = grid.nodes
    if math.isinf(a):
        lam = eigenvalue_formula(problem, grid).lam
        return GridFunction(grid, np.full_like(r, lam))
    knots = np.asarray(getattr(problem.f, "knots", ()), float)
    fine = np.union1d(np.linspace(0.0, problem.R, 8 * grid.m + 1), knots)
    mf = -np.asarray(problem.f.evaluate(fine), float)
    # suffix maxima of -f on the fine sample
    suffix = np.maximum.accumulate(mf[::-1])[::-1]
    out = np.empty_like(r)
    for i, x in enumerate(np.clip(r, a, b)):
        j = int(np.searchsorted(fine, x - 1e-14))
        out[i] = max(suffix[j] if j < fine.size else -np.inf,
                     -float(problem.f.evaluate(x)))
    return GridFunction(grid, out)
