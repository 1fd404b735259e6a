"""Boundary constants of the ball and the coercivity test on the forcing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Grid, GridFunction, RadialProblem, Table

DEFAULT_SCAN_CELLS = 4096


class ConsistencyError(RuntimeError):
    """Coercive forcing crossing ``(n-1)/r`` more than once."""


@dataclass(frozen=True)
class CoercivityReport:
    C0: float
    K0: float
    margin: GridFunction
    delta_star: float
    satisfied: bool

    def to_dict(self, r_cr: float | None = None) -> dict:
        out = {"C0": self.C0, "K0": self.K0, "delta_star": self.delta_star,
               "satisfied": self.satisfied}
        if r_cr is not None:
            out["r_cr"] = None if math.isinf(r_cr) else r_cr
        return out


def boundary_constants(problem: RadialProblem) -> tuple[float, float]:
    """Largest eigenvalue of minus the curvature matrix, and the inner radius.

    Every principal curvature of the sphere of radius ``R`` is ``1/R`` and the
    ball itself is the largest inscribed ball touching any boundary point.
    """
    return -1.0 / problem.R, problem.R


def coercivity_margin(problem: RadialProblem, grid: Grid | None = None
                      ) -> CoercivityReport:
    grid = grid or Grid(problem.R, 400)
    C0, K0 = boundary_constants(problem)
    n, q = problem.n, problem.q
    r = grid.nodes
    c = np.asarray(problem.c.evaluate(r), float)
    dc = np.asarray(problem.c.abs_slope_bound(r), float)
    sgn = math.copysign(1.0, C0) if C0 != 0 else 0.0
    geo = C0 * np.abs(c) + (n - 1) * C0 / K0 + (1 + q) * sgn * C0 * C0
    margin = c * c / (n - 1) - dc - np.maximum(0.0, geo)
    gf = GridFunction(grid, margin)
    delta = float(margin.min())
    return CoercivityReport(C0, K0, gf, delta, delta > 0)


def _scan_nodes(problem: RadialProblem, cells: int) -> np.ndarray:
    r = np.linspace(0.0, problem.R, cells + 1)
    if isinstance(problem.c, Table):
        r = np.union1d(r, problem.c.knots)
    return r[r > 0]


def crossing_points(problem: RadialProblem, tol: float = 1e-10,
                    cells: int = DEFAULT_SCAN_CELLS, zero_tol: float = 1e-12
                    ) -> list[float]:
    """All sign changes of ``r c(r) - (n-1)`` on ``(0, R]``, refined by bisection.

    Values within ``zero_tol`` of zero are treated as zero, so a forcing that
    sits exactly on ``(n-1)/r`` over an interval counts as one crossing at the
    left end of that interval.
    """
    n = problem.n

    def g(x):
        return x * float(problem.c.evaluate(x)) - (n - 1)

    r = _scan_nodes(problem, cells)
    vals = r * np.asarray(problem.c.evaluate(r), float) - (n - 1)
    sign = np.where(vals > zero_tol, 1, np.where(vals < -zero_tol, -1, 0))
    roots: list[float] = []
    s_prev, r_prev = -1, 0.0  # r c(r) - (n-1) is negative at the origin
    zero_start = None
    for ri, si in zip(r, sign):
        if si == 0:
            if zero_start is None:
                zero_start = float(ri)
            continue
        if zero_start is not None:
            # a run of zeros counts only if the sign differs on both sides
            if si != s_prev:
                roots.append(zero_start)
            zero_start = None
        elif si != s_prev:
            lo, hi = r_prev, float(ri)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if (g(mid) > 0) == (s_prev > 0):
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
        s_prev, r_prev = si, float(ri)
    if zero_start is not None and s_prev < 0:
        roots.append(zero_start)
    return roots


def crossing_point(problem: RadialProblem, tol: float = 1e-10,
                   report: CoercivityReport | None = None) -> float:
    """Smallest radius where ``c(r) = (n-1)/r``; ``inf`` if ``c`` stays below."""
    roots = crossing_points(problem, tol)
    if not roots:
        return math.inf
    if len(roots) > 1:
        report = report or coercivity_margin(problem)
        if report.satisfied:
            raise ConsistencyError(
                f"coercive forcing crosses (n-1)/r {len(roots)} times: {roots}")
    return roots[0]
