"""Random ordered pairs of compatible initial data for comparison checks."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P

from .model import Grid, Polynomial, RadialProblem, SolverConfig


def _bump(j: int, R: float) -> np.ndarray:
    """Coefficients of ``r**j (R - r)**2``: nonnegative, flat at 0 and R."""
    return P.polymul(np.r_[np.zeros(j), 1.0], P.polypow([R, -1.0], 2))


def random_flat_polynomial(rng: np.random.Generator, R: float = 1.0,
                           scale: float = 1.0) -> np.ndarray:
    coeffs = np.array([rng.normal()])
    for j in (2, 3, 4):
        coeffs = P.polyadd(coeffs, scale * rng.normal() * _bump(j, R))
    return coeffs


def ordered_pairs(rng: np.random.Generator, count: int, R: float = 1.0
                  ) -> list[tuple[Polynomial, Polynomial]]:
    """Pairs ``(u_a, u_b)`` with ``u_a <= u_b`` and zero slope at 0 and ``R``."""
    out = []
    for _ in range(count):
        a = random_flat_polynomial(rng, R, scale=4.0)
        gap = np.array([abs(rng.normal()) * rng.integers(0, 2)])
        for j in (2, 3):
            gap = P.polyadd(gap, abs(rng.normal()) * 4.0 * _bump(j, R))
        b = P.polyadd(a, gap)
        out.append((Polynomial(tuple(a)), Polynomial(tuple(b))))
    return out


def comparison_gap(problem: RadialProblem, ua: Polynomial, ub: Polynomial,
                   config: SolverConfig, grid: Grid, solver,
                   backend: str | None = None) -> float:
    """Smallest ``u_b - u_a`` over all nodes and snapshots of two runs."""
    sa = solver(problem.with_(u0=ua), config, grid, backend)
    sb = solver(problem.with_(u0=ub), config, grid, backend)
    return float(min(np.min(b.values - a.values)
                     for a, b in zip(sa.snapshots, sb.snapshots)))
