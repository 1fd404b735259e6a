"""Radial forced curvature flows with capillary boundary conditions.

Solvers for the regularized and level-set radial equations, a control-based
oracle for the large-time speed and profile, and the stationary problem with
a ``k u`` term as a third route to the eigenvalue.
"""

from .eigen import EigenEstimate, eigen_limit, residual, solve_k_problem
from .geometry import (CoercivityReport, boundary_constants, coercivity_margin,
                       crossing_point)
from .hj import evolve_hj, profile_from_evolution
from .kernels import BACKEND
from .model import (Constant, Grid, GridFunction, NumericalError, Polynomial,
                    RadialProblem, ScenarioError, SolverConfig, Table,
                    grid_gradient, parse_problem, sample, serialize_problem,
                    sup_distance, sup_norm)
from .oracle import (AubryReport, DPConfig, asymptotic_profile, distance,
                     dp_value, eigenvalue_formula)
from .parabolic import (TimeSeries, eigen_from_evolution, evolve,
                        viscosity_sweep)

__all__ = [
    "AubryReport", "BACKEND", "CoercivityReport", "Constant", "DPConfig",
    "EigenEstimate", "Grid", "GridFunction", "NumericalError", "Polynomial",
    "RadialProblem", "ScenarioError", "SolverConfig", "Table", "TimeSeries",
    "asymptotic_profile", "boundary_constants", "coercivity_margin",
    "crossing_point", "distance", "dp_value", "eigen_from_evolution",
    "eigen_limit", "eigenvalue_formula", "evolve", "evolve_hj", "grid_gradient",
    "parse_problem", "profile_from_evolution", "residual", "sample",
    "serialize_problem", "solve_k_problem", "sup_distance", "sup_norm",
    "viscosity_sweep",
]
