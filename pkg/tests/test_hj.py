import numpy as np
import pytest

from mcf_lab.hj import evolve_hj, profile_from_evolution
from mcf_lab.model import (Constant, Grid, Polynomial, ScenarioError,
                           SolverConfig)
from mcf_lab.parabolic import eigen_from_evolution

from conftest import make_problem


def test_hj_exact_for_flat_data():
    p = make_problem(u0=Constant(2.0), f=Constant(0.25))
    s = evolve_hj(p, SolverConfig(eta=0.0, T=1.0, n_reports=4), Grid(1.0, 30))
    assert np.allclose(s.final.values, 1.75, atol=1e-13)


def test_hj_rejects_bad_configs():
    g = Grid(1.0, 20)
    with pytest.raises(ScenarioError):
        evolve_hj(make_problem(), SolverConfig(eta=0.1, T=1.0), g)
    with pytest.raises(ScenarioError):
        evolve_hj(make_problem(q=0.5), SolverConfig(eta=0.0, T=1.0), g)
    with pytest.raises(ScenarioError):
        evolve_hj(make_problem(c=Constant(-1.0)), SolverConfig(eta=0.0, T=1.0), g)


def test_hj_boundary_slope_is_held():
    p = make_problem(phi_R=1.0, u0=Polynomial((0.0, 0.0, 0.5)))
    g = Grid(1.0, 60)
    s = evolve_hj(p, SolverConfig(eta=0.0, T=2.0, n_reports=4), g)
    lam, pw = eigen_from_evolution(s, (1.0, 2.0))
    # the boundary node moves at (n-1)/R + c(R) with slope phi
    assert pw.values[-1] == pytest.approx(4.0, abs=1e-9)


def test_hj_linear_f_speed_on_coarse_grid():
    # the speed settles on -f at the first grid node past the crossing
    p = make_problem(f=Polynomial((0.0, 1.0)))
    g = Grid(1.0, 60)
    s = evolve_hj(p, SolverConfig(eta=0.0, T=10.0, n_reports=10), g)
    lam, pw = eigen_from_evolution(s, (5.0, 10.0))
    assert lam == pytest.approx(-1 / 3, abs=2e-2)
    assert np.ptp(pw.values) < 5e-2


def test_profile_anchor_defaults_to_aubry_start():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    g = Grid(1.0, 30)
    s = evolve_hj(p, SolverConfig(eta=0.0, T=2.0, n_reports=2), g)
    w = profile_from_evolution(s, -1 / 3, 2.0)
    assert w.values[10] == 0.0
    w5 = profile_from_evolution(s, -1 / 3, 2.0, anchor=5)
    assert w5.values[5] == 0.0
