import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcf_lab.eigen import (eigen_limit, residual, residual_branches,
                           solve_k_problem)
from mcf_lab.model import (Constant, Grid, NumericalError, Polynomial,
                           ScenarioError, SolverConfig, sup_norm)

from conftest import make_problem

G = Grid(1.0, 40)


def test_k_problem_flat_solution():
    # u = c eta / k solves c eta - k u = 0 for flat data
    p = make_problem(k=0.2)
    sol = solve_k_problem(p, 0.1, grid=G)
    assert sol.converged
    assert np.allclose(sol.u.values, 1.5, atol=1e-6)
    assert sol.lambda_k == pytest.approx(0.3, abs=1e-6)


def test_k_problem_range_checks():
    with pytest.raises(ScenarioError):
        solve_k_problem(make_problem(k=0.0), 0.1, grid=G)
    with pytest.raises(ScenarioError):
        solve_k_problem(make_problem(k=0.5), 0.0, grid=G)


def test_k_problem_reports_nonconvergence():
    p = make_problem(k=0.1, f=Polynomial((0.0, 1.0)))
    cfg = SolverConfig(eta=0.1, T=1.0, tol_steady=1e-7, max_steps=2000)
    with pytest.raises(NumericalError):
        solve_k_problem(p, 0.1, cfg, G)


@settings(max_examples=8)
@given(st.floats(-3, 3), st.floats(-1, 1))
def test_lambda_k_independent_of_seed(a, b):
    p = make_problem(k=0.1, f=Polynomial((0.0, 1.0)))
    ref = solve_k_problem(p, 0.1, grid=G).lambda_k
    seed = a + b * G.nodes ** 2
    got = solve_k_problem(p, 0.1, grid=G, u_init=seed).lambda_k
    assert got == pytest.approx(ref, abs=1e-5)


def test_eigen_limit_flat_case_is_exact():
    est = eigen_limit(make_problem(), [0.1, 0.05], [0.1, 0.05], grid=G)
    assert est.lam == pytest.approx(0.0, abs=1e-6)
    d = est.to_dict()
    assert d["route"] == "k-limit"
    assert len(d["diagnostics"]) == 4
    assert d["sup_k_u"] == pytest.approx(0.3, abs=1e-6)


def test_residual_pairs_with_sublinear_capillarity():
    p = make_problem(c=Constant(0.0), phi_R=1.0, q=0.5)
    for m in (50, 100):
        g = Grid(1.0, m)
        r1 = residual(p, 1.0, Polynomial((0.0, 0.0, 0.5)), 0.0, grid=g)
        r2 = residual(p, 0.0, Polynomial((1.0,)), 0.0, branch="zero-slope", grid=g)
        # only the one-sided boundary difference of r^2/2 misses, by h/2
        assert sup_norm(r1) == pytest.approx(g.h / 2, rel=1e-6)
        assert sup_norm(r2) == 0.0


def test_residual_branches_and_unknown_branch():
    p = make_problem(c=Constant(0.0), phi_R=1.0, q=0.5)
    out = residual_branches(p, 0.0, Polynomial((1.0,)), 0.0, grid=G)
    assert set(out) == {"classical", "zero-slope"}
    assert out["classical"].values[-1] == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        residual(p, 0.0, Polynomial((1.0,)), 0.0, branch="other", grid=G)


@pytest.mark.parametrize("f, expect", [(0.0, 0.0), (5.0, -5.0)])
def test_k_problem_balance_without_forcing(f, expect):
    p = make_problem(c=Constant(0.0), f=Constant(f), k=0.25)
    sol = solve_k_problem(p, 0.5, grid=G)
    assert np.allclose(sol.u.values, -f / 0.25, atol=1e-6)
    assert sol.lambda_k == pytest.approx(expect, abs=1e-6)


def test_graph_case_pair_is_self_consistent():
    p = make_problem(q=2.0, phi_R=0.3)
    res = []
    for m in (20, 40):
        g = Grid(1.0, m)
        est = eigen_limit(p, [0.1, 0.05, 0.025], [1.0], grid=g)
        r = residual(p, est.lam, est.w, 1.0, grid=g)
        res.append(sup_norm(r))
        assert est.w.values[est.anchor] == 0.0
        assert est.diagnostics
    # the pair leaves an O(h) + O(k) residual that does not grow under refinement
    assert res[1] <= 1.5 * res[0]
    assert res[1] <= 5 * (1.0 / 40) + 0.1


def test_profile_unique_up_to_constants():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    ws = []
    for u0 in (Constant(0.0), Polynomial((2.0, 0.0, 1.0, -2 / 3))):
        est = eigen_limit(p.with_(u0=u0), [0.1, 0.05], [0.1], grid=G)
        ws.append(est.w.values)
    assert np.std(ws[0] - ws[1]) <= 1e-3


def test_residual_detects_wrong_lambda():
    p = make_problem(c=Constant(0.0), phi_R=1.0, q=0.5)
    r = residual(p, 1.1, Polynomial((0.0, 0.0, 0.5)), 0.0, grid=Grid(1.0, 100))
    assert sup_norm(r) >= 0.09


def test_eigen_limit_shift_in_f():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    a = eigen_limit(p, [0.1, 0.05], [0.05], grid=G).lam
    b = eigen_limit(p.with_(f=Polynomial((0.5, 1.0))), [0.1, 0.05], [0.05], grid=G).lam
    assert b == pytest.approx(a - 0.5, abs=2e-2)


def test_k_bound_uniform_over_sweep():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    est = eigen_limit(p, [0.1, 0.05, 0.025], [0.1, 0.05], grid=G)
    bounds = est.extras["bounds"]
    coarse = bounds[0]["sup_k_u"]
    assert max(b["sup_k_u"] for b in bounds) <= 2 * coarse
