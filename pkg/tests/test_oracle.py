import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcf_lab.model import Constant, Grid, Polynomial, ScenarioError
from mcf_lab.oracle import (DPConfig, asymptotic_profile, distance, dp_value,
                            dp_values, eigenvalue_formula,
                            pointwise_speed_formula, sticking_interval)
from mcf_lab.scenarios import sticky_forcing, sticky_transport

from conftest import make_problem


def test_formula_linear_f():
    rep = eigenvalue_formula(make_problem(f=Polynomial((0.0, 1.0))), Grid(1.0, 300))
    assert rep.r_cr == pytest.approx(1 / 3, abs=1e-9)
    assert rep.lam == pytest.approx(-1 / 3, abs=1e-9)
    assert rep.aubry_nodes == (100,)


def test_formula_boundary_term():
    rep = eigenvalue_formula(make_problem(phi_R=1.0), Grid(1.0, 60))
    # (n-1)/R + c(R) times phi
    assert rep.lam == pytest.approx(4.0)
    assert rep.aubry_nodes == (60,)


def test_formula_constant_f_whole_interval():
    rep = eigenvalue_formula(make_problem(), Grid(1.0, 30))
    assert rep.lam == 0.0
    assert rep.aubry_nodes == tuple(range(10, 31))


def test_formula_without_crossing_uses_boundary():
    rep = eigenvalue_formula(make_problem(c=Constant(0.0), f=Polynomial((0.0, 1.0))))
    assert math.isinf(rep.r_cr)
    assert rep.lam == pytest.approx(-1.0)


def test_formula_rejects_negative_forcing():
    with pytest.raises(ScenarioError):
        eigenvalue_formula(make_problem(c=Constant(-1.0)))


@given(st.floats(-5, 5), st.floats(-2, 2), st.floats(-2, 2))
def test_formula_shift_in_f(s, a, b):
    p = make_problem(f=Polynomial((a, b)))
    g = Grid(1.0, 60)
    l0 = eigenvalue_formula(p, g).lam
    l1 = eigenvalue_formula(p.with_(f=Polynomial((a + s, b))), g).lam
    assert l1 == pytest.approx(l0 - s, abs=1e-9)


SMALL = DPConfig(m=30, horizon=2.0)


def test_dp_exact_for_constant_data():
    p = make_problem(u0=Constant(2.0), f=Constant(-1.5))
    v = dp_value(p, SMALL, 2.0)
    t = 2.0
    assert np.allclose(v.values, 2.0 + 1.5 * t, atol=1e-12)


@given(st.floats(0.0, 1.0), st.floats(-1, 1))
def test_dp_monotone_in_initial_data(bump, tilt):
    p = make_problem(f=Polynomial((0.0, 1.0)), u0=Polynomial((0.0, tilt)))
    q = p.with_(u0=Polynomial((bump, tilt, 0.5 * bump)))
    va = dp_value(p, SMALL, 1.0).values
    vb = dp_value(q, SMALL, 1.0).values
    assert np.all(vb >= va)


@given(st.floats(-3, 3))
def test_dp_reward_shift(s):
    p = make_problem(f=Polynomial((0.0, 1.0)), u0=Polynomial((0.0, 0.3, -0.2)))
    t = 1.5
    va = dp_value(p, SMALL, t).values
    vb = dp_value(p.with_(f=Polynomial((-s, 1.0))), SMALL, t).values
    # dp advances in whole steps, so use the exact elapsed time
    from mcf_lab.oracle import build_dp_operator
    dt = build_dp_operator(p, SMALL).dt
    elapsed = math.ceil(t / dt - 1e-9) * dt
    assert np.allclose(vb - va, s * elapsed, atol=1e-10)


def test_dp_times_beyond_horizon():
    with pytest.raises(ScenarioError):
        dp_values(make_problem(), SMALL, [3.0])


def test_distance_triangle_and_diagonal():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    dpc = DPConfig(m=40)
    rep = eigenvalue_formula(p, Grid(1.0, 40))
    d = distance(p, rep.lam, dpc)
    assert d.converged
    D = d.matrix
    assert np.all(np.diag(D) == 0.0)
    cand = D[:, :, None] + D[None, :, :]
    with np.errstate(invalid="ignore"):
        viol = np.nanmax(np.where(np.isfinite(cand), cand - D[:, None, :], -np.inf))
    assert viol <= 1e-12


def test_distance_left_moves_blocked_below_crossing():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    d = distance(p, -1 / 3, DPConfig(m=30))
    # node 5 (r = 1/6) cannot reach node 2
    assert d.matrix[5, 2] == -np.inf
    assert np.isfinite(d.matrix[2, 5])


def test_profile_vanishes_at_anchor():
    p = make_problem()
    w = asymptotic_profile(p, DPConfig(m=30))
    assert w.values[10] == 0.0
    assert np.allclose(w.values, 0.0)


def test_sticking_interval_of_sticky_forcing():
    a, b = sticking_interval(make_problem(c=sticky_forcing()))
    assert a == pytest.approx(0.3, abs=1e-9)
    assert b == pytest.approx(0.6, abs=1e-12)


def brute_pointwise(problem, r, fine=20001):
    s = np.linspace(0, problem.R, fine)
    mf = -problem.f.evaluate(s)
    lo = min(max(r, 0.3), 0.6)
    return mf[s >= lo - 1e-12].max()


def test_pointwise_formula_against_brute_force():
    p = make_problem(c=sticky_forcing(), f=sticky_transport())
    g = Grid(1.0, 100)
    pw = pointwise_speed_formula(p, g)
    ref = [brute_pointwise(p, r) for r in g.nodes]
    assert np.allclose(pw.values, ref, atol=1e-9)
    assert pw.values[0] == pytest.approx(-0.2)
    assert pw.values[-1] == pytest.approx(-0.6)
