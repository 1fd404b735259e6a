import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from mcf_lab import kernels
from mcf_lab._kernels_py import hamiltonian
from mcf_lab.model import Grid, Polynomial, sample
from mcf_lab.oracle import DPConfig, build_dp_operator
from mcf_lab.parabolic import RadialStepper

from conftest import make_problem

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython",
                               reason="compiled kernels not built")

finite = st.floats(-5, 5, allow_nan=False)


def brute_hamiltonian(pm, pp, ap, am, c, eta, n=20001):
    """Sup over unit directions, reading the slope on the upwind side."""
    th = np.linspace(-1.0, 1.0, n)
    vals = []
    right = ap + c * th >= 0
    vals.append(((ap + c * th) * pp + c * eta * np.sqrt(1 - th * th))[right])
    left = am + c * th <= 0
    vals.append(((am + c * th) * pm + c * eta * np.sqrt(1 - th * th))[left])
    return max(v.max() for v in vals if v.size)


@given(finite, finite, st.floats(0.1, 20), st.floats(0.1, 20),
       st.floats(0.0, 10), st.sampled_from([0.0, 0.1, 1.0]))
def test_hamiltonian_matches_brute_force(pm, pp, ap, am, c, eta):
    h = float(hamiltonian(np.array([pm]), np.array([pp]), ap, am, c, eta)[0])
    assert h == pytest.approx(brute_hamiltonian(pm, pp, ap, am, c, eta),
                              abs=1e-3 * (1 + abs(c) + abs(ap) + abs(am)))


@given(finite, st.floats(0.1, 20), st.floats(-10, 10), st.sampled_from([0.0, 0.2, 1.0]))
def test_hamiltonian_consistent(p, a, c, eta):
    h = float(hamiltonian(np.array([p]), np.array([p]), a, a, c, eta)[0])
    assert h == pytest.approx(a * p + c * np.sqrt(eta ** 2 + p ** 2), abs=1e-9)


@given(finite, finite, st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.floats(0.1, 20), st.floats(-10, 10), st.sampled_from([0.0, 0.3]))
def test_hamiltonian_monotone(pm, pp, dm, dp_, a, c, eta):
    base = float(hamiltonian(np.array([pm]), np.array([pp]), a, a + 0.1, c, eta)[0])
    up = float(hamiltonian(np.array([pm]), np.array([pp + dp_]), a, a + 0.1, c, eta)[0])
    down = float(hamiltonian(np.array([pm + dm]), np.array([pp]), a, a + 0.1, c, eta)[0])
    assert up >= base - 1e-12
    assert down <= base + 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_radial_reduction_of_curvature_operator(n):
    xs = sp.symbols(f"x0:{n}", real=True)
    eta, r = sp.symbols("eta r", positive=True)
    U = lambda s: s ** 3 / 3 + sp.sin(s)
    rr = sp.sqrt(sum(x ** 2 for x in xs))
    u = U(rr)
    grad = sp.Matrix([sp.diff(u, x) for x in xs])
    hess = sp.hessian(u, xs)
    v2 = eta ** 2 + (grad.T * grad)[0]
    a = sp.eye(n) - grad * grad.T / v2
    lhs = (a * hess).trace()
    Ur, Urr = sp.diff(U(r), r), sp.diff(U(r), r, 2)
    rhs = eta ** 2 * Urr / (eta ** 2 + Ur ** 2) + (n - 1) * Ur / r
    pt = {x: sp.Rational(j + 2, 7) for j, x in enumerate(xs)}
    rpt = sp.sqrt(sum(v ** 2 for v in pt.values()))
    for e in (sp.Rational(1, 3), 1):
        l = lhs.subs(pt).subs(eta, e)
        rgt = rhs.subs(r, rpt).subs(eta, e)
        assert float(l - rgt) == pytest.approx(0.0, abs=1e-12)


def _stepper_case(eta, phi=0.0):
    p = make_problem(f=Polynomial((0.0, 1.0)), phi_R=phi,
                     u0=Polynomial((0.0, 0.0, phi / 2)))
    return RadialStepper(p, Grid(1.0, 40), eta)


@needs_ext
@pytest.mark.parametrize("eta, phi", [(0.0, 0.0), (0.1, 0.0), (1.0, 1.0),
                                      (0.0, 1.0)])
def test_backends_agree_on_advance(eta, phi):
    st_ = _stepper_case(eta, phi)
    u0 = np.cos(3 * st_.grid.nodes)
    dt = 0.9 * st_.stable_dt()
    out = {}
    for name in ("python", "cython"):
        u = u0.copy()
        sup = kernels.advance(u, st_.ap, st_.am, st_.c, st_.f, st_.grid.h,
                              eta, 0.0, st_.beta0, st_.p_bdry,
                              st_.central_ghost, dt, 50, backend=name)
        out[name] = (u, sup)
    assert np.allclose(out["python"][0], out["cython"][0], rtol=0, atol=1e-12)
    assert out["python"][1] == pytest.approx(out["cython"][1], rel=1e-10)


@needs_ext
def test_backends_agree_on_dp():
    p = make_problem(f=Polynomial((0.0, 1.0)))
    op = build_dp_operator(p, DPConfig(m=30))
    V0 = sample(Polynomial((0.0, 1.0, -2.0)), Grid(1.0, 30)).values.copy()
    Vs = [kernels.dp_advance(V0.copy(), op.idx, op.wt, op.reward, 25, backend=b)
          for b in ("python", "cython")]
    assert np.allclose(Vs[0], Vs[1], atol=1e-13)


def test_operator_matches_one_explicit_step():
    st_ = _stepper_case(0.1)
    u = np.cos(3 * st_.grid.nodes)
    dt = 1e-3 * st_.stable_dt()
    rate = st_.operator(u)
    v = u.copy()
    st_.run(v, dt, 1)
    # interior rows are explicit; the origin row is semi-implicit
    assert np.allclose((v - u)[1:] / dt, rate[1:], atol=1e-9)
    assert (v[0] - u[0]) / dt == pytest.approx(rate[0], rel=1e-2)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys
    env = dict(os.environ, MCF_LAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import mcf_lab; print(mcf_lab.BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
