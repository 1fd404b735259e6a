import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcf_lab.geometry import (boundary_constants, coercivity_margin,
                              crossing_point, crossing_points)
from mcf_lab.model import Constant, Polynomial, Table
from mcf_lab.scenarios import sticky_forcing, sticky_transport

from conftest import make_problem


def test_ball_constants():
    assert boundary_constants(make_problem(R=2.0)) == (-0.5, 2.0)


# for a constant c on the unit ball the geometric term is
# -|c| - (n-1) - (1+q) < 0, so the margin is c^2/(n-1)
@pytest.mark.parametrize("n, c, q, expect", [
    (2, 3.0, 1.0, 9.0),
    (3, 5.0, 1.0, 12.5),
    (2, 0.0, 0.5, 0.0),
])
def test_delta_star_constant_forcing(n, c, q, expect):
    rep = coercivity_margin(make_problem(n=n, c=Constant(c), q=q))
    assert rep.delta_star == pytest.approx(expect, abs=1e-12)
    assert rep.satisfied is (expect > 0)


def test_delta_star_linear_forcing():
    # c = 2 + r: margin (2+r)^2 - 1, smallest at r = 0
    rep = coercivity_margin(make_problem(c=Polynomial((2.0, 1.0))))
    assert rep.delta_star == pytest.approx(3.0, abs=1e-12)
    assert rep.margin.values[-1] == pytest.approx(8.0)


def test_sticky_forcing_fails_coercivity():
    rep = coercivity_margin(make_problem(c=sticky_forcing(), f=sticky_transport()))
    assert not rep.satisfied
    assert rep.delta_star <= 0.0


@given(st.floats(1.5, 20.0), st.integers(2, 5))
def test_crossing_of_constant_forcing(c, n):
    r = crossing_point(make_problem(n=n, c=Constant(c), R=1.0))
    expect = (n - 1) / c
    if expect <= 1.0:
        assert r == pytest.approx(expect, abs=1e-9)
    else:
        assert math.isinf(r)


def test_no_crossing_is_inf():
    assert math.isinf(crossing_point(make_problem(c=Constant(0.0))))


def test_sticky_contact_counts_once():
    roots = crossing_points(make_problem(c=sticky_forcing()))
    assert len(roots) == 1
    assert roots[0] == pytest.approx(0.3, abs=1e-9)


def test_two_crossings_reported():
    # r c(r) - 1 changes sign twice for this hump
    c = Table((0.0, 0.4, 0.6, 1.0), (0.0, 5.0, 0.5, 0.5))
    roots = crossing_points(make_problem(c=c))
    assert len(roots) == 2
    assert crossing_point(make_problem(c=c)) == pytest.approx(roots[0])
