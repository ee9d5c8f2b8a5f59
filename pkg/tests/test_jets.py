import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracapprox.jets import (
    Jet,
    bump_jet,
    multi_indices,
    smooth_step,
    smooth_step_jet,
    squared_norm,
)


def test_multi_index_order():
    assert multi_indices(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert len(multi_indices(3, 4)) == math.comb(7, 3)


def test_product_and_exp_derivatives():
    # f(x, y) = exp(x y) (1 + x)^2 at (0.3, -0.2); compare d^(1,2) by hand
    x0, y0 = 0.3, -0.2
    x = Jet.variable([x0], 0, 2, 4)
    y = Jet.variable([y0], 1, 2, 4)
    f = (x * y).exp() * ((x + 1.0) * (x + 1.0))
    e = math.exp(x0 * y0)
    # d_y^2 f = x^2 e (1+x)^2 ; d_x of that
    ref = (2 * x0 * e + x0**2 * y0 * e) * (1 + x0) ** 2 + x0**2 * e * 2 * (1 + x0)
    assert f.derivative((1, 2))[0] == pytest.approx(ref, rel=1e-12)


@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_power_matches_closed_form(x0, p):
    j = Jet.variable([x0], 0, 1, 3).power(p)
    assert j.derivative((3,))[0] == pytest.approx(p * (p - 1) * (p - 2) * x0 ** (p - 3), rel=1e-10, abs=1e-12)


def test_squared_norm_and_reciprocal():
    xs = [Jet.variable([1.0], i, 2, 2) for i in range(2)]
    q = squared_norm(xs)
    assert q.value[0] == 2.0
    r = q.reciprocal()
    assert r.derivative((1, 0))[0] == pytest.approx(-2.0 / 4.0)


def test_bump_jet_matches_finite_difference():
    c = np.array([0.1])
    pts = np.array([[0.2]])
    h = 1e-4

    def val(x):
        return bump_jet(np.array([[x]]), c, 0.5, 0).value[0]

    fd = (val(0.2 + h) - 2 * val(0.2) + val(0.2 - h)) / h**2
    assert bump_jet(pts, c, 0.5, 2).derivative((2,))[0] == pytest.approx(fd, rel=1e-5)


def test_smooth_step_properties():
    r = np.array([0.0, 0.4, 0.5, 0.75, 1.0, 1.3])
    v = smooth_step(r)
    assert v[0] == v[1] == v[2] == 1.0
    assert v[4] == v[5] == 0.0
    assert 0 < v[3] < 1
    j = smooth_step_jet(Jet.variable(r, 0, 1, 2))
    assert np.allclose(j.value, v)
    assert np.all(j.derivative((1,))[:3] == 0.0)
