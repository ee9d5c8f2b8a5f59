import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from fracapprox.fields import bump_field, zero_field
from fracapprox.green import (
    CoincidentPoints,
    GreenKernel,
    InwardDirectionError,
    binomial_bound_ratio,
    boundary_functional,
    footnote_green,
    green_series_split,
    green_value,
    r0,
    t_integral_closed_form,
    t_integral_quadrature,
    verify_goa_limit,
)
from fracapprox.fields import radial_field

K1 = GreenKernel(1, 0.5)


def test_r0_value_and_limits():
    assert r0(np.array([0.0, 0.0]), np.array([0.5, 0.0])) == pytest.approx(3.0)
    assert r0(np.array([0.0]), np.array([1.0 - 1e-12])) < 1e-10
    with pytest.raises(CoincidentPoints):
        r0(np.array([0.2]), np.array([0.2]))


def test_green_value_closed_form_point():
    assert green_value(K1, [0.0], [0.5]) == pytest.approx(2 * math.log(math.sqrt(3) + 2), rel=1e-12)
    assert green_value(K1, [0.0], [0.5]) == pytest.approx(2.6339157938, rel=1e-10)


def test_green_vanishes_at_boundary():
    assert green_value(K1, [0.3], [1.0]) == 0.0
    assert green_value(K1, [0.3], [1.0 - 1e-10]) < 1e-4


def test_footnote_identity(rng):
    x = rng.uniform(-0.99, 0.99, 100)
    z = rng.uniform(-0.99, 0.99, 100)
    g = np.array([green_value(K1, [a], [b]) for a, b in zip(x, z)])
    assert np.max(np.abs(g - footnote_green(x, z)) / footnote_green(x, z)) <= 1e-8


@settings(max_examples=20)
@given(st.integers(1, 2), st.floats(0.1, 0.9), st.integers(0, 2**31))
def test_positive_and_symmetric(n, s, seed):
    r = np.random.default_rng(seed)
    x = r.uniform(-0.6, 0.6, n)
    z = r.uniform(-0.6, 0.6, n)
    k = GreenKernel(n, s)
    a, b = green_value(k, x, z), green_value(k, z, x)
    assert a > 0
    assert a == pytest.approx(b, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_branches_agree_on_overlap(n, s):
    k = GreenKernel(n, s)
    rr = np.linspace(0.3, 0.5, 9)
    ser = k.series_coefficients()
    series = rr**s * np.polynomial.polynomial.polyval(rr, ser)
    assert np.allclose(t_integral_quadrature(k, rr), series, rtol=1e-8)
    assert np.allclose(t_integral_quadrature(k, rr), t_integral_closed_form(n, s, rr), rtol=1e-10)


@pytest.mark.parametrize("n", [1, 2])
def test_quadrature_matches_hypergeometric(n):
    k = GreenKernel(n, 0.35)
    rr = np.geomspace(0.6, 1e4, 15)
    assert np.allclose(t_integral_quadrature(k, rr), t_integral_closed_form(n, 0.35, rr), rtol=1e-10)


def test_series_split_reconstruction(rng):
    k = GreenKernel(2, 0.4)
    for _ in range(10):
        x = rng.normal(size=2)
        x *= rng.uniform(0.9, 0.999) / np.linalg.norm(x)
        z = rng.uniform(-0.5, 0.5, 2)
        g0, g1, tail = green_series_split(k, x, z)
        assert g0 + g1 + tail == pytest.approx(green_value(k, x, z, method="quadrature"), rel=1e-8)


def test_series_split_no_tail_for_small_r0():
    _, _, tail = green_series_split(K1, np.array([0.95]), np.array([-0.5]))
    assert tail == 0.0


def test_binomial_bound():
    c = binomial_bound_ratio(GreenKernel(2, 0.5))
    assert np.isfinite(c) and c > 0


def test_boundary_functional_oracle():
    # f = (1 - z^2)_+: integrand 2^s/s (1+z)^(1+s) (1-z)^s, a Beta integral
    s = 0.5
    f = radial_field(lambda r: 1 - r**2, 1)
    exact = 2**s / s * 2 ** (2 + 2 * s) * beta_fn(2 + s, 1 + s)
    val = boundary_functional(K1, f, np.array([1.0]), np.array([-1.0]))
    assert val == pytest.approx(exact, rel=1e-6)


def test_boundary_functional_sign_and_zero():
    e = np.array([1.0])
    assert boundary_functional(K1, zero_field(1), e, -e) == 0.0
    assert boundary_functional(K1, bump_field(1, radius=0.5), e, -e) > 0
    with pytest.raises(InwardDirectionError):
        boundary_functional(K1, bump_field(1), e, e)


def test_goa_limit_zero_datum():
    table = verify_goa_limit(K1, zero_field(1), np.array([1.0]), np.array([-1.0]), [1e-2])
    assert not table.defined and table.rows() == []


def test_goa_limit_n1():
    table = verify_goa_limit(K1, bump_field(1, radius=0.8), np.array([1.0]), np.array([-1.0]), [1e-2, 1e-3, 1e-4])
    assert 0.98 <= table.ratio[-1] <= 1.02
    assert table.is_settling()
