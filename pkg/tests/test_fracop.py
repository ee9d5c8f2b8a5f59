import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fracapprox.constants import normalization_constant, torsion_constant
from fracapprox.eigen import cached_eigenpair, scaled_eigenfunction
from fracapprox.fields import (
    bump_field,
    fractional_spec,
    linear_combination,
    torsion_field,
    zero_field,
)
from fracapprox.fracop import (
    OutsideSmoothRegion,
    central_stencil,
    frac_laplacian_at,
    lambda_residual_at,
    local_derivative,
)


def test_zero_field():
    assert float(frac_laplacian_at(zero_field(1), np.array([0.2]), 0.5)) == 0.0


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_torsion_identity(n, s):
    f = torsion_field(n, s)
    x = np.full(n, 0.3 / math.sqrt(n))
    val = frac_laplacian_at(f, x, s)
    assert float(val) == pytest.approx(torsion_constant(n, s), rel=1e-7)


def test_torsion_against_brute_force_oracle():
    # (-Delta)^(1/2) (1 - x^2)_+^(1/2) at 0 as C int_0^inf (2 u(0) - 2 u(r)) / r^2 dr
    s = 0.5
    u = lambda r: math.sqrt(max(1 - r * r, 0.0))
    inner, _ = quad(lambda r: (2 - 2 * u(r)) / r**2, 0, 1, limit=200, epsabs=1e-13)
    outer = 2.0  # int_1^inf 2 / r^2 dr
    oracle = normalization_constant(1, s) * (inner + outer)
    assert float(frac_laplacian_at(torsion_field(1, s), np.array([0.0]), s)) == pytest.approx(oracle, rel=1e-3)


def test_even_field_symmetry():
    f = bump_field(1, radius=0.7)
    a = frac_laplacian_at(f, np.array([0.25]), 0.4)
    b = frac_laplacian_at(f, np.array([-0.25]), 0.4)
    assert float(a) == pytest.approx(float(b), rel=1e-9)


@settings(max_examples=6)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-0.3, 0.3))
def test_linearity(a, b, x):
    u = bump_field(1, center=[0.1], radius=0.6)
    v = torsion_field(1, 0.5)
    w = linear_combination([u, v], [a, b])
    p = np.array([x])
    lhs = float(frac_laplacian_at(w, p, 0.5))
    rhs = a * float(frac_laplacian_at(u, p, 0.5)) + b * float(frac_laplacian_at(v, p, 0.5))
    assert lhs == pytest.approx(rhs, rel=1e-7, abs=1e-8)


@settings(max_examples=5)
@given(st.floats(0.5, 3.0), st.floats(0.2, 0.8))
def test_scaling(r, s):
    u = torsion_field(1, s)
    ur = torsion_field(1, s, radius=r)  # (r^2 - x^2)^s = r^(2s) u(x / r)
    x = 0.3
    lhs = float(frac_laplacian_at(ur, np.array([r * x]), s)) / r ** (2 * s)
    rhs = r ** (-2 * s) * float(frac_laplacian_at(u, np.array([x]), s))
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_translation_invariance():
    u = bump_field(1, radius=0.6)
    v = u.translated([0.4])
    a = frac_laplacian_at(u, np.array([0.1]), 0.6)
    b = frac_laplacian_at(v, np.array([0.5]), 0.6)
    assert float(a) == pytest.approx(float(b), rel=1e-8)


def test_outside_smooth_region():
    with pytest.raises(OutsideSmoothRegion):
        frac_laplacian_at(torsion_field(1, 0.5), np.array([1.0]), 0.5)


def test_central_stencil_exact_on_polynomials():
    off, w = central_stencil(2)
    assert np.dot(w, off**2) == pytest.approx(2.0)
    assert np.dot(w, off**4) == pytest.approx(0.0, abs=1e-12)


def test_local_derivative_finite_difference():
    f = bump_field(1, radius=2.0)
    x = np.array([0.3])
    h = 1e-5
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert local_derivative(f, x, 0, 1) == pytest.approx(fd, rel=1e-6)


def test_lambda_residual_zero_and_eigenfunction():
    spec = fractional_spec(0.5)
    assert float(lambda_residual_at(spec, zero_field(1), np.array([0.0]))) == 0.0
    pair = cached_eigenpair(1, 0.5)
    f = scaled_eigenfunction(pair, pair.lambda_star, (0.1,)).field()
    x = np.array([0.2])
    res = float(lambda_residual_at(spec, f, x)) - pair.lambda_star * float(f(x))
    assert abs(res) <= 1e-6
