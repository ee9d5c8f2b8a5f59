import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_jacobi

from fracapprox.jacobi import derivative_coefficients, jacobi_sum, jacobi_table


@given(st.floats(-0.9, 2.0), st.floats(-0.9, 2.0))
def test_table_matches_scipy(a, b):
    y = np.linspace(-1, 1, 7)
    T = jacobi_table(6, a, b, y)
    for k in range(6):
        assert np.allclose(T[k], eval_jacobi(k, a, b, y), rtol=1e-11, atol=1e-12)


def test_clenshaw_sum(rng):
    c = rng.normal(size=9)
    y = np.linspace(-1, 1, 11)
    ref = sum(ck * eval_jacobi(k, 0.5, -0.5, y) for k, ck in enumerate(c))
    assert np.allclose(jacobi_sum(c, 0.5, -0.5, y), ref, rtol=1e-12, atol=1e-12)


def test_derivative_coefficients(rng):
    c = rng.normal(size=6)
    y = np.linspace(-0.9, 0.9, 5)
    h = 1e-5
    fd = (jacobi_sum(c, 0.3, 0.2, y + h) - jacobi_sum(c, 0.3, 0.2, y - h)) / (2 * h)
    d = derivative_coefficients(c, 0.3, 0.2, 1)
    assert np.allclose(jacobi_sum(d, 1.3, 1.2, y), fd, rtol=1e-7, atol=1e-8)
