import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma as sp_gamma

from fracapprox.constants import (
    check_order,
    gamma,
    green_constant,
    normalization_constant,
    sphere_area,
    torsion_constant,
)


def test_gamma_known_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-13)


@given(st.floats(0.05, 50.0))
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(sp_gamma(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_gamma_domain(x):
    with pytest.raises(ValueError):
        gamma(x)


def test_normalization_constant_values():
    assert normalization_constant(1, 0.5) == pytest.approx(1.0 / math.pi, rel=1e-12)
    assert normalization_constant(2, 0.5) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-12)


def test_green_constant_values():
    assert green_constant(1, 0.5) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-12)
    assert green_constant(2, 0.5) == pytest.approx(1.0 / (2.0 * math.pi**2), rel=1e-12)


@given(st.integers(1, 4), st.floats(0.01, 0.99))
def test_constants_positive(n, s):
    assert normalization_constant(n, s) > 0
    assert green_constant(n, s) > 0
    assert torsion_constant(n, s) > 0


def test_normalization_vanishes_at_ends():
    assert normalization_constant(1, 1e-6) < 1e-5
    assert normalization_constant(2, 1 - 1e-7) < 1e-5


def test_torsion_and_sphere():
    assert torsion_constant(1, 0.5) == pytest.approx(1.0, rel=1e-13)
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_order_validation(s):
    with pytest.raises(ValueError):
        check_order(s)
