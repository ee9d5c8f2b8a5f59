import numpy as np
import pytest

from fracapprox.constants import torsion_constant
from fracapprox.fields import bump_field, torsion_field, zero_field
from fracapprox.fracop import frac_laplacian_at
from fracapprox.poisson import boundary_limit, sampled_rhs, solve


def test_zero_datum():
    sol = solve(1, 0.5, zero_field(1))
    assert np.all(sol(np.array([0.0, 0.5])) == 0.0)


def test_constant_datum_gives_torsion():
    s = 0.4
    sol = solve(1, s, sampled_rhs(lambda r: 1.0, 1))
    x = np.array([0.0, 0.3, 0.7])
    assert np.allclose(sol(x), (1 - x**2) ** s / torsion_constant(1, s), rtol=1e-8)


def test_round_trip_through_fracop():
    s = 0.5
    prof = torsion_field(1, s)
    rhs = sampled_rhs(lambda r: float(frac_laplacian_at(prof, np.array([r]), s)), 1)
    sol = solve(1, s, rhs)
    x = np.linspace(0, 0.8, 5)
    assert np.allclose(sol(x), (1 - x**2) ** s, rtol=1e-3)


def test_symmetry_and_linearity():
    f = bump_field(1, radius=0.6)
    g = torsion_field(1, 0.5)
    s = 0.6
    uf, ug = solve(1, s, f), solve(1, s, g)
    assert uf.value([0.3]) == pytest.approx(uf.value([-0.3]), rel=1e-10)
    from fracapprox.fields import linear_combination

    h = solve(1, s, linear_combination([f, g], [2.0, -0.5]))
    assert h.value([0.2]) == pytest.approx(2 * uf.value([0.2]) - 0.5 * ug.value([0.2]), rel=1e-8)


def test_comparison_principle():
    small = bump_field(1, radius=0.5, height=0.5)
    big = bump_field(1, radius=0.5, height=1.0)
    x = np.linspace(-0.9, 0.9, 7)
    assert np.all(solve(1, 0.5, small)(x) <= solve(1, 0.5, big)(x))


def test_boundary_limit_bounded():
    sol = solve(1, 0.5, bump_field(1, radius=0.8))
    table = boundary_limit(sol, np.array([1.0]), np.array([-1.0]), [1e-2, 1e-3, 1e-4])
    assert all(0 < v < 10 for v in table.lhs)
    assert table.ratio[-1] == pytest.approx(1.0, abs=0.02)


def test_boundary_limit_zero_datum():
    sol = solve(1, 0.5, zero_field(1))
    table = boundary_limit(sol, np.array([1.0]), np.array([-1.0]), [1e-2])
    assert not table.defined


def test_dimension_check():
    with pytest.raises(ValueError):
        solve(2, 0.5, zero_field(1))
