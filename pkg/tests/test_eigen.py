import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracapprox.constants import green_constant
from fracapprox.eigen import (
    BumpTest,
    EigenConfig,
    EigenNotConverged,
    EigenPair,
    boundary_slope,
    cached_eigenpair,
    kappa_star,
    principal_eigenpair,
    scaled_eigenfunction,
    verify_distributional_derivatives,
    verify_eigen_boundary,
)
from fracapprox.fracop import frac_laplacian_at

# lambda_star frozen from the default configuration (degree 320); degree
# doubling moves them by < 1.5e-11 relative.
LAMBDA = {
    (1, 0.3): 0.99122579878,
    (1, 0.5): 1.1577738837,
    (1, 0.7): 1.48323343195,
    (2, 0.3): 1.44448601775,
    (2, 0.5): 2.0061190329,
    (2, 0.7): 2.95044196337,
}


@pytest.mark.parametrize("key", sorted(LAMBDA))
def test_frozen_eigenvalues(key):
    pair = cached_eigenpair(*key)
    assert pair.lambda_star == pytest.approx(LAMBDA[key], rel=1e-9)
    assert pair.l2_norm() == pytest.approx(1.0, abs=1e-10)
    assert pair.p(0.0) > 0


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_refinement_stable(s):
    coarse = principal_eigenpair(1, s, EigenConfig(degree=160))
    fine = cached_eigenpair(1, s)
    assert abs(coarse.lambda_star - fine.lambda_star) / fine.lambda_star < 1e-4


def test_rayleigh_history_monotone():
    h = np.array(cached_eigenpair(1, 0.5).rayleigh_history)
    assert np.all(np.diff(h) >= -1e-14 * np.abs(h[1:]))


@pytest.mark.parametrize("n", [1, 2])
def test_profile_nonincreasing(n):
    r, phi = cached_eigenpair(n, 0.4).sample_grid(400)
    assert np.all(np.diff(phi) <= 1e-12)
    assert phi[-1] == 0.0


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_residual_via_fracop(s):
    pair = cached_eigenpair(1, s)
    f = pair.field()
    worst = 0.0
    for x in np.linspace(-0.9, 0.9, 7):
        val = float(frac_laplacian_at(f, np.array([x]), s))
        worst = max(worst, abs(val - pair.lambda_star * float(pair(np.array([x]))[0])) / pair.lambda_star)
    assert worst <= 1e-3


def test_residual_at_non_radial_points_2d():
    pair = cached_eigenpair(2, 0.5)
    x = np.array([0.3, -0.4])
    val = float(frac_laplacian_at(pair.field(), x, 0.5))
    assert val == pytest.approx(pair.lambda_star * float(pair(x)[0]), rel=1e-5)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_boundary_slope(s):
    assert abs(boundary_slope(cached_eigenpair(1, s)) - s) <= 0.05


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_kappa_star_oracle(s):
    # 2^s kappa / s int (1+z)^(2s) (1-z)^(2s-1) p(z^2) dz via QUADPACK's algebraic weight
    pair = cached_eigenpair(1, s)
    val, _ = quad(lambda z: pair.p(z * z), -1, 1, weight="alg", wvar=(2 * s - 1, 2 * s), epsabs=1e-13, epsrel=1e-10, limit=400)
    oracle = 2**s * green_constant(1, s) / s * val
    assert pair.kappa_star > 0
    assert pair.kappa_star == pytest.approx(oracle, rel=1e-6)


def test_kappa_star_independent_of_direction(rng):
    pair = cached_eigenpair(2, 0.5)
    vals = []
    for _ in range(3):
        e = rng.normal(size=2)
        vals.append(kappa_star(pair, e / np.linalg.norm(e)))
    assert max(vals) - min(vals) <= 1e-6 * max(vals)


def test_frozen_kappa_star():
    assert cached_eigenpair(1, 0.5).kappa_star == pytest.approx(0.741529080, rel=1e-8)


@pytest.mark.parametrize("n", [1, 2])
def test_boundary_law(n):
    pair = cached_eigenpair(n, 0.5)
    e = np.eye(n)[0]
    table = verify_eigen_boundary(pair, e, -e, [1e-2, 1e-3])
    assert abs(table.ratio[-1] - 1.0) <= 0.03


def test_boundary_outward_is_zero():
    pair = cached_eigenpair(2, 0.5)
    e = np.array([1.0, 0.0])
    for omega in (e, np.array([0.0, 1.0])):
        table = verify_eigen_boundary(pair, e, omega, [1e-2, 1e-3])
        assert all(v == 0.0 for v in table.values)


@pytest.mark.parametrize("alpha", [(0,), (1,)])
def test_distributional_limit(alpha):
    pair = cached_eigenpair(1, 0.5)
    psi = BumpTest((-0.6,), 0.5)
    table = verify_distributional_derivatives(pair, np.array([1.0]), alpha, psi, [1e-2, 1e-3, 1e-4])
    assert abs(table.ratio[-1] - 1.0) <= 0.05


def test_distributional_outward_support_vanishes():
    pair = cached_eigenpair(1, 0.5)
    psi = BumpTest((0.6,), 0.5)
    table = verify_distributional_derivatives(pair, np.array([1.0]), (0,), psi, [1e-3])
    assert table.rhs == 0.0 and table.lhs[0] == 0.0


def test_scaled_eigenfunction_identity():
    pair = cached_eigenpair(1, 0.5)
    sc = scaled_eigenfunction(pair, pair.lambda_star, (0.0,))
    assert sc.radius == pytest.approx(1.0)
    x = np.linspace(-0.9, 0.9, 5)
    assert np.allclose(sc(x), pair(x))


def test_scaled_eigenfunction_residual():
    pair = cached_eigenpair(1, 0.7)
    sc = scaled_eigenfunction(pair, 3.0, (0.2,))
    x = np.array([0.3])
    val = float(frac_laplacian_at(sc.field(), x, 0.7))
    assert val == pytest.approx(3.0 * float(sc(x)[0]), rel=1e-6)


def test_jet_derivative_matches_fd():
    pair = cached_eigenpair(2, 0.3)
    p = np.array([[0.2, -0.1]])
    h = 1e-5
    fd = (pair(p + [h, 0]) - pair(p - [h, 0])) / (2 * h)
    assert pair.derivative(p, (1, 0))[0] == pytest.approx(fd[0], rel=1e-7)


def test_serialization_round_trip():
    pair = cached_eigenpair(1, 0.5)
    back = EigenPair.from_dict(pair.to_dict())
    assert back.lambda_star == pair.lambda_star
    assert np.allclose(back.profile([0.0, 0.5]), pair.profile([0.0, 0.5]))


def test_non_convergence_reported():
    with pytest.raises(EigenNotConverged):
        principal_eigenpair(1, 0.5, EigenConfig(degree=40, max_iter=2))


def test_dimension_limits():
    with pytest.raises(ValueError):
        principal_eigenpair(3, 0.5)
