import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracapprox.eigen import cached_eigenpair
from fracapprox.fields import OperatorSpec, caloric_spec, fractional_spec
from fracapprox.fracop import lambda_residual_at
from fracapprox.spanner import (
    DictionaryPolicy,
    RankDeficientSpan,
    assemble_matrix,
    balance_defect,
    balance_rates,
    build_dictionary,
    build_element,
    build_torsion_element,
    combined_field,
    one_hot,
    ode_solve,
    restrict_matrix,
    select_basis,
    span_solve,
)

PAIR = cached_eigenpair(1, 0.5)
CAL = caloric_spec(0.5)
FRAC = fractional_spec(0.5)


def test_ode_first_order():
    sol = ode_solve(1, 1, 6)
    y = np.linspace(0, 2, 5)
    assert np.allclose(sol(y), np.exp(-y), atol=1e-14)
    assert sol.table == tuple((-1.0) ** i for i in range(7))


def test_ode_oscillator():
    sol = ode_solve(2, 1, 6)
    y = np.linspace(0, 3, 7)
    assert np.allclose(sol(y), np.cos(y) + np.sin(y), atol=1e-14)
    assert sol.table[:5] == (1.0, 1.0, -1.0, -1.0, 1.0)


@given(st.integers(1, 4), st.sampled_from([-1.0, 1.0]))
def test_ode_table_properties(m, a):
    sol = ode_solve(m, a, 20)
    tab = np.array(sol.table)
    assert np.all(tab[:m] == 1.0)
    assert np.all(tab != 0.0)
    assert np.all(np.abs(tab[m:]) == np.abs(tab[:-m]))
    # analytic derivatives agree with the table at 0
    assert np.allclose([sol.derivative(0.0, j) for j in range(8)], tab[:8], atol=1e-12)


@given(st.integers(1, 3), st.sampled_from([-2.0, 0.5, 3.0]), st.floats(0.1, 5.0), st.floats(-1, 1))
def test_local_factor_equation(m, a, t, x):
    # a d^m v = -|a| t^m v for v(x) = vbar(t x)
    sol = ode_solve(m, np.sign(a), 10)
    lhs = a * t**m * sol.derivative(t * x, m)
    assert lhs == pytest.approx(-abs(a) * t**m * sol(t * x), rel=1e-9, abs=1e-12)


def test_balance_caloric_shape():
    assert balance_rates(CAL, [0.7], [PAIR.lambda_star]) == (pytest.approx(0.7),)
    assert balance_rates(CAL, [1e8], [PAIR.lambda_star]) is not None


def test_balance_rejection_and_defect():
    spec = OperatorSpec(((1.0, 1),), ((3.0, 0.5, 1), (1.0, 0.5, 1)))
    assert balance_rates(spec, [0.5], [PAIR.lambda_star, PAIR.lambda_star]) is None
    rates = balance_rates(spec, [10.0], [PAIR.lambda_star, PAIR.lambda_star])
    assert rates[0] == PAIR.lambda_star and rates[1] > 0
    assert abs(balance_defect(spec, [10.0], rates)) <= 1e-12
    with pytest.raises(ValueError):
        balance_rates(OperatorSpec(((1.0, 1),), ((-1.0, 0.5, 1),)), [1.0], [1.0])


def _caloric_element(t=2.0, eps=0.3):
    lam = t
    r = (PAIR.lambda_star / lam) ** 1.0
    return build_element(CAL, [t], [[r]], [[-1.0]], eps * r, [PAIR])


def test_build_element_geometry_checks():
    with pytest.raises(ValueError):
        build_element(CAL, [2.0], [[1.0]], [[-1.0]], 0.1, [PAIR])  # not on the sphere
    r = PAIR.lambda_star / 2.0
    with pytest.raises(ValueError):
        build_element(CAL, [2.0], [[r]], [[1.0]], 0.1, [PAIR])  # outward offset
    with pytest.raises(ValueError):
        build_element(CAL, [2.0], [[r]], [[-1.0]], 5.0, [PAIR])  # centre leaves the ball


def test_element_is_lambda_harmonic_near_origin(rng):
    w = _caloric_element()
    f = w.field()
    R = w.neighborhood
    assert R > 0
    for _ in range(10):
        p = rng.uniform(-1, 1, 2)
        p *= 0.1 * R * rng.uniform() / np.linalg.norm(p)
        assert abs(float(lambda_residual_at(CAL, f, p))) <= 1e-3


def test_element_compact_support():
    w = _caloric_element()
    far = np.array([[w.support_radius + 0.1, 0.0], [0.0, w.support_radius + 0.1]])
    assert np.all(w(far) == 0.0)


def test_torsion_element_harmonic_and_even():
    w = build_torsion_element(FRAC, [1.5], [[1.5]], [[-1.0]], 1.5)  # centre at the origin
    p = np.array([[0.0]])
    assert w.jet(p, 3).derivative((1,))[0] == pytest.approx(0.0, abs=1e-14)
    assert w.jet(p, 3).derivative((3,))[0] == pytest.approx(0.0, abs=1e-14)
    for x in (0.0, 0.1, -0.2):
        assert abs(float(lambda_residual_at(FRAC, w.field(), np.array([x])))) <= 1e-7


def test_element_jet_matches_finite_differences():
    w = _caloric_element()
    p = np.array([[0.01, -0.02]])
    h = 1e-5
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (w(p + e) - w(p - e)) / (2 * h)
        alpha = tuple(int(i == axis) for i in range(2))
        assert w.derivative(p, alpha)[0] == pytest.approx(fd[0], rel=1e-7)


@pytest.mark.parametrize("spec", [FRAC, CAL], ids=["d0", "d1"])
def test_rank_at_K3(spec):
    dic = build_dictionary(spec, 3, [PAIR])
    assert len(dic) <= 500
    M = assemble_matrix(dic, 3)
    assert M.matrix.shape[1] == M.K_prime == math.comb(3 + spec.nu, spec.nu)
    assert M.numerical_rank() == M.K_prime
    assert M.rank_ratio >= 1e-8


def test_rank_nondecreasing_in_elements():
    dic = build_dictionary(CAL, 3, [PAIR])
    ranks = [assemble_matrix(dic.subset(np.arange(m)), 3).numerical_rank() for m in (5, 20, 60, len(dic))]
    assert ranks == sorted(ranks)
    assert ranks[-1] == 10


def test_assemble_is_pure_and_duplicates_rows():
    dic = build_dictionary(FRAC, 3, [PAIR])
    sub = dic.subset([3, 3, 7])
    M = assemble_matrix(sub, 3).matrix
    assert np.array_equal(M[0], M[1])
    assert np.array_equal(M, assemble_matrix(sub, 3).matrix)
    assert np.array_equal(M, assemble_matrix([dic[3], dic[3], dic[7]], 3).matrix)


def test_span_solve_targets():
    dic = build_dictionary(CAL, 3, [PAIR])
    M = assemble_matrix(dic, 3)
    assert np.all(span_solve(M, np.zeros(M.K_prime)) == 0.0)
    for iota in [(0, 0), (1, 0), (0, 2), (1, 2)]:
        target = one_hot(M, iota)
        c = span_solve(M, target)
        got = M.matrix.T @ c
        assert got[M.column(iota)] == pytest.approx(1.0, abs=1e-8)
        assert np.max(np.abs(got - target)) <= 1e-8


def test_span_solve_nested_dictionaries():
    dic = build_dictionary(CAL, 3, [PAIR])
    half = assemble_matrix(dic.subset(np.arange(len(dic) // 2)), 3)
    full = assemble_matrix(dic, 3)
    t = one_hot(full, (0, 3))
    r_half = np.linalg.norm(half.matrix.T @ span_solve(half, t) - t)
    r_full = np.linalg.norm(full.matrix.T @ span_solve(full, t) - t)
    assert r_full <= max(r_half, 1e-12) * 10


def test_select_basis_spans_like_full():
    dic = build_dictionary(CAL, 3, [PAIR])
    M = assemble_matrix(dic, 3)
    rows = select_basis(M)
    assert len(rows) == M.numerical_rank(1e-10) == M.K_prime
    sub = restrict_matrix(M, rows)
    for iota in [(0, 0), (1, 1), (0, 3)]:
        t = one_hot(M, iota)
        assert np.max(np.abs(sub.matrix.T @ span_solve(sub, t) - t)) <= 1e-8


def test_rank_deficient_span():
    dic = build_dictionary(CAL, 3, [PAIR])
    M = assemble_matrix(dic.subset([0]), 3)
    with pytest.raises(RankDeficientSpan) as info:
        span_solve(M, one_hot(M, (1, 1)))
    assert info.value.residual > 0


def test_combined_field_residual():
    dic = build_dictionary(FRAC, 3, [PAIR])
    M = assemble_matrix(dic, 3)
    c = span_solve(M, one_hot(M, (2,)))
    f = combined_field(dic, c)
    assert len(f.components) == len(dic)
    R = f.smooth_radius
    for x in (0.0, 0.5 * R):
        assert abs(float(lambda_residual_at(FRAC, f, np.array([x])))) <= 1e-6


def test_policy_from_file(tmp_path):
    p = tmp_path / "d.ini"
    p.write_text("[dictionary]\nfractions = 0.3, 0.1\nmax_elements = 50\nseed = 4\n")
    pol = DictionaryPolicy.from_file(str(p))
    assert pol.fractions == (0.3, 0.1) and pol.max_elements == 50 and pol.seed == 4
    dic = build_dictionary(CAL, 3, [PAIR], pol)
    assert len(dic) <= 50
    with pytest.raises(KeyError):
        DictionaryPolicy.from_mapping({"nope": 1})


def test_dictionary_balance_invariant():
    dic = build_dictionary(CAL, 3, [PAIR])
    for i in range(0, len(dic), 17):
        w = dic[i]
        assert abs(balance_defect(CAL, w.t, w.rates)) <= 1e-12
        assert w.rates[-1] > 0
