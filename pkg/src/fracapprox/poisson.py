"""Fractional Dirichlet problem in the unit ball by Green representation."""

import dataclasses

import numpy as np

from .constants import check_dim, check_order, green_constant
from .fields import ScalarField
from .green import (
    GreenKernel,
    LimitTable,
    _check_inward,
    boundary_functional,
    green_integral,
)
from .quadrature import DEFAULT_QUAD


@dataclasses.dataclass(frozen=True)
class DirichletSolution:
    """u = kappa(n, s) * int f(z) G(x, z) dz, zero outside the ball."""

    n: int
    s: float
    rhs: ScalarField
    kernel: GreenKernel

    @property
    def provenance(self):
        q = self.kernel.quad
        return {
            "n": self.n,
            "s": self.s,
            "series_terms": self.kernel.series_terms,
            "t_nodes": self.kernel.t_nodes,
            "substitution": self.kernel.substitution,
            "min_level": q.min_level,
            "max_level": q.max_level,
            "tol": q.tol,
        }

    def value(self, x):
        x = np.asarray(x, dtype=float).reshape(self.n)
        if float(np.dot(x, x)) >= 1.0:
            return 0.0
        return green_constant(self.n, self.s) * green_integral(self.kernel, self.rhs, x)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if self.n == 1:
            pts = pts.reshape(-1, 1)
        pts = np.atleast_2d(pts)
        return np.array([self.value(p) for p in pts])


def solve(n, s, f: ScalarField, quad=DEFAULT_QUAD, **kernel_options):
    """Solution of (-Delta)^s u = f in B_1, u = 0 outside, for data supported
    in the closed ball."""
    n = check_dim(n)
    s = check_order(s)
    if f.dim != n:
        raise ValueError("datum dimension does not match n")
    return DirichletSolution(n, s, f, GreenKernel(n, s, quad=quad, **kernel_options))


def boundary_limit(sol: DirichletSolution, e, omega, eps_sequence):
    """Rows (eps, eps^(-s) u(e + eps*omega), boundary constant, ratio)."""
    e, omega, _ = _check_inward(e, omega)
    rhs = green_constant(sol.n, sol.s) * boundary_functional(sol.kernel, sol.rhs, e, omega)
    eps = [float(v) for v in eps_sequence]
    lhs = [v ** (-sol.s) * sol.value(e + v * omega) for v in eps]
    if rhs == 0.0:
        return LimitTable(eps, lhs, [0.0] * len(eps), [float("nan")] * len(eps), defined=False)
    return LimitTable(eps, lhs, [rhs] * len(eps), [v / rhs for v in lhs])


def sampled_rhs(values_at, n, nodes=33):
    """Radial datum interpolated from samples ``values_at(r)`` at Chebyshev
    points of [0, 1); used to feed operator evaluations back into the solver."""
    k = np.arange(nodes)
    r = 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / nodes))
    vals = np.array([float(values_at(ri)) for ri in r])
    cheb = np.polynomial.chebyshev.Chebyshev.fit(r, vals, nodes - 1, domain=[0.0, 1.0])

    def ev(p):
        rr = np.linalg.norm(np.atleast_2d(p), axis=1)
        return np.where(rr < 1.0, cheb(np.minimum(rr, 1.0)), 0.0)

    from .fields import Sphere

    return ScalarField(
        evaluator=ev,
        dim=n,
        support_radius=1.0,
        smooth_radius=1.0,
        breaks=(Sphere((0.0,) * n, 1.0, tuple(range(n))),),
    )
