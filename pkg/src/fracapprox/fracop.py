"""Pointwise evaluation of (-Delta)^s and of the mixed operator Lambda.

With ``D(y) = u(x + y) + u(x - y) - 2 u(x)`` the principal value integral is

    (-Delta)^s u(x) = -C(n, s)/2 * int D(y) |y|^(-n-2s) dy,

written in polar coordinates over a half sphere of directions. Near ``y = 0``
the quotient ``D/rho^2`` is bounded and is integrated against ``rho^(1-2s)``
by Gauss-Jacobi; further out panelled tanh-sinh is used up to the support of
the field, and the remaining far field (where only ``-2u(x)`` survives) is
added in closed form.
"""

import math

import numpy as np

from .constants import check_order, normalization_constant
from .fields import ScalarField
from .quadrature import DEFAULT_QUAD, clean_breaks, gauss_jacobi, panel_nodes


class OutsideSmoothRegion(ValueError):
    """The evaluation point (or its stencil) leaves the field's smooth ball."""


class Estimate(float):
    """A float carrying a quadrature error estimate and a convergence flag."""

    def __new__(cls, value, error=0.0, converged=True):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        obj.converged = bool(converged)
        return obj

    def __repr__(self):
        flag = "" if self.converged else ", not converged"
        return f"Estimate({float(self)!r}, error={self.error:.2e}{flag})"


def _termwise(op, field, *args):
    parts = []
    for coef, comp in field.components:
        if coef == 0.0:
            continue
        v = op(comp, *args)
        parts.append(Estimate(coef * float(v), abs(coef) * v.error, v.converged))
    return _combine(parts)


def _combine(parts):
    val = sum(float(p) for p in parts)
    err = sum(getattr(p, "error", 0.0) for p in parts)
    ok = all(getattr(p, "converged", True) for p in parts)
    return Estimate(val, err, ok)


def _line_hits(p, omega, center, radius):
    """Signed parameters ``rho`` with ``|p + rho*omega - center| = radius``."""
    q = p - center
    b = float(np.dot(omega, q))
    disc = b * b - float(np.dot(q, q)) + radius * radius
    if disc <= 0.0:
        return []
    r = math.sqrt(disc)
    return [-b - r, -b + r]


def _radial_breaks(x, omega, spheres, lo, hi):
    pts = []
    for c, R in spheres:
        for rho in _line_hits(x, omega, c, R):
            pts.append(abs(rho))
    return clean_breaks(lo, hi, pts)


def _outer_radial(u, x, u0, omegas, spheres, lo, hi, s, level):
    """``int_lo^hi D(rho*omega) rho^(-1-2s) drho`` for each row of ``omegas``."""
    out = np.empty(len(omegas))
    for i, om in enumerate(omegas):
        br = _radial_breaks(x, om, spheres, lo, hi)
        rho, w, _ = panel_nodes(br, level)
        pts_p = x[None, :] + rho[:, None] * om[None, :]
        pts_m = x[None, :] - rho[:, None] * om[None, :]
        vals = u(np.vstack([pts_p, pts_m]))
        m = len(rho)
        D = vals[:m] + vals[m:] - 2.0 * u0
        out[i] = np.dot(w, D * rho ** (-1.0 - 2.0 * s))
    return out


def _tangent_angles(x, spheres):
    """Directions (angles mod pi) along which a line through ``x`` is tangent
    to one of the circles; the angular integrand has kinks there."""
    angs = []
    for c, R in spheres:
        p = c - x
        dist = float(np.hypot(p[0], p[1]))
        if dist <= R or dist == 0.0:
            continue
        base = math.atan2(p[1], p[0])
        half = math.asin(R / dist)
        for a in (base - half, base + half):
            angs.append(a % math.pi)
    return angs


def frac_laplacian_at(field: ScalarField, x, s, quad=DEFAULT_QUAD):
    """(-Delta)^s field at the point ``x`` (dimension 1 or 2).

    Returns an :class:`Estimate` whose ``error`` is the difference between two
    consecutive tanh-sinh levels of the outer integral.
    """
    if field.components:
        return _termwise(frac_laplacian_at, field, x, s, quad)
    s = check_order(s)
    n = field.dim
    if n not in (1, 2):
        raise ValueError("fractional blocks of dimension 1 or 2 only")
    x = np.asarray(x, dtype=float).reshape(n)
    gap = field.distance_to_smooth_boundary(x)
    if gap <= 0.0:
        raise OutsideSmoothRegion(f"point {x} is outside the smooth region of the field")
    delta = 0.5 * min(quad.delta_cap, gap)
    u = field
    u0 = float(u(x[None, :])[0])
    C = normalization_constant(n, s)

    T = float(np.linalg.norm(x)) + field.support_radius
    if quad.truncation_radius is not None:
        T = max(T, quad.truncation_radius)
    T = max(T, 2.0 * delta)
    spheres = [(np.asarray(b.center, dtype=float), float(b.radius)) for b in field.breaks]

    # inner disc: D / rho^2 against rho^(1 - 2s) drho
    y, wy = gauss_jacobi(quad.inner_nodes, 0.0, 1.0 - 2.0 * s)
    rho_in = 0.5 * delta * (1.0 + y)
    w_in = wy * (0.5 * delta) ** (2.0 - 2.0 * s)
    if n == 1:
        omegas = np.array([[1.0]])
        ang_w = np.array([1.0])
    else:
        k = quad.angular_nodes
        th = np.pi * np.arange(k) / k
        omegas = np.column_stack([np.cos(th), np.sin(th)])
        ang_w = np.full(k, np.pi / k)
    pts = x[None, None, :] + rho_in[None, :, None] * omegas[:, None, :]
    ptm = x[None, None, :] - rho_in[None, :, None] * omegas[:, None, :]
    m = pts.shape[0] * pts.shape[1]
    vals = u(np.vstack([pts.reshape(m, n), ptm.reshape(m, n)]))
    D = (vals[:m] + vals[m:] - 2.0 * u0).reshape(len(omegas), len(rho_in))
    inner = float(np.dot(ang_w, (D / rho_in[None, :] ** 2) @ w_in))

    half_measure = 1.0 if n == 1 else math.pi
    tail = 2.0 * u0 * T ** (-2.0 * s) / (2.0 * s) * half_measure

    def outer(level):
        if n == 1:
            return float(_outer_radial(u, x, u0, omegas, spheres, delta, T, s, level)[0])
        br = clean_breaks(0.0, math.pi, _tangent_angles(x, spheres))
        th, wth, _ = panel_nodes(br, level)
        oms = np.column_stack([np.cos(th), np.sin(th)])
        return float(np.dot(wth, _outer_radial(u, x, u0, oms, spheres, delta, T, s, level)))

    prev = None
    level = quad.min_level if n == 1 else max(quad.min_level - 1, 1)
    top = quad.max_level if n == 1 else max(quad.max_level - 1, level + 1)
    while True:
        val = outer(level)
        if prev is not None:
            err = abs(val - prev)
            scale = max(abs(val), abs(inner), abs(tail), 1e-300)
            if err <= quad.tol * scale or level >= top:
                conv = err <= quad.tol * scale
                break
        prev = val
        level += 1
    total = -C * (inner + val) + C * tail
    return Estimate(total, C * err, conv)


def fornberg_weights(order, offsets):
    """Finite-difference weights for the ``order``-th derivative at 0 on the
    given stencil offsets (Fornberg's recursion)."""
    z = np.asarray(offsets, dtype=float)
    npts = len(z)
    c = np.zeros((npts, order + 1))
    c1 = 1.0
    c4 = z[0]
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def central_stencil(order, accuracy=4):
    """Offsets and weights of the central difference for ``order`` with the
    given (even) accuracy order."""
    half = (order + 1) // 2 - 1 + accuracy // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    return offsets, fornberg_weights(order, offsets)


def local_derivative(field: ScalarField, point, axis, order, h=None):
    """``d^order/dx_axis^order field`` at ``point``; analytic when the field
    provides derivatives, otherwise 4th-order central differences."""
    point = np.asarray(point, dtype=float)
    if field.derivative is not None:
        alpha = [0] * field.dim
        alpha[axis] = order
        return float(np.asarray(field.derivative(point[None, :], tuple(alpha))).reshape(-1)[0])
    if h is None:
        h = 1e-3 * field.smooth_radius
    offsets, w = central_stencil(order)
    reach = float(np.max(np.abs(offsets))) * h
    if field.distance_to_smooth_boundary(point) <= reach:
        raise OutsideSmoothRegion("finite-difference stencil leaves the smooth region")
    pts = np.repeat(point[None, :], len(offsets), axis=0)
    pts[:, axis] += offsets * h
    return float(np.dot(w, field(pts))) / h**order


def block_slice(field: ScalarField, point, axes):
    """The restriction of ``field`` to the affine slice through ``point`` in
    which only the coordinates ``axes`` vary, as a field on R^len(axes)."""
    point = np.asarray(point, dtype=float)
    axes = list(axes)
    others = [i for i in range(field.dim) if i not in axes]
    off = point[others]
    cen = np.asarray(field.center, dtype=float)
    sm2 = field.smooth_radius**2 - float(np.sum((off - cen[others]) ** 2))
    sup2 = field.support_radius**2 - float(np.sum(off**2))
    if sm2 <= 0.0:
        raise OutsideSmoothRegion("slice misses the smooth region")
    base = point.copy()

    def ev(p):
        p = np.atleast_2d(p)
        full = np.repeat(base[None, :], len(p), axis=0)
        full[:, axes] = p
        return field.evaluator(full)

    breaks = []
    for b in field.breaks:
        tr = b.restrict(point, axes)
        if tr is not None:
            breaks.append(type(b)(tuple(tr[0]), tr[1], tuple(range(len(axes)))))
    return ScalarField(
        evaluator=ev,
        dim=len(axes),
        support_radius=math.sqrt(sup2) if sup2 > 0 else 1e-300,
        smooth_radius=math.sqrt(sm2),
        center=tuple(cen[axes]),
        breaks=tuple(breaks),
    ), sup2 > 0


def lambda_residual_at(spec, field: ScalarField, point, quad=DEFAULT_QUAD):
    """``Lambda field`` at ``point`` for the mixed operator ``spec``."""
    if field.dim != spec.nu:
        raise ValueError("field dimension does not match the operator")
    point = np.asarray(point, dtype=float).reshape(field.dim)
    if field.components:
        return _termwise(lambda f, p: lambda_residual_at(spec, f, p, quad), field, point)
    parts = []
    for j, (a, m) in enumerate(spec.local_terms):
        parts.append(Estimate(a * local_derivative(field, point, j, m)))
    for j, (A, s, n) in enumerate(spec.nonlocal_terms):
        if A == 0.0:
            continue
        axes = spec.block_axes(j)
        sl, nonempty = block_slice(field, point, axes)
        if not nonempty:
            continue
        val = frac_laplacian_at(sl, point[list(axes)], s, quad)
        parts.append(Estimate(A * float(val), abs(A) * val.error, val.converged))
    return _combine(parts)
