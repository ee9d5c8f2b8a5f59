"""Domain types: scalar fields on R^n and the mixed operator specification."""

import dataclasses
from typing import Callable, Optional

import numpy as np

from .constants import check_order


@dataclasses.dataclass(frozen=True)
class Sphere:
    """A sphere ``{p : |p[axes] - center| = radius}`` across which a field is
    not smooth (support boundaries of eigenfunctions, cusps of torsion
    profiles). Used only to place quadrature breakpoints."""

    center: tuple
    radius: float
    axes: tuple

    def restrict(self, point, axes):
        """The trace of this sphere on the slice through ``point`` that varies
        only the coordinates ``axes``; ``None`` when it does not cut the slice
        in a sphere."""
        mine = set(self.axes)
        block = list(axes)
        if not mine.intersection(block):
            return None
        if not set(block).issubset(mine):
            return None
        pos = {a: i for i, a in enumerate(self.axes)}
        c = np.asarray(self.center, dtype=float)
        other = [a for a in self.axes if a not in block]
        rem = self.radius**2 - sum((point[a] - c[pos[a]]) ** 2 for a in other)
        if rem <= 0.0:
            return None
        return np.array([c[pos[a]] for a in block]), float(np.sqrt(rem))


@dataclasses.dataclass(frozen=True)
class ScalarField:
    """A real field on R^dim.

    ``evaluator`` maps an ``(m, dim)`` array of points to ``m`` values and is
    assumed to vanish outside the ball of radius ``support_radius`` about the
    origin; the field is C^2 (at least) on the ball of radius ``smooth_radius``
    about ``center``. ``derivative(points, alpha)``, when given, returns
    analytic partial derivatives. ``components`` optionally lists
    ``(coef, field)`` summands so that linear operators can be applied term by
    term, each with its own breakpoints.
    """

    evaluator: Callable
    dim: int
    support_radius: float
    smooth_radius: float
    center: tuple = None
    breaks: tuple = ()
    derivative: Optional[Callable] = None
    components: tuple = ()

    def __post_init__(self):
        if self.support_radius <= 0 or self.smooth_radius <= 0:
            raise ValueError("support_radius and smooth_radius must be positive")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * self.dim)
        if len(self.center) != self.dim:
            raise ValueError("center has the wrong dimension")

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if single and self.dim > 1 and pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        if self.dim == 1 and pts.shape[1] != 1:
            pts = pts.reshape(-1, 1)
        vals = np.asarray(self.evaluator(pts), dtype=float).reshape(-1)
        outside = np.einsum("ij,ij->i", pts, pts) > self.support_radius**2
        vals = np.where(outside, 0.0, vals)
        return vals[0] if single and len(vals) == 1 else vals

    def distance_to_smooth_boundary(self, x):
        return self.smooth_radius - float(np.linalg.norm(np.asarray(x) - np.asarray(self.center)))

    def scaled(self, factor):
        """``factor * field`` with the same geometry."""
        ev = self.evaluator
        der = self.derivative
        return dataclasses.replace(
            self,
            evaluator=lambda p: factor * np.asarray(ev(p)),
            derivative=None if der is None else (lambda p, a: factor * np.asarray(der(p, a))),
        )

    def translated(self, shift):
        """The field ``x -> field(x - shift)``."""
        shift = np.asarray(shift, dtype=float).reshape(self.dim)
        ev = self.evaluator
        der = self.derivative
        breaks = tuple(
            Sphere(
                tuple(np.asarray(b.center) + shift[list(b.axes)]), b.radius, b.axes
            )
            for b in self.breaks
        )
        return ScalarField(
            evaluator=lambda p: ev(np.atleast_2d(p) - shift),
            dim=self.dim,
            support_radius=self.support_radius + float(np.linalg.norm(shift)),
            smooth_radius=self.smooth_radius,
            center=tuple(np.asarray(self.center) + shift),
            breaks=breaks,
            derivative=None if der is None else (lambda p, a: der(np.atleast_2d(p) - shift, a)),
        )


def linear_combination(fields, coefs):
    """``sum_i coefs[i] * fields[i]`` as a single field."""
    fields = list(fields)
    coefs = [float(c) for c in coefs]
    if not fields:
        raise ValueError("need at least one field")
    dim = fields[0].dim

    def ev(p):
        return sum(c * np.asarray(f.evaluator(p)) for c, f in zip(coefs, fields))

    smooth = min(
        f.smooth_radius - float(np.linalg.norm(np.asarray(f.center) - np.asarray(fields[0].center)))
        for f in fields
    )
    if smooth <= 0:
        raise ValueError("fields have no common smooth region")
    ders = [f.derivative for f in fields]
    der = None
    if all(d is not None for d in ders):
        def der(p, a):
            return sum(c * np.asarray(d(p, a)) for c, d in zip(coefs, ders))
    return ScalarField(
        evaluator=ev,
        dim=dim,
        support_radius=max(f.support_radius for f in fields),
        smooth_radius=smooth,
        center=fields[0].center,
        breaks=(),
        derivative=der,
        components=tuple(zip(coefs, fields)),
    )


def anisotropic_scaling(field, factor, scales, smooth_radius):
    """The field ``p -> factor * field(scales * p)``.

    ``scales`` holds one positive factor per coordinate and must be constant
    on the axes of every break sphere. ``smooth_radius`` is the (caller
    supplied) radius about the origin on which the result is smooth.
    """
    scales = np.asarray(scales, dtype=float).reshape(field.dim)
    ev = field.evaluator
    der = field.derivative
    breaks = []
    for b in field.breaks:
        sc = scales[list(b.axes)]
        if not np.allclose(sc, sc[0]):
            raise ValueError("break spheres must lie in isotropically scaled blocks")
        breaks.append(Sphere(tuple(np.asarray(b.center) / sc[0]), b.radius / sc[0], b.axes))

    def new_der(p, alpha):
        weight = float(np.prod(scales ** np.asarray(alpha)))
        return factor * weight * np.asarray(der(np.atleast_2d(p) * scales, alpha))

    return ScalarField(
        evaluator=lambda p: factor * np.asarray(ev(np.atleast_2d(p) * scales)),
        dim=field.dim,
        support_radius=field.support_radius / float(np.min(scales)),
        smooth_radius=smooth_radius,
        breaks=tuple(breaks),
        derivative=None if der is None else new_der,
    )


def zero_field(dim, radius=1.0):
    return ScalarField(
        evaluator=lambda p: np.zeros(len(np.atleast_2d(p))),
        dim=dim,
        support_radius=radius,
        smooth_radius=radius,
        derivative=lambda p, a: np.zeros(len(np.atleast_2d(p))),
    )


def radial_field(profile, dim, radius=1.0, smooth_radius=None):
    """Field ``x -> profile(|x|)`` supported in the ball of ``radius``."""

    def ev(p):
        r = np.linalg.norm(np.atleast_2d(p), axis=1)
        out = np.zeros_like(r)
        inside = r < radius
        out[inside] = profile(r[inside])
        return out

    return ScalarField(
        evaluator=ev,
        dim=dim,
        support_radius=radius,
        smooth_radius=radius if smooth_radius is None else smooth_radius,
        breaks=(Sphere((0.0,) * dim, radius, tuple(range(dim))),),
    )


def torsion_field(dim, s, radius=1.0):
    """``(radius^2 - |x|^2)_+^s``, the profile used by the round-trip checks."""
    s = check_order(s)
    return radial_field(lambda r: (radius**2 - r**2) ** s, dim, radius)


def bump_field(dim, center=None, radius=0.5, height=1.0):
    """Smooth bump ``height * exp(1 - 1/(1 - |x - c|^2/radius^2))``."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def ev(p):
        q = np.einsum("ij,ij->i", np.atleast_2d(p) - c, np.atleast_2d(p) - c) / radius**2
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out

    return ScalarField(
        evaluator=ev,
        dim=dim,
        support_radius=float(np.linalg.norm(c)) + radius,
        smooth_radius=float(np.linalg.norm(c)) + radius + 1.0,
        breaks=(),
    )


@dataclasses.dataclass(frozen=True)
class OperatorSpec:
    """Lambda = sum_j a_j d^{m_j}/dx_j^{m_j} + sum_j A_j (-Delta_{X_j})^{s_j}.

    Variables are ordered ``(x_1, ..., x_d, X_1, ..., X_N)`` with block ``X_j``
    of dimension ``n_j``.
    """

    local_terms: tuple = ()
    nonlocal_terms: tuple = ()

    def __post_init__(self):
        loc = tuple((float(a), int(m)) for a, m in self.local_terms)
        nonloc = tuple((float(A), check_order(s), int(n)) for A, s, n in self.nonlocal_terms)
        object.__setattr__(self, "local_terms", loc)
        object.__setattr__(self, "nonlocal_terms", nonloc)
        if not nonloc:
            raise ValueError("at least one nonlocal term is required")
        if all(A == 0.0 for A, _, _ in nonloc):
            raise ValueError("the nonlocal coefficients cannot all vanish")
        if loc and all(a == 0.0 for a, _ in loc):
            raise ValueError("the local coefficients cannot all vanish")
        if any(m < 1 for _, m in loc):
            raise ValueError("local orders must be positive")
        if any(n < 1 for _, _, n in nonloc):
            raise ValueError("block dimensions must be positive")

    @property
    def d(self):
        return len(self.local_terms)

    @property
    def N(self):
        return len(self.nonlocal_terms)

    @property
    def nu(self):
        return self.d + sum(n for _, _, n in self.nonlocal_terms)

    def block_axes(self, j):
        """Coordinate indices of the nonlocal block ``X_j`` (0-based ``j``)."""
        start = self.d + sum(n for _, _, n in self.nonlocal_terms[:j])
        return tuple(range(start, start + self.nonlocal_terms[j][2]))

    def scaling_exponents(self):
        """Per-coordinate exponents ``1/m_j`` and ``1/(2 s_j)`` of the
        anisotropic dilation that commutes with Lambda up to a factor."""
        exps = [1.0 / m for _, m in self.local_terms]
        for _, s, n in self.nonlocal_terms:
            exps.extend([1.0 / (2.0 * s)] * n)
        return np.array(exps)

    def normalized(self):
        """Reorder the nonlocal blocks (and flip the overall sign when needed)
        so that the last nonlocal coefficient is positive.

        Returns ``(spec, sign, order)`` where ``order[j]`` is the original index
        of the new block ``j``; the kernel of Lambda is unchanged.
        """
        A = [t[0] for t in self.nonlocal_terms]
        sign = 1.0
        if not any(a > 0 for a in A):
            sign = -1.0
        pos = max(i for i, a in enumerate(A) if sign * a > 0)
        order = [i for i in range(self.N) if i != pos] + [pos]
        loc = tuple((sign * a, m) for a, m in self.local_terms)
        nonloc = tuple(
            (sign * self.nonlocal_terms[i][0],) + self.nonlocal_terms[i][1:] for i in order
        )
        return OperatorSpec(loc, nonloc), sign, order

    def to_dict(self):
        return {
            "local_terms": [list(t) for t in self.local_terms],
            "nonlocal_terms": [list(t) for t in self.nonlocal_terms],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            tuple(tuple(t) for t in data.get("local_terms", ())),
            tuple(tuple(t) for t in data["nonlocal_terms"]),
        )


def caloric_spec(s, n=1):
    """d/dt + (-Delta)^s in R^n, time first."""
    return OperatorSpec(((1.0, 1),), ((1.0, s, n),))


def fractional_spec(s, n=1):
    return OperatorSpec((), ((1.0, s, n),))


def permuted_field(field, perm):
    """The field ``p -> field(p[perm])``; ``perm[i]`` is the coordinate of the
    input point that feeds argument ``i`` of ``field``."""
    perm = np.asarray(perm, dtype=int)
    inv = np.argsort(perm)
    ev = field.evaluator
    der = field.derivative
    breaks = tuple(
        Sphere(b.center, b.radius, tuple(int(perm[a]) for a in b.axes)) for b in field.breaks
    )

    def new_der(p, alpha):
        return der(np.atleast_2d(p)[:, perm], tuple(np.asarray(alpha)[perm]))

    return ScalarField(
        evaluator=lambda p: ev(np.atleast_2d(p)[:, perm]),
        dim=field.dim,
        support_radius=field.support_radius,
        smooth_radius=field.smooth_radius,
        center=tuple(np.asarray(field.center)[inv]),
        breaks=breaks,
        derivative=None if der is None else new_der,
        components=tuple((c, permuted_field(f, perm)) for c, f in field.components),
    )
