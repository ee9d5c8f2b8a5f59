"""Truncated multivariate Taylor arithmetic ("jets") with a batch axis.

A jet stores Taylor coefficients ``c[b, a_1, ..., a_v] = d^a f / a!`` of a
function at a batch of base points, truncated at total degree ``K``. Products
and compositions with univariate series give exact derivatives of the
factorized dictionary elements without finite differences.
"""

import itertools
import math

import numpy as np


def multi_indices(nvars, K):
    """All multi-indices with |a| <= K ordered by (|a|, a) lexicographically."""
    out = []
    for deg in range(K + 1):
        block = [a for a in itertools.product(range(deg + 1), repeat=nvars) if sum(a) == deg]
        out.extend(sorted(block))
    return out


def factorial_multi(a):
    return math.prod(math.factorial(i) for i in a)


class Jet:
    __slots__ = ("c", "K", "nvars")

    def __init__(self, coef, K):
        self.c = coef
        self.K = K
        self.nvars = coef.ndim - 1

    @staticmethod
    def _mask(nvars, K):
        grids = np.indices((K + 1,) * nvars)
        return grids.sum(axis=0) <= K

    @classmethod
    def constant(cls, values, nvars, K):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        c = np.zeros((len(values),) + (K + 1,) * nvars)
        c[(slice(None),) + (0,) * nvars] = values
        return cls(c, K)

    @classmethod
    def variable(cls, values, i, nvars, K):
        """The coordinate ``x_i`` expanded about ``values``."""
        jet = cls.constant(values, nvars, K)
        if K >= 1:
            idx = [0] * nvars
            idx[i] = 1
            jet.c[(slice(None),) + tuple(idx)] = 1.0
        return jet

    @property
    def value(self):
        return self.c[(slice(None),) + (0,) * self.nvars]

    def copy(self):
        return Jet(self.c.copy(), self.K)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c, self.K)
        out = self.copy()
        out.c[(slice(None),) + (0,) * self.nvars] += other
        return out

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.K)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if other.ndim == 1:
                other = other.reshape((-1,) + (1,) * self.nvars)
            return Jet(self.c * other, self.K)
        K, v = self.K, self.nvars
        out = np.zeros(np.broadcast_shapes(self.c.shape, other.c.shape))
        for a in itertools.product(range(K + 1), repeat=v):
            da = sum(a)
            if da > K:
                continue
            ca = self.c[(slice(None),) + a]
            if not np.any(ca):
                continue
            # out[a + b] += self[a] * other[b] for |b| <= K - |a|
            tgt = (slice(None),) + tuple(slice(ai, K + 1) for ai in a)
            src = (slice(None),) + tuple(slice(0, K + 1 - ai) for ai in a)
            out[tgt] += ca.reshape((-1,) + (1,) * v) * other.c[src]
        out *= self._mask(v, K)[None]
        return Jet(out, K)

    __rmul__ = __mul__

    def compose(self, series):
        """``g(self)`` where ``series[b, j] = g^(j)(value_b) / j!``."""
        series = np.asarray(series, dtype=float)
        delta = self - self.value
        res = Jet.constant(series[:, self.K], self.nvars, self.K)
        for j in range(self.K - 1, -1, -1):
            res = res * delta + series[:, j]
        return res

    def exp(self):
        ev = np.exp(self.value)
        j = np.arange(self.K + 1)
        fact = np.array([math.factorial(i) for i in j], dtype=float)
        return self.compose(ev[:, None] / fact[None, :])

    def power(self, p):
        """``self ** p`` for a base with positive value."""
        x0 = self.value
        coefs = np.empty((len(x0), self.K + 1))
        binom = 1.0
        for j in range(self.K + 1):
            coefs[:, j] = binom * x0 ** (p - j)
            binom *= (p - j) / (j + 1)
        return self.compose(coefs)

    def reciprocal(self):
        return self.power(-1.0)

    def derivative(self, alpha):
        """``d^alpha f`` at the base points."""
        return self.c[(slice(None),) + tuple(alpha)] * factorial_multi(alpha)

    def derivative_table(self, indices=None):
        """Array ``[batch, len(indices)]`` of derivatives in the given order."""
        if indices is None:
            indices = multi_indices(self.nvars, self.K)
        return np.stack([self.derivative(a) for a in indices], axis=1)


def univariate_jet_of_radial(values_q, qjet, derivs):
    """Compose a function of q with the jet ``qjet``; ``derivs[j]`` holds the
    j-th derivative at ``values_q``."""
    K = qjet.K
    fact = np.array([math.factorial(j) for j in range(K + 1)], dtype=float)
    return qjet.compose(np.stack([derivs[j] / fact[j] for j in range(K + 1)], axis=1))


def squared_norm(jets):
    out = jets[0] * jets[0]
    for j in jets[1:]:
        out = out + j * j
    return out


def bump_jet(points, center, radius, K):
    """Jet of ``exp(1 - 1/(1 - |x - c|^2 / radius^2))`` (zero outside)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m, v = points.shape
    xs = [Jet.variable(points[:, i] - center[i], i, v, K) * (1.0 / radius) for i in range(v)]
    q = squared_norm(xs)
    inside = q.value < 1.0
    res = Jet.constant(np.zeros(m), v, K)
    if np.any(inside):
        sub = Jet(q.c[inside], K)
        w = (1.0 - sub).reciprocal()
        e = (1.0 - w).exp()
        res.c[inside] = e.c
    return res


def smooth_step_jet(rjet):
    """Jet of chi(r) = f(1 - r) / (f(1 - r) + f(r - 1/2)), f(t) = exp(-1/t):
    1 for r <= 1/2, 0 for r >= 1, smooth in between."""
    r = rjet.value
    res = Jet.constant(np.where(r <= 0.5, 1.0, 0.0), rjet.nvars, rjet.K)
    mid = (r > 0.5) & (r < 1.0)
    if np.any(mid):
        sub = Jet(rjet.c[mid], rjet.K)
        a = (-(1.0 - sub).reciprocal()).exp()
        b = (-(sub - 0.5).reciprocal()).exp()
        res.c[mid] = (a * (a + b).reciprocal()).c
    return res


def smooth_step(r):
    """Values of the smooth step used by :func:`smooth_step_jet`."""
    r = np.asarray(r, dtype=float)
    out = np.where(r <= 0.5, 1.0, 0.0)
    mid = (r > 0.5) & (r < 1.0)
    a = np.exp(-1.0 / (1.0 - r[mid]))
    b = np.exp(-1.0 / (r[mid] - 0.5))
    out[mid] = a / (a + b)
    return out
