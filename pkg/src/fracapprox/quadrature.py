"""Quadrature rules shared by the singular-integral evaluators.

Most integrands in this package have algebraic endpoint singularities
(``t^(s-1)``, ``(1 - r)^s`` cusps, ``rho^(1-2s)`` near the evaluation point),
so the workhorse is a panelled tanh-sinh rule: panels are cut at every known
non-smooth point, and on each panel the double-exponential change of
variables makes the endpoint behaviour harmless.
"""

import configparser
import dataclasses
import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

T_MAX = 4.0


@dataclasses.dataclass(frozen=True)
class QuadConfig:
    """Accuracy knobs for the singular quadratures.

    ``min_level``/``max_level`` bound the tanh-sinh refinement (step ``2^-level``),
    ``inner_nodes`` is the Gauss-Jacobi order on the disc around the evaluation
    point, ``delta_cap`` the cap on that disc's radius, ``angular_nodes`` the
    trapezoid count for the angular variable on the inner disc (2-D only).
    ``truncation_radius`` overrides the automatic far-field cut when set.
    """

    min_level: int = 3
    max_level: int = 6
    tol: float = 1e-11
    inner_nodes: int = 24
    delta_cap: float = 1e-2
    angular_nodes: int = 32
    truncation_radius: float | None = None

    @classmethod
    def from_file(cls, path, section="quadrature"):
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(path)
        if not parser.has_section(section):
            return cls()
        return cls.from_mapping(dict(parser.items(section)))

    @classmethod
    def from_mapping(cls, mapping):
        kwargs = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in types:
                raise KeyError(f"unknown quadrature option {key!r}")
            if raw is None or str(raw).strip().lower() in ("", "none"):
                kwargs[key] = None
            elif key in ("min_level", "max_level", "inner_nodes", "angular_nodes"):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)

    def refined(self, factor=1):
        """Configuration with every resolution knob raised by ``factor`` levels."""
        return dataclasses.replace(
            self,
            min_level=self.min_level + factor,
            max_level=self.max_level + factor,
            inner_nodes=self.inner_nodes * 2**factor,
            angular_nodes=self.angular_nodes * 2**factor,
            tol=self.tol / 10**factor,
        )


DEFAULT_QUAD = QuadConfig()


@lru_cache(maxsize=None)
def tanh_sinh_unit(level):
    """Nodes and weights of the tanh-sinh rule on [0, 1].

    Returns ``(left, right, w)``: distance of each node from 0 and from 1,
    both computed without cancellation, and the weights.
    """
    h = 2.0**-level
    t = np.arange(-T_MAX, T_MAX + 0.5 * h, h)
    u = 0.5 * math.pi * np.sinh(t)
    # sigma = 1/(1+exp(-2u)); 1 - sigma = 1/(1+exp(2u))
    left = 1.0 / (1.0 + np.exp(-2.0 * u))
    right = 1.0 / (1.0 + np.exp(2.0 * u))
    w = h * math.pi * np.cosh(t) * left * right
    keep = (left > 0) & (right > 0) & (w > 0)
    return left[keep], right[keep], w[keep]


def panel_nodes(breaks, level):
    """Tanh-sinh nodes for consecutive panels ``[breaks[i], breaks[i+1]]``.

    Returns ``(x, w, panel)`` flattened over panels. Nodes that round onto a
    panel end are dropped (their weight is below double precision anyway).
    """
    breaks = np.asarray(breaks, dtype=float)
    a = breaks[:-1]
    b = breaks[1:]
    left, right, w = tanh_sinh_unit(level)
    width = (b - a)[:, None]
    x_from_a = a[:, None] + width * left[None, :]
    x_from_b = b[:, None] - width * right[None, :]
    x = np.where(left[None, :] < 0.5, x_from_a, x_from_b)
    ww = width * w[None, :]
    panel = np.broadcast_to(np.arange(len(a))[:, None], x.shape)
    ok = (x > a[:, None]) & (x < b[:, None]) & (ww > 0)
    return x[ok], ww[ok], panel[ok]


def clean_breaks(a, b, points):
    """Sorted unique breakpoints in ``[a, b]`` including both ends."""
    pts = [p for p in points if a < p < b and np.isfinite(p)]
    pts = np.unique(np.concatenate([[a], np.asarray(pts, dtype=float), [b]]))
    scale = max(abs(a), abs(b), 1.0)
    keep = np.concatenate([[True], np.diff(pts) > 1e-14 * scale])
    pts = pts[keep]
    pts[-1] = b
    return pts


@dataclasses.dataclass
class Integral:
    value: float
    error: float
    level: int
    converged: bool


def integrate(f, a, b, points=(), config=DEFAULT_QUAD, scale=None):
    """Integrate a vectorized ``f`` over ``[a, b]`` by panelled tanh-sinh.

    ``points`` lists interior non-smooth points. The level is raised until two
    consecutive (nested) levels agree to ``config.tol`` relative to
    ``max(|I|, scale)``.
    """
    if b <= a:
        return Integral(0.0, 0.0, config.min_level, True)
    breaks = clean_breaks(a, b, points)
    prev = None
    level = config.min_level
    while True:
        x, w, _ = panel_nodes(breaks, level)
        val = float(np.dot(w, f(x)))
        if prev is not None:
            err = abs(val - prev)
            ref = max(abs(val), scale if scale is not None else 0.0, 1e-300)
            if err <= config.tol * ref:
                return Integral(val, err, level, True)
            if level >= config.max_level:
                return Integral(val, err, level, False)
        prev = val
        level += 1


@lru_cache(maxsize=None)
def gauss_jacobi(m, alpha, beta):
    """Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^alpha (1+x)^beta."""
    x, w = roots_jacobi(int(m), float(alpha), float(beta))
    return x, w


@lru_cache(maxsize=None)
def gauss_legendre(m):
    x, w = roots_legendre(int(m))
    return x, w


def gauss_legendre_panels(breaks, m):
    """Composite Gauss-Legendre nodes/weights on consecutive panels."""
    x0, w0 = gauss_legendre(m)
    breaks = np.asarray(breaks, dtype=float)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * x0[None, :]
    w = 0.5 * (b - a) * w0[None, :]
    return x.ravel(), w.ravel()


def geometric_breaks(center, lo, hi, first, ratio=4.0):
    """Points ``center +/- first * ratio^k`` clipped to ``(lo, hi)``."""
    out = []
    d = first
    while d < (hi - lo):
        for p in (center - d, center + d):
            if lo < p < hi:
                out.append(p)
        d *= ratio
    return out
