"""Green function of (-Delta)^s in the unit ball and its boundary behaviour.

    G(x, z) = |z - x|^(2s - n) * int_0^r0 t^(s-1) (1 + t)^(-n/2) dt,
    r0 = (1 - |x|^2)(1 - |z|^2) / |z - x|^2,

so that ``u = kappa(n, s) * int f G`` solves (-Delta)^s u = f in the ball with
u = 0 outside. For small r0 the t-integral is summed as a binomial series,
otherwise it is integrated numerically.
"""

import dataclasses
import math

import numpy as np
from .constants import check_dim, check_order
from .quadrature import (
    DEFAULT_QUAD,
    QuadConfig,
    clean_breaks,
    gauss_jacobi,
    gauss_legendre,
    integrate,
    panel_nodes,
)

SERIES_THRESHOLD = 0.5


class CoincidentPoints(ValueError):
    pass


class SeriesDivergence(ValueError):
    pass


class InwardDirectionError(ValueError):
    """Raised when ``e . omega >= 0`` where an inward direction is required."""


@dataclasses.dataclass(frozen=True)
class GreenKernel:
    """Parameters for evaluating G for the ball in R^n.

    ``substitution`` selects how the ``t^(s-1)`` endpoint singularity of the
    t-integral is removed: ``"jacobi"`` (Gauss-Jacobi weight), ``"power"``
    (t = u^(1/s)) or ``"square"`` (t = u^2).
    """

    n: int
    s: float
    series_terms: int = 60
    quad: QuadConfig = DEFAULT_QUAD
    t_nodes: int = 40
    substitution: str = "jacobi"

    def __post_init__(self):
        object.__setattr__(self, "n", check_dim(self.n))
        object.__setattr__(self, "s", check_order(self.s))
        if self.substitution not in ("jacobi", "power", "square"):
            raise ValueError(f"unknown substitution {self.substitution!r}")
        if self.series_terms < 1:
            raise ValueError("series_terms must be positive")

    def series_coefficients(self):
        """c_k = binom(-n/2, k) / (k + s), k = 0..series_terms."""
        return _series_coefficients(self.n, self.s, self.series_terms)


_COEF_CACHE = {}


def _series_coefficients(n, s, terms):
    key = (n, s, terms)
    if key not in _COEF_CACHE:
        b = np.empty(terms + 1)
        b[0] = 1.0
        for k in range(1, terms + 1):
            b[k] = b[k - 1] * (-0.5 * n - k + 1) / k
        _COEF_CACHE[key] = b / (np.arange(terms + 1) + s)
    return _COEF_CACHE[key]


def _as_points(p, n):
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if n == 1 and p.ndim == 1 and p.shape[0] != 1:
        return p.reshape(-1, 1)
    return np.atleast_2d(p).reshape(-1, n)


def r0(x, z):
    """(1 - |x|^2)(1 - |z|^2) / |z - x|^2; vectorized over rows of ``z``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    scalar = x.ndim <= 1 and z.ndim <= 1
    n = x.size if x.ndim <= 1 and z.ndim <= 1 else z.shape[-1]
    xs = _as_points(x, n)
    zs = _as_points(z, n)
    d2 = np.sum((zs - xs) ** 2, axis=1)
    if np.any(d2 == 0.0):
        raise CoincidentPoints("r0 is undefined for coincident points")
    val = (1.0 - np.sum(xs**2, axis=1)) * (1.0 - np.sum(zs**2, axis=1)) / d2
    return float(val[0]) if scalar else val


def _t_integral_small(k, a):
    """int_0^a t^(s-1)(1+t)^(-n/2) dt for 0 < a <= 1 (vectorized)."""
    s, n, m = k.s, k.n, k.t_nodes
    a = np.asarray(a, dtype=float)
    if k.substitution == "jacobi":
        y, w = gauss_jacobi(m, 0.0, s - 1.0)
        t = 0.5 * a[:, None] * (1.0 + y[None, :])
        return (0.5 * a) ** s * ((1.0 + t) ** (-0.5 * n) @ w)
    y, w = gauss_legendre(m)
    if k.substitution == "power":
        # t = u^(1/s): t^(s-1) dt = du / s
        top = a**s
        u = 0.5 * top[:, None] * (1.0 + y[None, :])
        return 0.5 * top / s * ((1.0 + u ** (1.0 / s)) ** (-0.5 * n) @ w)
    # t = u^2: t^(s-1) dt = 2 u^(2s-1) du
    top = np.sqrt(a)
    u = 0.5 * top[:, None] * (1.0 + y[None, :])
    return 0.5 * top * ((2.0 * u ** (2.0 * s - 1.0) * (1.0 + u * u) ** (-0.5 * n)) @ w)


def _t_integral_mid(k, lo, hi):
    """int_lo^hi for 0 < lo <= hi <= 1, smooth integrand (vectorized)."""
    y, w = gauss_legendre(k.t_nodes)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    t = (0.5 * (hi + lo))[:, None] + half[:, None] * y[None, :]
    return half * ((t ** (k.s - 1.0) * (1.0 + t) ** (-0.5 * k.n)) @ w)


def _t_integral_large(k, r):
    """int_1^r for r >= 1 via t = e^v, composite Gauss-Legendre (vectorized)."""
    s, n = k.s, k.n
    r = np.asarray(r, dtype=float)
    L = np.log(np.maximum(r, 1.0))
    out = np.zeros_like(L)
    if not np.any(L > 0):
        return out
    panels = max(1, int(math.ceil(float(np.max(L)))))
    y, w = gauss_legendre(20)
    h = L / panels
    for p in range(panels):
        v = (h * (p + 0.5))[:, None] + 0.5 * h[:, None] * y[None, :]
        ev = np.exp(v)
        out += 0.5 * h * ((ev**s * (1.0 + ev) ** (-0.5 * n)) @ w)
    return out


def t_integral_quadrature(k, r):
    """int_0^r t^(s-1)(1+t)^(-n/2) dt by quadrature, for an array of r > 0."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    small = np.minimum(r, 1.0)
    return _t_integral_small(k, small) + _t_integral_large(k, r)


def t_integral_series(k, r):
    """Binomial series for r <= 1/2."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r > SERIES_THRESHOLD):
        raise SeriesDivergence("series branch requires r0 <= 1/2")
    return r**k.s * np.polynomial.polynomial.polyval(r, k.series_coefficients())


def green_value(k: GreenKernel, x, z, method="auto"):
    """G(x, z); ``z`` may hold many points (one per row).

    ``method`` is ``"auto"`` (series when r0 <= 1/2, quadrature otherwise),
    ``"series"`` or ``"quadrature"``. Points on or outside the sphere give 0.
    """
    n = k.n
    zs = _as_points(z, n)
    xs = _as_points(x, n)
    scalar = np.asarray(z).ndim <= 1 and (n > 1 or np.asarray(z).size == 1)
    val = green_from_offsets(k, xs[0], zs - xs, method)
    val = np.where(np.sum(zs**2, axis=1) >= 1.0, 0.0, val)
    return float(val[0]) if scalar else val


def green_from_offsets(k: GreenKernel, x, dz, method="auto"):
    """G(x, x + dz) for rows ``dz``; exact offsets keep tiny |z - x| accurate."""
    n = k.n
    x = np.asarray(x, dtype=float).reshape(n)
    dz = np.asarray(dz, dtype=float).reshape(-1, n)
    d2 = np.sum(dz**2, axis=1)
    if np.any(d2 == 0.0):
        raise CoincidentPoints("G is undefined for coincident points")
    fx = 1.0 - float(np.dot(x, x))
    fz = fx - 2.0 * (dz @ x) - d2
    inside = (fx > 0) & (fz > 0)
    rr = np.where(inside, fx * fz / d2, 0.0)
    integ = np.zeros_like(rr)
    if method == "series":
        use_series = inside
    elif method == "quadrature":
        use_series = np.zeros_like(inside)
    elif method == "auto":
        use_series = inside & (rr <= SERIES_THRESHOLD)
    else:
        raise ValueError(f"unknown method {method!r}")
    use_quad = inside & ~use_series
    if np.any(use_series):
        integ[use_series] = t_integral_series(k, rr[use_series])
    if np.any(use_quad):
        integ[use_quad] = t_integral_quadrature(k, rr[use_quad])
    return d2 ** (k.s - 0.5 * n) * integ


def green_series_split(k: GreenKernel, x, z):
    """Split G into ``(g0, g1, tail)``.

    With r1 = min(r0, 1/2): g0 = |z-x|^(2s-n) r1^s / s is the leading series
    term, g1 the remaining series terms, and tail the integral from r1 to r0
    (zero when r0 <= 1/2).
    """
    n, s = k.n, k.s
    x = np.asarray(x, dtype=float).reshape(n)
    z = np.asarray(z, dtype=float).reshape(n)
    rr = r0(x, z)
    pref = float(np.sum((z - x) ** 2)) ** (s - 0.5 * n)
    r1 = min(rr, SERIES_THRESHOLD)
    c = k.series_coefficients()
    g0 = pref * r1**s / s
    g1 = pref * r1**s * float(np.polynomial.polynomial.polyval(r1, np.concatenate([[0.0], c[1:]])))
    tail = 0.0
    if rr > SERIES_THRESHOLD:
        hi = min(rr, 1.0)
        tail = float(_t_integral_mid(k, np.array([SERIES_THRESHOLD]), np.array([hi]))[0])
        tail += float(_t_integral_large(k, np.array([rr]))[0])
        tail *= pref
    return g0, g1, tail


def green_integral(k: GreenKernel, f, x, level=None):
    """int_{B_1} f(z) G(x, z) dz for a field ``f`` on R^n (n = 1 or 2).

    Polar coordinates about ``x`` keep the diagonal singularity at the
    origin of the radial variable.
    """
    n = k.n
    x = np.asarray(x, dtype=float).reshape(n)
    if float(np.dot(x, x)) >= 1.0:
        return 0.0
    cfg = k.quad
    spheres = [(np.asarray(b.center, dtype=float), float(b.radius)) for b in f.breaks]
    if n == 1:
        total = 0.0
        for sign in (1.0, -1.0):
            hi = 1.0 - sign * x[0]
            pts = []
            for c, R in spheres:
                for q in (c[0] - R, c[0] + R):
                    pts.append(sign * (q - x[0]))

            def g(rho, sign=sign):
                dz = (sign * rho)[:, None]
                return f(x[0] + dz) * green_from_offsets(k, x, dz)

            res = integrate(g, 0.0, hi, pts, cfg)
            total += res.value
        return total
    return _green_integral_2d(k, f, x, spheres, level)


def _chord(x, om):
    """Distance from x to the unit circle along each row of ``om``."""
    b = om @ x
    return -b + np.sqrt(b * b + 1.0 - float(np.dot(x, x)))


def _green_integral_2d(k, f, x, spheres, level=None):
    cfg = k.quad
    lo = cfg.min_level - 1 if level is None else level
    top = cfg.max_level - 1 if level is None else level
    prev = None
    lev = lo
    while True:
        th, wth, _ = panel_nodes(clean_breaks(0.0, 2.0 * math.pi, []), lev)
        oms = np.column_stack([np.cos(th), np.sin(th)])
        lens = _chord(x, oms)
        vals = np.empty(len(th))
        for i, om in enumerate(oms):
            pts = []
            for c, R in spheres:
                pts.extend(p for p in _line_hits(x, om, c, R) if p > 0)
            rho, w, _ = panel_nodes(clean_breaks(0.0, lens[i], pts), lev)
            dz = rho[:, None] * om[None, :]
            vals[i] = np.dot(w, rho * f(x[None, :] + dz) * green_from_offsets(k, x, dz))
        val = float(np.dot(wth, vals))
        if prev is not None and (abs(val - prev) <= cfg.tol * max(abs(val), 1e-300) or lev >= top):
            return val
        if prev is None and lev >= top:
            return val
        prev = val
        lev += 1


def _line_hits(p, omega, center, radius):
    q = p - center
    b = float(np.dot(omega, q))
    disc = b * b - float(np.dot(q, q)) + radius * radius
    if disc <= 0.0:
        return []
    r = math.sqrt(disc)
    return [-b - r, -b + r]


def _check_inward(e, omega):
    e = np.asarray(e, dtype=float).reshape(-1)
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if not np.isclose(np.linalg.norm(e), 1.0) or not np.isclose(np.linalg.norm(omega), 1.0):
        raise ValueError("e and omega must be unit vectors")
    eo = float(np.dot(e, omega))
    if eo >= 0.0:
        raise InwardDirectionError("omega must point into the ball (e . omega < 0)")
    return e, omega, eo


def boundary_functional(k: GreenKernel, f, e, omega, nodes=64):
    """(-2 e.omega)^s / s * int_{B_1} f(z) (1 - |z|^2)^s / |z - e|^n dz.

    In polar coordinates z = e + rho*theta about the boundary point the
    integrand becomes ``f * rho^(s-1) (L - rho)^s`` with L = -2 e.theta, which
    is integrated by Gauss-Jacobi; the angular variable (n = 2) uses tanh-sinh.
    """
    s, n = k.s, k.n
    e, omega, eo = _check_inward(e, omega)
    y, w = gauss_jacobi(nodes, s, s - 1.0)

    def radial(thetas):
        L = -2.0 * (thetas @ e)
        rho = 0.5 * L[:, None] * (1.0 + y[None, :])
        z = e[None, None, :] + rho[:, :, None] * thetas[:, None, :]
        fz = f(z.reshape(-1, n)).reshape(rho.shape)
        return (0.5 * L) ** (2.0 * s) * (fz @ w)

    if n == 1:
        val = float(radial(-e[None, :])[0])
    else:
        base = math.atan2(-e[1], -e[0])

        def ang(phi):
            th = base + phi
            return radial(np.column_stack([np.cos(th), np.sin(th)]))

        val = integrate(ang, -0.5 * math.pi, 0.5 * math.pi, (), k.quad).value
    return (-2.0 * eo) ** s / s * val


@dataclasses.dataclass
class LimitTable:
    """Rows of (eps, lhs, rhs, ratio). ``defined`` is False when rhs == 0."""

    eps: list
    lhs: list
    rhs: list
    ratio: list
    defined: bool = True

    def rows(self):
        return list(zip(self.eps, self.lhs, self.rhs, self.ratio))

    def deviations(self):
        return [abs(r - 1.0) for r in self.ratio]

    def is_settling(self, slack=1e-3):
        """|ratio - 1| nonincreasing along the table up to ``slack``."""
        dev = self.deviations()
        return all(b <= a + slack for a, b in zip(dev, dev[1:]))

    def to_csv(self, path, header=None):
        from .csvio import write_csv

        write_csv(path, ["eps", "lhs", "rhs", "ratio"], self.rows(), header)


def verify_goa_limit(k: GreenKernel, f, e, omega, eps_sequence):
    """Table of eps^(-s) int f G(e + eps*omega, .) against boundary_functional."""
    e, omega, _ = _check_inward(e, omega)
    rhs = boundary_functional(k, f, e, omega)
    eps = [float(v) for v in eps_sequence]
    if rhs == 0.0:
        return LimitTable([], [], [], [], defined=False)
    lhs = [eps_i ** (-k.s) * green_integral(k, f, e + eps_i * omega) for eps_i in eps]
    return LimitTable(eps, lhs, [rhs] * len(eps), [v / rhs for v in lhs])


def footnote_green(x, z):
    """Closed form of G for n = 1, s = 1/2."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return 2.0 * np.log((1.0 - x * z + np.sqrt((1.0 - x * x) * (1.0 - z * z))) / np.abs(z - x))


def t_integral_closed_form(n, s, r):
    """Hypergeometric form r^s/s * 2F1(n/2, s; s+1; -r), used as an oracle."""
    from scipy.special import hyp2f1

    r = np.asarray(r, dtype=float)
    return r**s / s * hyp2f1(0.5 * n, s, s + 1.0, -r)


def binomial_bound_ratio(k: GreenKernel):
    """max_k |c_k| (k + s) / k^(n/2) over k >= 1: the fitted constant in the
    coefficient bound |c_k| <= C k^(n/2) / (k + s)."""
    c = k.series_coefficients()
    kk = np.arange(1, len(c))
    return float(np.max(np.abs(c[1:]) * (kk + k.s) / kk ** (0.5 * k.n)))


__all__ = [
    "GreenKernel",
    "CoincidentPoints",
    "SeriesDivergence",
    "InwardDirectionError",
    "LimitTable",
    "r0",
    "green_value",
    "green_series_split",
    "green_integral",
    "boundary_functional",
    "verify_goa_limit",
    "footnote_green",
]
