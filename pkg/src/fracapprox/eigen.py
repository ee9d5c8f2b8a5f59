"""Principal Dirichlet eigenpair of (-Delta)^s in the unit ball.

The eigenfunction is sought as phi(x) = (1 - |x|^2)_+^s p(|x|^2) with
p(q) = sum_k a_k P_k(2q - 1), P_k = P_k^(s, n/2 - 1). These weighted Jacobi
polynomials are mapped by (-Delta)^s to plain polynomials,

    (-Delta)^s [(1 - |x|^2)_+^s P_k(2|x|^2 - 1)] = mu_k P_k(2|x|^2 - 1),
    mu_k = 4^s Gamma(s + k + 1) Gamma(n/2 + s + k) / (k! Gamma(n/2 + k)),

so the Galerkin stiffness matrix is diagonal and the mass matrix is exact
under Gauss-Jacobi quadrature. The dominant eigenvector of the inverse
problem is found by power iteration.
"""

import dataclasses
import math

import numpy as np
from scipy.special import gammaln

from .constants import check_dim, check_order, green_constant, sphere_area
from .fields import ScalarField, Sphere
from .jacobi import derivative_coefficients, jacobi_sum, jacobi_table
from .jets import Jet, bump_jet, multi_indices, squared_norm
from .quadrature import DEFAULT_QUAD, gauss_jacobi, gauss_legendre, integrate


class EigenNotConverged(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class EigenConfig:
    """``degree`` is the number of Jacobi modes; ``extra_nodes`` pads the
    mass-matrix quadrature beyond exactness."""

    degree: int = 320
    extra_nodes: int = 24
    max_iter: int = 2000
    tol: float = 1e-12

    def refined(self):
        return dataclasses.replace(self, degree=2 * self.degree)


def stiffness_eigenvalues(n, s, N):
    """mu_k for k < N."""
    k = np.arange(N)
    return 4.0**s * np.exp(
        gammaln(s + k + 1) + gammaln(0.5 * n + s + k) - gammaln(k + 1) - gammaln(0.5 * n + k)
    )


def galerkin_matrices(n, s, N, extra=24):
    """Diagonal stiffness ``A`` (as a vector) and mass matrix ``M``.

    With y = 2r^2 - 1 the radial measure |S^(n-1)| r^(n-1) dr becomes
    |S^(n-1)| 2^(-n/2-1) (1 + y)^(n/2-1) dy, and (1 - r^2) = (1 - y)/2.
    """
    beta = 0.5 * n - 1.0
    area = sphere_area(n)
    y, w = gauss_jacobi(N + extra, 2.0 * s, beta)
    P = jacobi_table(N, s, beta, y)
    M = area * 2.0 ** (-2.0 * s - 0.5 * n - 1.0) * (P * w) @ P.T
    y2, w2 = gauss_jacobi(N + extra, s, beta)
    P2 = jacobi_table(N, s, beta, y2)
    h = area * 2.0 ** (-s - 0.5 * n - 1.0) * np.sum(P2**2 * w2, axis=1)
    return stiffness_eigenvalues(n, s, N) * h, M


@dataclasses.dataclass(frozen=True)
class EigenPair:
    """lambda_star, the Jacobi coefficients of phi_star and kappa_star."""

    n: int
    s: float
    lambda_star: float
    coefs: np.ndarray
    kappa_star: float = float("nan")
    rayleigh_history: tuple = ()

    @property
    def degree(self):
        return len(self.coefs)

    @property
    def beta(self):
        return 0.5 * self.n - 1.0

    def p(self, q):
        return jacobi_sum(self.coefs, self.s, self.beta, 2.0 * np.asarray(q, dtype=float) - 1.0)

    def profile(self, r):
        """phi_star as a function of the radius (0 for r >= 1)."""
        r = np.abs(np.asarray(r, dtype=float))
        q = np.minimum(r * r, 1.0)
        out = (1.0 - q) ** self.s * self.p(q)
        return np.where(r < 1.0, out, 0.0)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.n)
        return self.profile(np.linalg.norm(pts, axis=1))

    def q_derivatives(self, q, order):
        """d^j/dq^j of (1 - q)^s p(q), j <= order, for q < 1."""
        q = np.asarray(q, dtype=float)
        y = 2.0 * q - 1.0
        pd = [
            2.0**j * jacobi_sum(
                derivative_coefficients(self.coefs, self.s, self.beta, j),
                self.s + j,
                self.beta + j,
                y,
            )
            for j in range(order + 1)
        ]
        # Leibniz with d^i (1 - q)^s = (-1)^i s(s-1)...(s-i+1) (1 - q)^(s-i)
        out = np.zeros((order + 1,) + q.shape)
        for j in range(order + 1):
            for i in range(j + 1):
                fall = math.prod(self.s - t for t in range(i))
                out[j] += math.comb(j, i) * (-1.0) ** i * fall * (1.0 - q) ** (self.s - i) * pd[j - i]
        return out

    def jet(self, points, K):
        """Jet of phi_star at interior points (rows of ``points``)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xs = [Jet.variable(pts[:, i], i, pts.shape[1], K) for i in range(pts.shape[1])]
        return self.jet_of(xs)

    def jet_of(self, xs):
        """Jet of phi_star composed with the coordinate jets ``xs``."""
        q = squared_norm(xs)
        K = q.K
        qv = q.value
        if np.any(qv >= 1.0):
            raise ValueError("jets are only available strictly inside the ball")
        d = self.q_derivatives(qv, K)
        fact = np.array([math.factorial(j) for j in range(K + 1)], dtype=float)
        return q.compose(d.T / fact[None, :])

    def derivative(self, points, alpha):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        K = sum(alpha)
        out = np.zeros(len(pts))
        inside = np.sum(pts**2, axis=1) < 1.0
        if np.any(inside):
            out[inside] = self.jet(pts[inside], K).derivative(alpha)
        return out

    def field(self):
        return ScalarField(
            evaluator=self,
            dim=self.n,
            support_radius=1.0,
            smooth_radius=1.0,
            breaks=(Sphere((0.0,) * self.n, 1.0, tuple(range(self.n))),),
            derivative=self.derivative,
        )

    def l2_norm(self):
        """||phi_star||_{L^2(B_1)} by an independent quadrature in r."""
        m = 2 * self.degree + 40
        x, w = gauss_jacobi(m, 2.0 * self.s, 0.0)
        r = 0.5 * (1.0 + x)
        # phi^2 = (1 - r)^(2s) (1 + r)^(2s) p(r^2)^2
        vals = (1.0 + r) ** (2.0 * self.s) * self.p(r * r) ** 2 * r ** (self.n - 1)
        return math.sqrt(sphere_area(self.n) * 0.5 ** (1.0 + 2.0 * self.s) * float(np.dot(w, vals)))

    def sample_grid(self, m=200):
        """Graded radii with (1 - r) ~ j^2 near the boundary, and phi there."""
        j = np.arange(m + 1)
        r = 1.0 - ((m - j) / m) ** 2
        return r, self.profile(r)

    def residual(self, r):
        """Exact (-Delta)^s phi - lambda phi of the truncated expansion."""
        r = np.asarray(r, dtype=float)
        y = 2.0 * r * r - 1.0
        mu = stiffness_eigenvalues(self.n, self.s, self.degree)
        return jacobi_sum(self.coefs * mu, self.s, self.beta, y) - self.lambda_star * self.profile(r)

    def to_dict(self):
        return {
            "n": self.n,
            "s": self.s,
            "lambda_star": self.lambda_star,
            "kappa_star": self.kappa_star,
            "coefs": [float(c) for c in self.coefs],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            int(data["n"]),
            float(data["s"]),
            float(data["lambda_star"]),
            np.asarray(data["coefs"], dtype=float),
            float(data.get("kappa_star", float("nan"))),
        )


def principal_eigenpair(n, s, config=EigenConfig()):
    """Principal eigenpair (lambda_star, phi_star) with phi_star > 0 and unit
    L^2 norm; kappa_star is filled in from :func:`kappa_star`."""
    n = check_dim(n)
    s = check_order(s)
    if n not in (1, 2):
        raise ValueError("eigenpairs are provided for n = 1, 2")
    N = config.degree
    A, M = galerkin_matrices(n, s, N, config.extra_nodes)
    d = 1.0 / np.sqrt(A)
    B = d[:, None] * M * d[None, :]
    x = np.zeros(N)
    x[0] = 1.0
    history = []
    prev = None
    for _ in range(config.max_iter):
        y = B @ x
        rq = float(x @ y)
        history.append(rq)
        nxt = y / np.linalg.norm(y)
        if prev is not None and abs(rq - prev) <= config.tol * rq and np.linalg.norm(nxt - x) < 1e-13:
            x = nxt
            break
        prev = rq
        x = nxt
    else:
        raise EigenNotConverged(f"power iteration did not settle in {config.max_iter} steps")
    rq = float(x @ B @ x)
    lam = 1.0 / rq
    a = d * x
    a /= math.sqrt(float(a @ M @ a))
    pair = EigenPair(n, s, lam, a, rayleigh_history=tuple(history))
    if pair.p(0.0) < 0:
        pair = dataclasses.replace(pair, coefs=-a)
    return dataclasses.replace(pair, kappa_star=kappa_star(pair))


def kappa_star(pair: EigenPair, e=None, quad=DEFAULT_QUAD):
    """2^s kappa(n, s) int phi_star(z) (1 - |z|^2)^s / (s |z - e|^n) dz.

    Polar coordinates z = e + rho*theta about the boundary point give the
    integrand rho^(2s-1) (L - rho)^(2s) p(|z|^2) with L = -2 e.theta, which is
    a polynomial times a Jacobi weight.
    """
    n, s = pair.n, pair.s
    if e is None:
        e = np.eye(n)[0]
    e = np.asarray(e, dtype=float).reshape(n)
    e = e / np.linalg.norm(e)
    y, w = gauss_jacobi(pair.degree + 40, 2.0 * s, 2.0 * s - 1.0)

    def radial(thetas):
        L = -2.0 * (thetas @ e)
        rho = 0.5 * L[:, None] * (1.0 + y[None, :])
        z = e[None, None, :] + rho[:, :, None] * thetas[:, None, :]
        q = np.sum(z**2, axis=2)
        return (0.5 * L) ** (4.0 * s) * (pair.p(q) @ w)

    if n == 1:
        val = float(radial(-e[None, :])[0])
    else:
        base = math.atan2(-e[1], -e[0])

        def ang(phi):
            th = base + phi
            return radial(np.column_stack([np.cos(th), np.sin(th)]))

        val = integrate(ang, -0.5 * math.pi, 0.5 * math.pi, (), quad).value
    return 2.0**s * green_constant(n, s) * val / s


@dataclasses.dataclass
class BoundaryTable:
    eps: list
    values: list
    predicted: list
    ratio: list

    def rows(self):
        return list(zip(self.eps, self.values, self.predicted, self.ratio))

    def to_csv(self, path, header=None):
        from .csvio import write_csv

        write_csv(path, ["eps", "lhs", "rhs", "ratio"], self.rows(), header)


def verify_eigen_boundary(pair: EigenPair, e, omega, eps_sequence):
    """eps^(-s) phi_star(e + eps*omega) against kappa_star lambda_star (-e.omega)_+^s."""
    e = np.asarray(e, dtype=float).reshape(pair.n)
    omega = np.asarray(omega, dtype=float).reshape(pair.n)
    eo = float(np.dot(e, omega))
    pred = pair.kappa_star * pair.lambda_star * max(-eo, 0.0) ** pair.s
    eps = [float(v) for v in eps_sequence]
    vals = [v ** (-pair.s) * float(pair(e + v * omega)[0]) for v in eps]
    ratio = [v / pred if pred > 0 else (0.0 if v == 0.0 else float("inf")) for v in vals]
    return BoundaryTable(eps, vals, [pred] * len(eps), ratio)


def boundary_slope(pair: EigenPair, deltas=(1e-4, 1e-3, 1e-2)):
    """Least-squares slope of log phi_star(1 - delta) against log delta."""
    d = np.asarray(deltas, dtype=float)
    vals = pair.profile(1.0 - d)
    return float(np.polyfit(np.log(d), np.log(vals), 1)[0])


@dataclasses.dataclass(frozen=True)
class BumpTest:
    """psi(X) = exp(1 - 1/(1 - |X - c|^2 / rho^2)) with analytic derivatives."""

    center: tuple
    radius: float

    def __call__(self, pts):
        c = np.asarray(self.center, dtype=float)
        q = np.sum((np.atleast_2d(pts) - c) ** 2, axis=1) / self.radius**2
        out = np.zeros(len(q))
        inside = q < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out

    def derivative(self, pts, alpha):
        return bump_jet(pts, self.center, self.radius, sum(alpha)).derivative(alpha)

    def nodes(self, m=400):
        """Tensor Gauss-Legendre nodes and weights covering the support."""
        c = np.asarray(self.center, dtype=float)
        x, w = gauss_legendre(m)
        if len(c) == 1:
            return (c[0] + self.radius * x)[:, None], self.radius * w
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        pts = c[None, :] + self.radius * np.column_stack([X.ravel(), Y.ravel()])
        return pts, self.radius**2 * W.ravel()


@dataclasses.dataclass
class DistributionalTable:
    alpha: tuple
    eps: list
    lhs: list
    rhs: float

    @property
    def ratio(self):
        return [v / self.rhs if self.rhs != 0 else float("nan") for v in self.lhs]

    def rows(self):
        return [(e, l, self.rhs, r) for e, l, r in zip(self.eps, self.lhs, self.ratio)]

    def to_csv(self, path, header=None):
        from .csvio import write_csv

        write_csv(path, ["eps", "lhs", "rhs", "ratio"], self.rows(), header)


def verify_distributional_derivatives(pair: EigenPair, e, alpha, psi: BumpTest, eps_sequence, nodes=None):
    """Compare eps^(|alpha| - s) int d^alpha phi_star(e + eps X) psi(X) dX with
    its limit (-1)^|alpha| kappa_star lambda_star s(s-1)...(s-|alpha|+1) e^alpha
    int (-e.X)_+^(s-|alpha|) psi(X) dX.

    The left side moves all derivatives onto psi, so only values of phi_star
    enter.
    """
    alpha = tuple(int(a) for a in alpha)
    order = sum(alpha)
    if order > 3:
        raise ValueError("derivative orders above 3 are outside the accuracy budget")
    if len(alpha) != pair.n:
        raise ValueError("alpha has the wrong length")
    e = np.asarray(e, dtype=float).reshape(pair.n)
    if nodes is None:
        nodes = 400 if pair.n == 1 else 120
    X, W = psi.nodes(nodes)
    dpsi = psi.derivative(X, alpha)
    sign = (-1.0) ** order
    lhs = []
    for eps in eps_sequence:
        vals = pair(e[None, :] + eps * X)
        lhs.append(sign * eps ** (-pair.s) * float(np.dot(W, vals * dpsi)))
    fall = math.prod(pair.s - t for t in range(order))
    ealpha = math.prod(e[i] ** a for i, a in enumerate(alpha))
    proj = -(X @ e)
    weight = np.where(proj > 0, np.abs(proj) ** (pair.s - order), 0.0)
    integral = float(np.dot(W, weight * psi(X)))
    rhs = sign * pair.kappa_star * pair.lambda_star * fall * ealpha * integral
    return DistributionalTable(alpha, [float(v) for v in eps_sequence], lhs, rhs)


@dataclasses.dataclass(frozen=True)
class ScaledEigenfunction:
    """X -> phi_star((X - shift) / r) with r = (lambda_star / lambda_target)^(1/(2s)),
    an eigenfunction with eigenvalue lambda_target in the ball B_r(shift)."""

    base: EigenPair
    lambda_target: float
    shift: tuple

    @property
    def radius(self):
        return (self.base.lambda_star / self.lambda_target) ** (1.0 / (2.0 * self.base.s))

    def __call__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.base.n)
        return self.base((pts - np.asarray(self.shift)) / self.radius)

    def jet_of(self, xs):
        r = self.radius
        return self.base.jet_of([(x - c) * (1.0 / r) for x, c in zip(xs, self.shift)])

    def field(self):
        r = self.radius
        sh = np.asarray(self.shift, dtype=float)

        def der(p, alpha):
            return self.base.derivative((np.atleast_2d(p) - sh) / r, alpha) * r ** (-sum(alpha))

        return ScalarField(
            evaluator=self,
            dim=self.base.n,
            support_radius=float(np.linalg.norm(sh)) + r,
            smooth_radius=r,
            center=tuple(sh),
            breaks=(Sphere(tuple(sh), r, tuple(range(self.base.n))),),
            derivative=der,
        )


def scaled_eigenfunction(pair: EigenPair, lambda_target, shift):
    if not lambda_target > 0:
        raise ValueError("lambda_target must be positive")
    shift = tuple(float(v) for v in np.asarray(shift, dtype=float).reshape(pair.n))
    return ScaledEigenfunction(pair, float(lambda_target), shift)


_PAIR_CACHE = {}


def cached_eigenpair(n, s, config=EigenConfig()):
    key = (n, float(s), config)
    if key not in _PAIR_CACHE:
        _PAIR_CACHE[key] = principal_eigenpair(n, s, config)
    return _PAIR_CACHE[key]


__all__ = [
    "EigenConfig",
    "EigenPair",
    "EigenNotConverged",
    "principal_eigenpair",
    "kappa_star",
    "verify_eigen_boundary",
    "boundary_slope",
    "BumpTest",
    "verify_distributional_derivatives",
    "ScaledEigenfunction",
    "scaled_eigenfunction",
    "cached_eigenpair",
    "multi_indices",
]
