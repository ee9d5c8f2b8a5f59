"""Dictionaries of Lambda-harmonic functions and the span of their
derivatives at the origin.

With local variables present (d >= 1) an element is

    w(x, X) = tau(x) * prod_j vbar_j(t_j x_j) * prod_j phi_j(X_j + c_j),

where vbar_j solves d^m vbar = -sign(a_j) vbar, phi_j is the principal
eigenfunction rescaled to the ball of radius r_j (eigenvalue lambda_j) and
the rates satisfy sum |a_j| t_j^m_j = sum A_j lambda_j, so Lambda w = 0 where
tau = 1 and every X_j + c_j stays inside its ball.

Without local variables that balance forces lambda = 0, so each block uses
a difference of two rescaled torsion profiles instead:
psi_r(Y) = (r^2 - |Y|^2)_+^s / mu_0 satisfies (-Delta)^s psi_r = 1 in B_r, so
psi_r(X + c) - psi_R(X + c') is s-harmonic where both balls overlap. Blocks
are multiplied together, which keeps the sum of block operators at zero.
"""

import configparser
import dataclasses
import itertools
import math

import numpy as np
import scipy.linalg

from .constants import torsion_constant
from .fields import OperatorSpec, ScalarField, Sphere
from .jets import Jet, multi_indices, smooth_step, smooth_step_jet, squared_norm


# ---------------------------------------------------------------- ODE factor


@dataclasses.dataclass(frozen=True)
class OdeSolution:
    """vbar with d^m vbar = -a_bar vbar and d^i vbar(0) = 1 for i < m, as a
    combination of exponentials over the roots of r^m = -a_bar."""

    m: int
    a_bar: float
    roots: tuple
    coefs: tuple
    table: tuple

    def derivative(self, y, j=0):
        y = np.asarray(y, dtype=float)
        r = np.asarray(self.roots)
        c = np.asarray(self.coefs)
        out = np.tensordot(c * r**j, np.exp(np.multiply.outer(r, y)), axes=1)
        return out.real

    def __call__(self, y):
        return self.derivative(y, 0)

    def taylor(self, y, K, t=1.0):
        """Taylor coefficients of x -> vbar(t x) at x = y / t: t^j vbar^(j)(y) / j!."""
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.stack(
            [t**j * self.derivative(y, j) / math.factorial(j) for j in range(K + 1)], axis=-1
        )


def ode_solve(m, a_bar, K_max=20):
    m = int(m)
    if m < 1:
        raise ValueError("m must be positive")
    a_bar = 1.0 if a_bar > 0 else -1.0
    theta0 = math.pi if a_bar > 0 else 0.0
    roots = np.exp(1j * (theta0 + 2.0 * math.pi * np.arange(m)) / m)
    V = np.vander(roots, m, increasing=True).T
    coefs = np.linalg.solve(V, np.ones(m, dtype=complex))
    table = [1.0] * m
    while len(table) <= K_max:
        table.append(-a_bar * table[len(table) - m])
    return OdeSolution(m, a_bar, tuple(roots), tuple(coefs), tuple(table[: K_max + 1]))


# ------------------------------------------------------------- rate balance


def balance_rates(spec: OperatorSpec, t, eigenvalues):
    """(lambda_1, ..., lambda_N) with lambda_j = eigenvalues[j] for j < N and
    lambda_N fixed by the balance; ``None`` when lambda_N <= 0."""
    A_N = spec.nonlocal_terms[-1][0]
    if not A_N > 0:
        raise ValueError("the last nonlocal coefficient must be positive (normalize the spec)")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(t) != spec.d:
        raise ValueError("t must have one entry per local term")
    lam = [float(v) for v in list(eigenvalues)[: spec.N - 1]]
    total = sum(abs(a) * tj**m for (a, m), tj in zip(spec.local_terms, t))
    total -= sum(A * l for (A, _, _), l in zip(spec.nonlocal_terms[:-1], lam))
    lam_N = total / A_N
    if not lam_N > 0:
        return None
    return tuple(lam + [lam_N])


def balance_defect(spec: OperatorSpec, t, rates):
    return sum(abs(a) * tj**m for (a, m), tj in zip(spec.local_terms, t)) - sum(
        A * l for (A, _, _), l in zip(spec.nonlocal_terms, rates)
    )


# ------------------------------------------------------------ cutoff factor


def cutoff_values(x, rho):
    """tau(x) = chi(|x| / rho): 1 on B_(rho/2), 0 outside B_rho."""
    return smooth_step(np.linalg.norm(np.atleast_2d(x), axis=1) / rho)


def cutoff_jet(xs, rho):
    """Jet of tau composed with coordinate jets ``xs``."""
    K = xs[0].K
    nv = xs[0].nvars
    q = squared_norm(xs)
    r = np.sqrt(np.maximum(q.value, 0.0)) / rho
    res = Jet.constant(np.where(r <= 0.5, 1.0, 0.0), nv, K)
    mid = (r > 0.5) & (r < 1.0)
    if np.any(mid):
        sub = Jet(q.c[mid], K)
        rj = sub.power(0.5) * (1.0 / rho)
        res.c[mid] = smooth_step_jet(rj).c
    return res


# --------------------------------------------------------------- dictionary


@dataclasses.dataclass(frozen=True)
class Dictionary:
    """A batch of elements sharing one operator and construction ``kind``
    (``"eigen"`` or ``"torsion"``). Per-element parameters are arrays with the
    element index first; ``centers[j]`` holds c_j = e_j + eps_j Y_j."""

    spec: OperatorSpec
    kind: str
    t: np.ndarray
    rates: np.ndarray
    radii: np.ndarray
    directions: tuple
    offsets: tuple
    eps: np.ndarray
    pairs: tuple = ()
    odes: tuple = ()
    cutoff_radius: float = 1.0
    reference_radius: float = 1.0

    def __len__(self):
        return len(self.radii)

    @property
    def centers(self):
        return tuple(
            self.directions[j] + self.eps[:, j : j + 1] * self.offsets[j] for j in range(self.spec.N)
        )

    def subset(self, idx):
        idx = np.asarray(idx)
        return dataclasses.replace(
            self,
            t=self.t[idx],
            rates=self.rates[idx],
            radii=self.radii[idx],
            directions=tuple(d[idx] for d in self.directions),
            offsets=tuple(o[idx] for o in self.offsets),
            eps=self.eps[idx],
        )

    def __getitem__(self, i):
        return DictionaryElement(self, int(i))

    def elements(self):
        return [self[i] for i in range(len(self))]

    def neighborhoods(self):
        """Radius of the ball about 0 on which each element is Lambda-harmonic
        (0.9 times the exact radius, as a safety margin)."""
        out = np.full(len(self), np.inf)
        for j, c in enumerate(self.centers):
            gap = self.radii[:, j] - np.linalg.norm(c, axis=1)
            if self.kind == "torsion":
                gap = np.minimum(gap, self.reference_radius)
            out = np.minimum(out, gap)
        if self.spec.d > 0:
            out = np.minimum(out, 0.5 * self.cutoff_radius)
        return 0.9 * out

    def support_radii(self):
        tot = np.zeros(len(self))
        for j, c in enumerate(self.centers):
            reach = np.linalg.norm(c, axis=1) + self.radii[:, j]
            if self.kind == "torsion":
                reach = np.maximum(reach, self.reference_radius)
            tot += reach**2
        if self.spec.d > 0:
            tot += self.cutoff_radius**2
        return np.sqrt(tot)

    def _split(self, pts):
        d = self.spec.d
        loc = pts[..., :d]
        blocks = [pts[..., list(self.spec.block_axes(j))] for j in range(self.spec.N)]
        return loc, blocks

    def values(self, points, idx=None):
        """Array ``[element, point]`` of element values."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        sub = self if idx is None else self.subset(idx)
        E, P = len(sub), len(pts)
        loc, blocks = sub._split(pts)
        out = np.ones((E, P))
        if sub.spec.d > 0:
            out *= cutoff_values(loc, sub.cutoff_radius)[None, :]
            for j, ode in enumerate(sub.odes):
                out *= ode(np.multiply.outer(sub.t[:, j], loc[:, j]))
        for j, (Xj, c) in enumerate(zip(blocks, sub.centers)):
            Y = Xj[None, :, :] + c[:, None, :]
            rr = np.linalg.norm(Y, axis=2)
            if sub.kind == "eigen":
                out *= sub.pairs[j].profile(rr / sub.radii[:, j : j + 1])
            else:
                s, n = sub.spec.nonlocal_terms[j][1], sub.spec.nonlocal_terms[j][2]
                mu0 = torsion_constant(n, s)
                R = sub.radii[:, j : j + 1]
                a = np.maximum(R**2 - rr**2, 0.0) ** s
                b = np.maximum(sub.reference_radius**2 - np.sum(Xj**2, axis=1), 0.0) ** s
                out *= (a - b[None, :]) / mu0
        return out

    def jets(self, elem_idx, points, K):
        """Jets of the elements ``elem_idx[b]`` at ``points[b]``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        elem_idx = np.asarray(elem_idx)
        nv = pts.shape[1]
        xs = [Jet.variable(pts[:, i], i, nv, K) for i in range(nv)]
        res = Jet.constant(np.ones(len(pts)), nv, K)
        d = self.spec.d
        if d > 0:
            res = res * cutoff_jet(xs[:d], self.cutoff_radius)
            for j, ode in enumerate(self.odes):
                tj = self.t[elem_idx, j]
                series = ode.taylor(tj * pts[:, j], K, tj)
                res = res * xs[j].compose(series)
        for j in range(self.spec.N):
            axes = self.spec.block_axes(j)
            c = self.centers[j][elem_idx]
            r = self.radii[elem_idx, j]
            if self.kind == "eigen":
                Y = [(xs[a] + c[:, k]) * (1.0 / r) for k, a in enumerate(axes)]
                q = squared_norm(Y).value
                inside = q < 1.0
                fac = Jet.constant(np.zeros(len(pts)), nv, K)
                if np.any(inside):
                    sub = [Jet(y.c[inside], K) for y in Y]
                    fac.c[inside] = self.pairs[j].jet_of(sub).c
            else:
                s, n = self.spec.nonlocal_terms[j][1], self.spec.nonlocal_terms[j][2]
                mu0 = torsion_constant(n, s)
                Y = [xs[a] + c[:, k] for k, a in enumerate(axes)]
                fac = _torsion_jet(Y, r, s) - _torsion_jet([xs[a] for a in axes], self.reference_radius, s)
                fac = fac * (1.0 / mu0)
            res = res * fac
        return res

    def origin_derivatives(self, K):
        """Matrix ``[element, multi-index]`` of derivatives at 0."""
        nv = self.spec.nu
        jet = self.jets(np.arange(len(self)), np.zeros((len(self), nv)), K)
        return jet.derivative_table(multi_indices(nv, K))


def _torsion_jet(Y, r, s):
    """Jet of (r^2 - |Y|^2)_+^s (zero where the base is outside the ball)."""
    q = squared_norm(Y)
    r = np.broadcast_to(np.asarray(r, dtype=float), q.value.shape)
    base = r**2 - q.value
    inside = base > 0
    out = Jet.constant(np.zeros(len(base)), q.nvars, q.K)
    if np.any(inside):
        sub = Jet(q.c[inside], q.K)
        out.c[inside] = ((-sub) + r[inside] ** 2).power(s).c
    return out


@dataclasses.dataclass(frozen=True)
class DictionaryElement:
    """One element of a :class:`Dictionary`."""

    dictionary: Dictionary
    index: int

    @property
    def spec(self):
        return self.dictionary.spec

    @property
    def t(self):
        return tuple(self.dictionary.t[self.index])

    @property
    def rates(self):
        return tuple(self.dictionary.rates[self.index])

    @property
    def radii(self):
        return tuple(self.dictionary.radii[self.index])

    @property
    def centers(self):
        return tuple(tuple(c[self.index]) for c in self.dictionary.centers)

    @property
    def neighborhood(self):
        return float(self.dictionary.neighborhoods()[self.index])

    @property
    def support_radius(self):
        return float(self.dictionary.support_radii()[self.index])

    def __call__(self, points):
        return self.dictionary.values(points, [self.index])[0]

    def jet(self, points, K):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.dictionary.jets(np.full(len(pts), self.index), pts, K)

    def derivative(self, points, alpha):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.jet(pts, sum(alpha)).derivative(alpha)

    def breaks(self):
        dic = self.dictionary
        out = []
        for j in range(self.spec.N):
            axes = self.spec.block_axes(j)
            c = dic.centers[j][self.index]
            out.append(Sphere(tuple(-c), float(dic.radii[self.index, j]), axes))
            if dic.kind == "torsion":
                out.append(Sphere((0.0,) * len(axes), dic.reference_radius, axes))
        return tuple(out)

    def field(self):
        return ScalarField(
            evaluator=self,
            dim=self.spec.nu,
            support_radius=self.support_radius,
            smooth_radius=self.neighborhood,
            breaks=self.breaks(),
            derivative=self.derivative,
        )


def build_element(spec, t, directions, offsets, eps, eigenpairs, cutoff_radius=1.0):
    """A single element from explicit parameters.

    ``directions[j]`` must lie on the sphere of radius r_j (fixed by the
    balanced rate), ``offsets[j]`` must point inward and ``eps`` (scalar or
    per block) must keep c_j = e_j + eps Y_j strictly inside that sphere.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if spec.d == 0:
        raise ValueError("purely nonlocal operators use build_torsion_element")
    rates = balance_rates(spec, t, [p.lambda_star for p in eigenpairs])
    if rates is None:
        raise ValueError("t lies outside the admissible set (lambda_N <= 0)")
    radii = [
        (p.lambda_star / lam) ** (1.0 / (2.0 * p.s)) for p, lam in zip(eigenpairs, rates)
    ]
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (spec.N,))
    dirs, offs = [], []
    for j, (e, Y) in enumerate(zip(directions, offsets)):
        e = np.asarray(e, dtype=float).reshape(-1)
        Y = np.asarray(Y, dtype=float).reshape(-1)
        if not np.isclose(np.linalg.norm(e), radii[j], rtol=1e-9):
            raise ValueError(f"direction {j} must have length r_j = {radii[j]:.6g}")
        if not float(np.dot(e, Y)) < 0:
            raise ValueError(f"offset {j} must point inward (e_j . Y_j < 0)")
        if not np.linalg.norm(e + eps[j] * Y) < radii[j]:
            raise ValueError(f"eps moves centre {j} outside its ball")
        dirs.append(e[None, :])
        offs.append(Y[None, :])
    dic = Dictionary(
        spec=spec,
        kind="eigen",
        t=t[None, :],
        rates=np.asarray(rates)[None, :],
        radii=np.asarray(radii)[None, :],
        directions=tuple(dirs),
        offsets=tuple(offs),
        eps=np.asarray(eps)[None, :],
        pairs=tuple(eigenpairs),
        odes=tuple(ode_solve(m, np.sign(a), 40) for a, m in spec.local_terms),
        cutoff_radius=cutoff_radius,
    )
    return dic[0]


def build_torsion_element(spec, radii, directions, offsets, eps, reference_radius=1.0):
    """Product over blocks of psi_(r_j)(X_j + c_j) - psi_R(X_j)."""
    if spec.d != 0:
        raise ValueError("torsion elements are for purely nonlocal operators")
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (spec.N,))
    dirs = tuple(np.asarray(e, dtype=float).reshape(1, -1) for e in directions)
    offs = tuple(np.asarray(Y, dtype=float).reshape(1, -1) for Y in offsets)
    dic = Dictionary(
        spec=spec,
        kind="torsion",
        t=np.zeros((1, 0)),
        rates=np.zeros((1, spec.N)),
        radii=np.asarray(radii, dtype=float).reshape(1, -1),
        directions=dirs,
        offsets=offs,
        eps=np.asarray(eps)[None, :],
        reference_radius=reference_radius,
    )
    if not np.all(dic.neighborhoods() > 0):
        raise ValueError("centres must lie strictly inside their balls")
    return dic[0]


# ------------------------------------------------------------------ policy


@dataclasses.dataclass(frozen=True)
class DictionaryPolicy:
    """Sampling grids for the free parameters of the construction.

    Block radii r_j are placed on a log grid in ``radius_range`` (``radius_count``
    values, default K + 3); the rates t follow from the balance. Directions are
    the 2 n_j coordinate directions scaled to r_j, offsets Y = -rho_Y e / |e|
    and eps = fraction * r_j.
    """

    radius_range: tuple = (0.5, 2.0)
    radius_count: int = 0
    fractions: tuple = (0.4, 0.3, 0.2)
    rho_y: tuple = (0.5, 1.0, 2.0)
    cutoff_radius: float = 1.0
    reference_radius: float = 1.0
    max_elements: int = 500
    seed: int = 0

    def count(self, K):
        return self.radius_count if self.radius_count > 0 else K + 3

    @classmethod
    def from_mapping(cls, mapping):
        kw = {}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key in ("radius_range", "fractions", "rho_y"):
                kw[key] = tuple(float(v) for v in str(raw).replace(",", " ").split())
            elif key in ("radius_count", "max_elements", "seed"):
                kw[key] = int(raw)
            elif key in ("cutoff_radius", "reference_radius"):
                kw[key] = float(raw)
            else:
                raise KeyError(f"unknown dictionary option {key!r}")
        return cls(**kw)

    @classmethod
    def from_file(cls, path, section="dictionary"):
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(path)
        if not parser.has_section(section):
            return cls()
        return cls.from_mapping(dict(parser.items(section)))


def _axis_directions(n):
    eye = np.eye(n)
    return np.vstack([eye, -eye])


def _block_choices(n, policy):
    """(unit direction, rho_Y, fraction) triples for one block."""
    return [
        (u, ry, fr)
        for u in _axis_directions(n)
        for ry in policy.rho_y
        for fr in policy.fractions
        if fr * ry < 1.0
    ]


def _rates_for_radius(spec, pairs, r):
    """Local rates t giving the last block radius r (d = 1), or None."""
    A_N, s_N, _ = spec.nonlocal_terms[-1]
    lam_N = pairs[-1].lambda_star * r ** (-2.0 * s_N)
    rest = sum(A * p.lambda_star for (A, _, _), p in zip(spec.nonlocal_terms[:-1], pairs[:-1]))
    a, m = spec.local_terms[0]
    val = (A_N * lam_N + rest) / abs(a)
    if not val > 0:
        return None
    return np.array([val ** (1.0 / m)])


def _local_rates(spec, pairs, K, policy, rng):
    lo, hi = policy.radius_range
    count = policy.count(K)
    if spec.d == 1:
        out = []
        for r in np.geomspace(lo, hi, count):
            t = _rates_for_radius(spec, pairs, r)
            if t is not None:
                out.append(t)
        return out
    out = []
    target = count * spec.d
    for _ in range(200 * target):
        t = np.exp(rng.uniform(math.log(0.05), math.log(20.0), spec.d))
        rates = balance_rates(spec, t, [p.lambda_star for p in pairs])
        if rates is None:
            continue
        r = (pairs[-1].lambda_star / rates[-1]) ** (1.0 / (2.0 * spec.nonlocal_terms[-1][1]))
        if lo <= r <= hi:
            out.append(t)
        if len(out) >= target:
            break
    return out


def build_dictionary(spec: OperatorSpec, K, eigenpairs=None, policy=DictionaryPolicy()):
    """Sample a dictionary for ``spec`` following ``policy``.

    ``spec`` must have a positive last nonlocal coefficient when d >= 1 (see
    :meth:`OperatorSpec.normalized`). ``eigenpairs`` gives one principal pair
    per nonlocal block (unused when d = 0).
    """
    rng = np.random.default_rng(policy.seed)
    N = spec.N
    choices = [_block_choices(n, policy) for _, _, n in spec.nonlocal_terms]
    if spec.d == 0:
        kind = "torsion"
        radii_sets = [
            np.full(N, r) for r in np.geomspace(*policy.radius_range, policy.count(K))
        ]
        ts = [np.zeros(0)] * len(radii_sets)
        rates_sets = [np.zeros(N)] * len(radii_sets)
    else:
        kind = "eigen"
        if eigenpairs is None or len(eigenpairs) != N:
            raise ValueError("one eigenpair per nonlocal block is required")
        ts = _local_rates(spec, eigenpairs, K, policy, rng)
        rates_sets = [np.asarray(balance_rates(spec, t, [p.lambda_star for p in eigenpairs])) for t in ts]
        radii_sets = [
            np.array([(p.lambda_star / l) ** (1.0 / (2.0 * p.s)) for p, l in zip(eigenpairs, lam)])
            for lam in rates_sets
        ]
    if not ts:
        raise ValueError("no admissible rates found for this operator")
    combos = list(itertools.product(*[range(len(c)) for c in choices]))
    per_t = max(1, policy.max_elements // len(ts))
    rows = []
    for ti in range(len(ts)):
        if len(combos) > per_t:
            pick = rng.choice(len(combos), per_t, replace=False)
            sel = [combos[i] for i in sorted(pick)]
        else:
            sel = combos
        rows.extend((ti, c) for c in sel)
    E = len(rows)
    t_arr = np.array([ts[ti] for ti, _ in rows]).reshape(E, spec.d)
    rates = np.array([rates_sets[ti] for ti, _ in rows])
    radii = np.array([radii_sets[ti] for ti, _ in rows])
    dirs, offs, eps = [], [], np.empty((E, N))
    for j in range(N):
        D = np.empty((E, spec.nonlocal_terms[j][2]))
        Y = np.empty_like(D)
        for i, (ti, combo) in enumerate(rows):
            u, ry, fr = choices[j][combo[j]]
            r = radii[i, j]
            D[i] = r * u
            Y[i] = -ry * u
            eps[i, j] = fr * r
        dirs.append(D)
        offs.append(Y)
    return Dictionary(
        spec=spec,
        kind=kind,
        t=t_arr,
        rates=rates,
        radii=radii,
        directions=tuple(dirs),
        offsets=tuple(offs),
        eps=eps,
        pairs=tuple(eigenpairs or ()),
        odes=tuple(ode_solve(m, np.sign(a), 40) for a, m in spec.local_terms),
        cutoff_radius=policy.cutoff_radius,
        reference_radius=policy.reference_radius,
    )


# ------------------------------------------------------------------- matrix


@dataclasses.dataclass(frozen=True)
class DerivativeMatrix:
    """Rows are elements, columns the derivatives d^iota w(0), |iota| <= K.

    ``scale`` equilibrates the columns (unit Euclidean norm); conditioning is
    reported for the equilibrated matrix, whose column space is the same.
    """

    K: int
    indices: tuple
    matrix: np.ndarray
    scale: np.ndarray
    singular_values: np.ndarray

    @property
    def K_prime(self):
        return len(self.indices)

    @property
    def rank_ratio(self):
        sv = self.singular_values
        if len(sv) < self.K_prime or sv[0] == 0:
            return 0.0
        return float(sv[self.K_prime - 1] / sv[0])

    def numerical_rank(self, threshold=1e-8):
        sv = self.singular_values
        if len(sv) == 0 or sv[0] == 0:
            return 0
        return int(np.sum(sv >= threshold * sv[0]))

    def column(self, iota):
        return self.indices.index(tuple(iota))


def assemble_matrix(elements, K):
    """Derivative matrix of a :class:`Dictionary` (or a list of elements of
    one dictionary) at the origin."""
    if isinstance(elements, Dictionary):
        dic = elements
    else:
        elements = list(elements)
        if not elements:
            raise ValueError("no elements")
        dic = elements[0].dictionary.subset([e.index for e in elements])
    nv = dic.spec.nu
    idx = tuple(multi_indices(nv, K))
    M = dic.origin_derivatives(K)
    norms = np.linalg.norm(M, axis=0)
    scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    sv = np.linalg.svd(M * scale[None, :], compute_uv=False)
    return DerivativeMatrix(K, idx, M, scale, sv)


class RankDeficientSpan(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def span_solve(matrix: DerivativeMatrix, target, rcond=1e-10, tol=1e-8):
    """Minimal-norm coefficients c with c^T M = target.

    The equations are column-equilibrated before the SVD solve (each equation
    is multiplied by its column scale, which leaves the solution set
    unchanged); the residual is measured in that scaled metric.
    """
    target = np.asarray(target, dtype=float).reshape(-1)
    if len(target) != matrix.K_prime:
        raise ValueError("target length must equal K'")
    if not np.any(target):
        return np.zeros(matrix.matrix.shape[0])
    S = matrix.scale
    Ms = matrix.matrix * S[None, :]
    b = S * target
    U, sv, Vt = np.linalg.svd(Ms.T, full_matrices=False)
    keep = sv > rcond * sv[0]
    c = Vt[keep].T @ ((U[:, keep].T @ b) / sv[keep])
    res = float(np.linalg.norm(Ms.T @ c - b))
    if res > tol * float(np.linalg.norm(b)):
        raise RankDeficientSpan(
            f"target not in the numerical span (scaled residual {res:.3e})", res
        )
    return c


def select_basis(matrix: DerivativeMatrix, rcond=1e-10):
    """Rows (elements) chosen by column-pivoted QR of the equilibrated
    transpose; as many as the numerical rank, in pivot order."""
    Ms = matrix.matrix * matrix.scale[None, :]
    if Ms.shape[0] == 0:
        return np.zeros(0, dtype=int)
    _, R, piv = scipy.linalg.qr(Ms.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > rcond * d[0])) if d[0] > 0 else 0
    return np.sort(piv[:rank])


def restrict_matrix(matrix: DerivativeMatrix, rows):
    sub = matrix.matrix[rows]
    sv = np.linalg.svd(sub * matrix.scale[None, :], compute_uv=False)
    return DerivativeMatrix(matrix.K, matrix.indices, sub, matrix.scale, sv)


def one_hot(matrix: DerivativeMatrix, iota):
    e = np.zeros(matrix.K_prime)
    e[matrix.column(iota)] = 1.0
    return e


def combined_field(dic: Dictionary, coefs, threshold=0.0):
    """sum_i coefs[i] w_i as a field with per-element components."""
    coefs = np.asarray(coefs, dtype=float)
    keep = np.flatnonzero(np.abs(coefs) > threshold)
    if len(keep) == 0:
        raise ValueError("all coefficients vanish")
    sub = dic.subset(keep)
    c = coefs[keep]
    elems = sub.elements()
    fields = [e.field() for e in elems]

    def ev(p):
        return c @ sub.values(p)

    def der(p, alpha):
        p = np.atleast_2d(p)
        K = sum(alpha)
        out = np.zeros(len(p))
        for ci, e in zip(c, elems):
            out += ci * e.jet(p, K).derivative(alpha)
        return out

    return ScalarField(
        evaluator=ev,
        dim=dic.spec.nu,
        support_radius=float(np.max(sub.support_radii())),
        smooth_radius=float(np.min(sub.neighborhoods())),
        derivative=der,
        components=tuple(zip(c, fields)),
    )
