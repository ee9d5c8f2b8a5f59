"""Approximation of monomials, polynomials and general targets by
Lambda-harmonic functions.

For a monomial x^iota / iota! the dictionary is used to build w with
d^iota w(0) = 1 and every other derivative of order <= K vanishing; then

    u(p) = eta^(-gamma) w(eta^(e_1) p_1, ..., eta^(e_nu) p_nu),

with e the anisotropic scaling exponents (1/m_j locally, 1/(2 s_j) in the
nonlocal blocks) and gamma = e . iota. The monomial is invariant under this
rescaling, so u - f is the rescaled Taylor remainder of w, which is O(eta),
while Lambda u = 0 wherever the rescaled point stays inside the neighbourhood
on which w is Lambda-harmonic.
"""

import ast
import configparser
import dataclasses
import functools
import itertools
import json
import math
import operator
from typing import Optional

import numpy as np

from .eigen import EigenConfig, cached_eigenpair
from .fields import (
    OperatorSpec,
    ScalarField,
    anisotropic_scaling,
    caloric_spec,
    linear_combination,
    permuted_field,
)
from .fracop import central_stencil, lambda_residual_at
from .jets import factorial_multi, multi_indices
from .quadrature import DEFAULT_QUAD, QuadConfig
from .spanner import (
    DictionaryPolicy,
    RankDeficientSpan,
    assemble_matrix,
    build_dictionary,
    one_hot,
    restrict_matrix,
    select_basis,
    span_solve,
)


class ApproximationFailure(RuntimeError):
    """The requested accuracy was not reached before eta underflowed."""

    def __init__(self, message, best_error, best_eta):
        super().__init__(message)
        self.best_error = best_error
        self.best_eta = best_eta


class PositivityViolation(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ------------------------------------------------------------------ config


@dataclasses.dataclass(frozen=True)
class ApproximationConfig:
    """Knobs of the pipeline. Errors are measured on the box [-box, box]^nu
    with ``grid_points`` nodes per axis; the Lambda-residual is sampled at
    the origin and ``residual_points - 1`` seeded points of the box."""

    box: float = 1.0
    grid_points: int = 17
    eta_start: float = 0.25
    eta_min: float = 1e-8
    residual_tol: float = 1e-3
    residual_points: int = 5
    degree_budget: int = 10
    fit_points: int = 25
    fd_step: float = 1e-3
    seed: int = 0
    solver: str = "basis"
    policy: DictionaryPolicy = DictionaryPolicy()
    eigen: EigenConfig = EigenConfig()
    quad: QuadConfig = DEFAULT_QUAD

    def grid(self, nu):
        axis = np.linspace(-self.box, self.box, self.grid_points)
        return np.array(list(itertools.product(axis, repeat=nu)))

    def residual_sample(self, nu):
        rng = np.random.default_rng(self.seed)
        pts = rng.uniform(-self.box, self.box, (max(self.residual_points - 1, 0), nu))
        return np.vstack([np.zeros((1, nu)), pts])

    def coverage(self, nu):
        """Radius the guarantee region must reach (half-diagonal of the box)."""
        return self.box * math.sqrt(nu)

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = dataclasses.asdict(v) if dataclasses.is_dataclass(v) else v
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "policy" in data:
            p = dict(data["policy"])
            for key in ("radius_range", "fractions", "rho_y"):
                if key in p:
                    p[key] = tuple(p[key])
            data["policy"] = DictionaryPolicy(**p)
        if "eigen" in data:
            data["eigen"] = EigenConfig(**data["eigen"])
        if "quad" in data:
            data["quad"] = QuadConfig(**data["quad"])
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(path)
        kw = {}
        if parser.has_section("approximator"):
            types = {f.name: f.type for f in dataclasses.fields(cls)}
            for key, raw in parser.items("approximator"):
                key = key.replace("-", "_")
                if key not in types or key in ("policy", "eigen", "quad"):
                    raise KeyError(f"unknown approximator option {key!r}")
                default = getattr(cls, key)
                kw[key] = type(default)(raw) if not isinstance(default, int) else int(raw)
        if parser.has_section("dictionary"):
            kw["policy"] = DictionaryPolicy.from_file(path)
        if parser.has_section("quadrature"):
            kw["quad"] = QuadConfig.from_file(path)
        if parser.has_section("eigen"):
            ek = {}
            for key, raw in parser.items("eigen"):
                key = key.replace("-", "_")
                ek[key] = float(raw) if key == "tol" else int(raw)
            kw["eigen"] = EigenConfig(**ek)
        return cls(**kw)


DEFAULT_CONFIG = ApproximationConfig()


# -------------------------------------------------------------- polynomials


@dataclasses.dataclass(frozen=True)
class Polynomial:
    """sum_j c_j p^(iota_j) in ``dim`` variables (plain power coefficients)."""

    dim: int
    terms: tuple = ()

    def __post_init__(self):
        acc = {}
        for iota, c in self.terms:
            iota = tuple(int(v) for v in iota)
            if len(iota) != self.dim or min(iota, default=0) < 0:
                raise ValueError(f"bad exponent {iota}")
            acc[iota] = acc.get(iota, 0.0) + float(c)
        terms = tuple(sorted((i, c) for i, c in acc.items() if c != 0.0))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def monomial(cls, iota, coef=1.0):
        return cls(len(iota), ((tuple(iota), coef),))

    @classmethod
    def constant(cls, dim, value):
        return cls(dim, (((0,) * dim, value),))

    @property
    def degree(self):
        return max((sum(i) for i, _ in self.terms), default=0)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        other = _as_poly(other, self.dim)
        return Polynomial(self.dim, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, tuple((i, -c) for i, c in self.terms))

    def __sub__(self, other):
        return self + (-_as_poly(other, self.dim))

    def __rsub__(self, other):
        return _as_poly(other, self.dim) - self

    def __mul__(self, other):
        other = _as_poly(other, self.dim)
        return Polynomial(
            self.dim,
            tuple(
                (tuple(a + b for a, b in zip(i, j)), c * d)
                for i, c in self.terms
                for j, d in other.terms
            ),
        )

    __rmul__ = __mul__

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers are polynomials")
        out = Polynomial.constant(self.dim, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def __call__(self, points):
        return self.derivative(points, (0,) * self.dim)

    def derivative(self, points, beta):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for iota, c in self.terms:
            if any(b > i for b, i in zip(beta, iota)):
                continue
            w = c * math.prod(math.perm(i, b) for i, b in zip(iota, beta))
            out += w * np.prod(pts ** (np.array(iota) - np.array(beta)), axis=1)
        return out

    def field(self, support_radius):
        """The polynomial as a field (cut off outside ``support_radius``)."""
        return ScalarField(
            evaluator=self,
            dim=self.dim,
            support_radius=support_radius,
            smooth_radius=support_radius,
            derivative=self.derivative,
        )

    def to_list(self):
        return [[list(i), c] for i, c in self.terms]


def _as_poly(v, dim):
    if isinstance(v, Polynomial):
        if v.dim != dim:
            raise ValueError("dimension mismatch")
        return v
    return Polynomial.constant(dim, float(v))


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Pow: operator.pow,
}


def parse_polynomial(text, variables):
    """Parse expressions such as ``"1 + x^2/4"`` or ``"t*x"`` over the named
    variables (``^`` and ``**`` both denote powers; division only by numbers)."""
    dim = len(variables)
    names = {v: Polynomial.monomial(tuple(int(k == i) for k in range(dim))) for i, v in enumerate(variables)}

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown variable {node.id!r}; expected one of {list(variables)}")
            return names[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Div):
                if isinstance(b, Polynomial):
                    raise ValueError("division by a polynomial")
                return a * (1.0 / b)
            if isinstance(node.op, ast.Pow):
                if isinstance(b, Polynomial):
                    raise ValueError("exponents must be numbers")
                if not isinstance(a, Polynomial):
                    return a**b
            if type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](a, b)
        raise ValueError(f"unsupported expression: {ast.dump(node)}")

    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}") from exc
    return _as_poly(walk(tree), dim)


# --------------------------------------------------------------------- plan


@dataclasses.dataclass(frozen=True)
class ApproximationPlan:
    iota: tuple
    gamma: float
    mu: float
    K_o: int
    K: int
    eta: Optional[float] = None

    def to_dict(self):
        return dataclasses.asdict(self)


def plan(spec: OperatorSpec, iota, k, eta=None):
    """gamma = sum i_j / m_j + sum |I_j| / (2 s_j), mu the smallest scaling
    exponent, K_o the least integer >= (gamma + 1) / mu and
    K = K_o + |iota| + k."""
    iota = tuple(int(v) for v in iota)
    if len(iota) != spec.nu or min(iota) < 0:
        raise ValueError("iota must hold one non-negative exponent per variable")
    if k < 0:
        raise ValueError("k must be non-negative")
    exps = spec.scaling_exponents()
    gamma = float(np.dot(exps, iota))
    mu = float(np.min(exps))
    K_o = int(math.ceil((gamma + 1.0) / mu - 1e-12))
    return ApproximationPlan(iota, gamma, mu, K_o, K_o + sum(iota) + int(k), eta)


# ----------------------------------------------------- normalized operators


def _normalize(spec: OperatorSpec):
    """Normalized spec plus ``perm`` with q = p[perm] its coordinates."""
    if spec.d == 0:
        return spec, tuple(range(spec.nu))
    norm, _, order = spec.normalized()
    perm = list(range(spec.d))
    for j in order:
        perm.extend(spec.block_axes(j))
    return norm, tuple(perm)


_DICT_CACHE = {}


def dictionary_for(spec: OperatorSpec, K, config=DEFAULT_CONFIG):
    """Cached (dictionary, derivative matrix) for a normalized spec."""
    key = (spec, K, config.policy, config.eigen)
    if key not in _DICT_CACHE:
        pairs = None
        if spec.d > 0:
            pairs = [cached_eigenpair(n, s, config.eigen) for _, s, n in spec.nonlocal_terms]
        dic = build_dictionary(spec, K, pairs, config.policy)
        _DICT_CACHE[key] = (dic, assemble_matrix(dic, K))
    return _DICT_CACHE[key]


def _derivatives_of_sum(dic, coefs, points, beta, chunk=200000):
    """sum_i coefs[i] d^beta w_i at ``points``."""
    K = sum(beta)
    if K == 0:
        return coefs @ dic.values(points)
    E, P = len(dic), len(points)
    out = np.zeros(P)
    step = max(1, chunk // max(P, 1))
    for lo in range(0, E, step):
        idx = np.arange(lo, min(E, lo + step))
        jet = dic.jets(np.repeat(idx, P), np.tile(points, (len(idx), 1)), K)
        out += coefs[idx] @ jet.derivative(beta).reshape(len(idx), P)
    return out


# ------------------------------------------------------------ monomial term


@dataclasses.dataclass(frozen=True)
class MonomialTerm:
    """u = eta^(-gamma) w(eta^e q) with q = p[perm] and w = sum c_i w_i;
    approximates p^iota / iota! (``iota`` in the original coordinates)."""

    spec: OperatorSpec
    perm: tuple
    plan: ApproximationPlan
    dictionary: object
    coefs: np.ndarray
    span_residual: float
    element_ids: tuple = ()

    @property
    def eta(self):
        return self.plan.eta

    @property
    def exponents(self):
        return self.spec.scaling_exponents()

    @property
    def scales(self):
        return self.eta**self.exponents

    @property
    def factor(self):
        return self.eta ** (-self.plan.gamma)

    @property
    def base_radius(self):
        return float(np.min(self.dictionary.neighborhoods()))

    @property
    def region(self):
        """Radius of the ball about 0 on which Lambda u = 0."""
        return self.base_radius * self.eta ** (-self.plan.mu)

    @property
    def support_radius(self):
        return float(np.max(self.dictionary.support_radii())) / float(np.min(self.scales))

    def with_eta(self, eta):
        return dataclasses.replace(self, plan=dataclasses.replace(self.plan, eta=float(eta)))

    def _q(self, points):
        return np.atleast_2d(np.asarray(points, dtype=float))[:, list(self.perm)]

    def __call__(self, points):
        return self.derivative(points, (0,) * self.spec.nu)

    def derivative(self, points, beta):
        q = self._q(points)
        bq = tuple(int(beta[i]) for i in self.perm)
        w = float(np.prod(self.scales ** np.asarray(bq)))
        return self.factor * w * _derivatives_of_sum(self.dictionary, self.coefs, q * self.scales, bq)

    def field(self):
        """Field in the original coordinates with one component per element,
        so nonlocal operators can be applied element by element."""
        comps = [
            anisotropic_scaling(e.field(), 1.0, self.scales, e.neighborhood * self.eta ** (-self.plan.mu))
            for e in self.dictionary.elements()
        ]
        f = linear_combination(comps, self.factor * self.coefs)
        return permuted_field(f, self.perm)

    def target(self):
        return Polynomial.monomial(self.plan.iota, 1.0 / factorial_multi(self.plan.iota))


def monomial_term(spec: OperatorSpec, iota, k, config=DEFAULT_CONFIG):
    """The eta-independent part: w with one-hot derivatives at 0 up to order K."""
    norm, perm = _normalize(spec)
    p = plan(spec, iota, k)
    iota_q = tuple(p.iota[i] for i in perm)
    dic, M = dictionary_for(norm, p.K, config)
    target = one_hot(M, iota_q)
    if config.solver == "basis":
        rows = select_basis(M)
        c = np.zeros(len(dic))
        c[rows] = span_solve(restrict_matrix(M, rows), target)
    elif config.solver == "minnorm":
        c = span_solve(M, target)
    else:
        raise ValueError(f"unknown solver {config.solver!r}")
    res = float(np.linalg.norm(M.matrix.T @ c - target))
    keep = np.flatnonzero(c != 0.0)
    return MonomialTerm(norm, perm, p, dic.subset(keep), c[keep], res, tuple(int(i) for i in keep))


# ------------------------------------------------------------- measurement


def _fd_derivative(f, points, beta, h):
    """Tensor-product central differences of ``f`` at ``points``."""
    pts = np.atleast_2d(points)
    stencils = []
    for axis, b in enumerate(beta):
        if b == 0:
            continue
        off, w = central_stencil(b)
        stencils.append((axis, off * h, w / h**b))
    if not stencils:
        return np.asarray(f(pts), dtype=float)
    out = np.zeros(len(pts))
    for combo in itertools.product(*[range(len(s[1])) for s in stencils]):
        shifted = pts.copy()
        weight = 1.0
        for (axis, offs, ws), i in zip(stencils, combo):
            shifted[:, axis] += offs[i]
            weight *= ws[i]
        out += weight * np.asarray(f(shifted), dtype=float)
    return out


def target_derivative(f, points, beta, h=1e-3):
    if isinstance(f, Polynomial):
        return f.derivative(points, beta)
    if getattr(f, "derivative", None) is not None:
        return np.asarray(f.derivative(np.atleast_2d(points), tuple(beta)), dtype=float)
    return _fd_derivative(f, points, beta, h)


def ck_error(u, f, k, points, h=1e-3):
    """max over the points and |beta| <= k of |d^beta (u - f)|. ``u`` must
    provide ``derivative(points, beta)``."""
    nu = points.shape[1]
    worst = 0.0
    for beta in multi_indices(nu, k):
        du = u.derivative(points, beta)
        df = target_derivative(f, points, beta, h)
        worst = max(worst, float(np.max(np.abs(du - df))))
    return worst


def error_curve(term: MonomialTerm, k, etas, config=DEFAULT_CONFIG):
    """Measured C^k error of the rescaled w against its monomial for each eta."""
    grid = config.grid(term.spec.nu)
    f = term.target()
    return [ck_error(term.with_eta(eta), f, k, grid, config.fd_step) for eta in etas]


def loglog_slope(etas, errors):
    return float(np.polyfit(np.log(etas), np.log(errors), 1)[0])


# ------------------------------------------------------------------ results


@dataclasses.dataclass(frozen=True)
class ApproximationResult:
    """u = sum_j weights[j] * terms[j]; ``achieved_error`` is the measured
    C^k distance to the target on the evaluation grid and ``lambda_residual``
    the largest |Lambda u| over the sampled points of the guarantee region."""

    spec: OperatorSpec
    k: int
    eps: float
    terms: tuple
    weights: tuple
    achieved_error: float
    lambda_residual: float
    residual_points: np.ndarray
    residual_values: np.ndarray
    config: ApproximationConfig = DEFAULT_CONFIG
    target: Optional[Polynomial] = None
    fit_degree: Optional[int] = None
    fit_error: float = 0.0

    @property
    def region(self):
        return min((t.region for t in self.terms), default=math.inf)

    @property
    def support_radius(self):
        return max((t.support_radius for t in self.terms), default=0.0)

    @property
    def residual_ok(self):
        return self.lambda_residual <= self.config.residual_tol

    @property
    def error_ok(self):
        return self.achieved_error <= self.eps

    @property
    def ok(self):
        return self.error_ok and self.residual_ok and self.region >= self.config.coverage(self.spec.nu)

    @property
    def plans(self):
        return tuple(t.plan for t in self.terms)

    def derivative(self, points, beta):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for w, t in zip(self.weights, self.terms):
            out += w * t.derivative(pts, beta)
        return out

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.derivative(pts, (0,) * self.spec.nu)
        outside = np.linalg.norm(pts, axis=1) > self.support_radius
        return np.where(outside, 0.0, out)

    @functools.cached_property
    def _field(self):
        if not self.terms:
            from .fields import zero_field

            return zero_field(self.spec.nu, max(self.config.box, 1.0) * math.sqrt(self.spec.nu))
        return linear_combination([t.field() for t in self.terms], self.weights)

    def field(self):
        return self._field

    def error_map(self, f=None):
        """Rows (point..., max_beta |d^beta (u - f)|) over the evaluation grid."""
        f = self.target if f is None else f
        grid = self.config.grid(self.spec.nu)
        worst = np.zeros(len(grid))
        for beta in multi_indices(self.spec.nu, self.k):
            d = self.derivative(grid, beta) - target_derivative(f, grid, beta, self.config.fd_step)
            worst = np.maximum(worst, np.abs(d))
        return grid, worst

    def to_dict(self):
        return {
            "kind": "approximation-result",
            "spec": self.spec.to_dict(),
            "k": self.k,
            "eps": self.eps,
            "config": self.config.to_dict(),
            "target": None if self.target is None else self.target.to_list(),
            "fit_degree": self.fit_degree,
            "fit_error": self.fit_error,
            "achieved_error": self.achieved_error,
            "lambda_residual": self.lambda_residual,
            "region": self.region,
            "support_radius": self.support_radius,
            "residual_points": np.asarray(self.residual_points).tolist(),
            "residual_values": np.asarray(self.residual_values).tolist(),
            "terms": [
                {
                    "weight": w,
                    "plan": t.plan.to_dict(),
                    "span_residual": t.span_residual,
                    "elements": [int(i) for i in t.element_ids],
                    "coefs": np.asarray(t.coefs).tolist(),
                }
                for w, t in zip(self.weights, self.terms)
            ],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data):
        spec = OperatorSpec.from_dict(data["spec"])
        config = ApproximationConfig.from_dict(data["config"])
        norm, perm = _normalize(spec)
        terms, weights = [], []
        for item in data["terms"]:
            p = ApproximationPlan(**{**item["plan"], "iota": tuple(item["plan"]["iota"])})
            dic, _ = dictionary_for(norm, p.K, config)
            ids = np.asarray(item["elements"], dtype=int)
            terms.append(
                MonomialTerm(norm, perm, p, dic.subset(ids), np.asarray(item["coefs"]), item["span_residual"], tuple(ids))
            )
            weights.append(item["weight"])
        target = None if data["target"] is None else Polynomial(spec.nu, tuple((tuple(i), c) for i, c in data["target"]))
        return cls(
            spec=spec,
            k=data["k"],
            eps=data["eps"],
            terms=tuple(terms),
            weights=tuple(weights),
            achieved_error=data["achieved_error"],
            lambda_residual=data["lambda_residual"],
            residual_points=np.asarray(data["residual_points"]),
            residual_values=np.asarray(data["residual_values"]),
            config=config,
            target=target,
            fit_degree=data["fit_degree"],
            fit_error=data["fit_error"],
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------- pipeline


def _search_eta(term: MonomialTerm, k, budget, config):
    """Halve eta from ``eta_start`` until the measured error is within
    ``budget`` and the guarantee region covers the box."""
    grid = config.grid(term.spec.nu)
    f = term.target()
    best = (math.inf, None)
    eta = config.eta_start
    while eta >= config.eta_min:
        cand = term.with_eta(eta)
        err = ck_error(cand, f, k, grid, config.fd_step)
        if err < best[0]:
            best = (err, eta)
        if err <= budget and cand.region >= config.coverage(term.spec.nu):
            return cand, err
        eta *= 0.5
    raise ApproximationFailure(
        f"error {best[0]:.3e} > {budget:.3e} for iota={term.plan.iota} before eta < {config.eta_min:g}",
        best[0],
        best[1],
    )


def _residuals(spec, field, points, quad):
    return np.array([float(lambda_residual_at(spec, field, p, quad)) for p in points])


def _finish(spec, k, eps, terms, weights, f, config, target=None, fit_degree=None, fit_error=0.0):
    grid = config.grid(spec.nu)
    pts = config.residual_sample(spec.nu)
    if terms:
        partial = ApproximationResult(spec, k, eps, tuple(terms), tuple(weights), 0.0, 0.0, pts, np.zeros(len(pts)), config)
        err = ck_error(partial, f, k, grid, config.fd_step)
        res = _residuals(spec, partial.field(), pts, config.quad)
    else:
        zero = Polynomial(spec.nu)
        err = ck_error(_Wrap(zero), f, k, grid, config.fd_step)
        res = np.zeros(len(pts))
    return ApproximationResult(
        spec=spec,
        k=k,
        eps=eps,
        terms=tuple(terms),
        weights=tuple(float(w) for w in weights),
        achieved_error=err,
        lambda_residual=float(np.max(np.abs(res))),
        residual_points=pts,
        residual_values=res,
        config=config,
        target=target,
        fit_degree=fit_degree,
        fit_error=fit_error,
    )


class _Wrap:
    def __init__(self, poly):
        self.poly = poly

    def derivative(self, points, beta):
        return self.poly.derivative(points, beta)


def approximate_monomial(spec: OperatorSpec, iota, k, eps, config=DEFAULT_CONFIG):
    """Approximate p^iota / iota! in C^k on the box to within ``eps``."""
    term = monomial_term(spec, iota, k, config)
    term, _ = _search_eta(term, k, eps, config)
    target = term.target()
    return _finish(spec, k, eps, [term], [1.0], target, config, target=target)


def approximate_polynomial(spec: OperatorSpec, poly, k, eps, config=DEFAULT_CONFIG):
    """Superpose monomial approximants; each normalized monomial
    p^iota / iota! carries weight c * iota! and gets the budget
    eps / (J max(1, max weight))."""
    if not isinstance(poly, Polynomial):
        poly = Polynomial(spec.nu, tuple((tuple(i), c) for i, c in dict(poly).items()))
    if poly.dim != spec.nu:
        raise ValueError("polynomial dimension does not match the operator")
    J = len(poly)
    if J > 50:
        raise ValueError("at most 50 monomials are supported")
    weights = [c * factorial_multi(i) for i, c in poly.terms]
    budget = eps / (max(J, 1) * max(1.0, max((abs(w) for w in weights), default=0.0)))
    terms = []
    for iota, _ in poly.terms:
        term = monomial_term(spec, iota, k, config)
        term, _ = _search_eta(term, k, budget, config)
        terms.append(term)
    return _finish(spec, k, eps, terms, weights, poly, config, target=poly)


def fit_polynomial(f, nu, k, tol, config=DEFAULT_CONFIG):
    """Least-squares polynomial of the smallest total degree whose measured
    C^k distance to ``f`` is within ``tol``; returns (poly, degree, error)."""
    if isinstance(f, Polynomial):
        return f, f.degree, 0.0
    nodes = config.box * np.cos(np.pi * np.arange(config.fit_points) / (config.fit_points - 1))
    fit_pts = np.array(list(itertools.product(nodes, repeat=nu)))
    vals = np.asarray(f(fit_pts), dtype=float).reshape(-1)
    grid = config.grid(nu)
    best = None
    for deg in range(config.degree_budget + 1):
        idx = multi_indices(nu, deg)
        A = np.stack([np.prod((fit_pts / config.box) ** np.array(i), axis=1) for i in idx], axis=1)
        coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
        coef = coef / np.array([config.box ** sum(i) for i in idx])
        big = np.max(np.abs(coef)) if len(coef) else 0.0
        poly = Polynomial(nu, tuple((i, c) for i, c in zip(idx, coef) if abs(c) > 1e-12 * big))
        err = ck_error(_Wrap(poly), f, k, grid, config.fd_step)
        if best is None or err < best[2]:
            best = (poly, deg, err)
        if err <= tol:
            return poly, deg, err
    raise ApproximationFailure(
        f"polynomial fit error {best[2]:.3e} > {tol:.3e} within degree {config.degree_budget}",
        best[2],
        None,
    )


def approximate_function(spec: OperatorSpec, f, k, eps, config=DEFAULT_CONFIG):
    """Fit a polynomial within eps/2, then approximate it within eps/2; the
    reported error is measured against ``f`` itself."""
    if isinstance(f, Polynomial):
        res = approximate_polynomial(spec, f, k, eps, config)
        return dataclasses.replace(res, fit_degree=f.degree, fit_error=0.0)
    poly, deg, ferr = fit_polynomial(f, spec.nu, k, eps / 2.0, config)
    inner = approximate_polynomial(spec, poly, k, eps / 2.0, config)
    return _finish(
        spec, k, eps, list(inner.terms), list(inner.weights), f, config,
        target=poly, fit_degree=deg, fit_error=ferr,
    )


def approximate_caloric(f, s, k, eps, n=1, config=DEFAULT_CONFIG):
    """u with d_t u + (-Delta)^s u = 0 on the box, close to f(t, x) in C^k.
    Variables are ordered (t, x_1, ..., x_n)."""
    return approximate_function(caloric_spec(s, n), f, k, eps, config)


@dataclasses.dataclass(frozen=True)
class LogisticResult:
    u: ApproximationResult
    sigma: ApproximationResult
    caloric_residual: np.ndarray
    logistic_residual: np.ndarray
    sigma_error: float
    min_value: float

    @property
    def positive(self):
        return self.min_value > 0.0

    def report(self):
        return {
            "sigma_equals_u": self.sigma is self.u,
            "sigma_error": self.sigma_error,
            "caloric_residual": float(np.max(np.abs(self.caloric_residual))),
            "logistic_residual": float(np.max(np.abs(self.logistic_residual))),
            "residual_gap": float(np.max(np.abs(self.logistic_residual - self.caloric_residual))),
            "min_value": self.min_value,
            "positive": self.positive,
        }


def logistic_resource(sigma, s, k, eps, n=1, config=DEFAULT_CONFIG, require_positive=False):
    """u_eps approximating the resource sigma by an s-caloric function and
    sigma_eps := u_eps, so the reaction term (sigma_eps - u_eps) u_eps
    vanishes identically and the logistic residual is the caloric one."""
    u = approximate_caloric(sigma, s, k, eps, n, config)
    sigma_eps = u
    pts = u.residual_points
    vals = u(pts)
    reaction = (sigma_eps(pts) - vals) * vals
    caloric = np.asarray(u.residual_values)
    logistic = caloric - reaction
    grid = config.grid(u.spec.nu)
    out = LogisticResult(
        u=u,
        sigma=sigma_eps,
        caloric_residual=caloric,
        logistic_residual=logistic,
        sigma_error=u.achieved_error,
        min_value=float(np.min(u(grid))),
    )
    if require_positive and not out.positive:
        raise PositivityViolation(f"u_eps reaches {out.min_value:.3e} on the box", out.report())
    return out


__all__ = [
    "ApproximationConfig",
    "ApproximationFailure",
    "ApproximationPlan",
    "ApproximationResult",
    "LogisticResult",
    "MonomialTerm",
    "Polynomial",
    "PositivityViolation",
    "RankDeficientSpan",
    "approximate_caloric",
    "approximate_function",
    "approximate_monomial",
    "approximate_polynomial",
    "ck_error",
    "dictionary_for",
    "error_curve",
    "fit_polynomial",
    "logistic_resource",
    "loglog_slope",
    "monomial_term",
    "parse_polynomial",
    "plan",
]
