"""Gamma function and the normalization constants of the fractional Laplacian
and of the Green function of the unit ball."""

import math
from functools import lru_cache

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x):
    """Euler Gamma function for real ``x > 0``.

    Relative error is below 1e-13 on [0.05, 50]. Arguments below 1/2 go
    through the reflection formula.
    """
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"gamma is only defined here for finite x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * math.exp((z + 0.5) * math.log(t) - t) * acc


def check_order(s):
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {s!r}")
    return s


def check_dim(n):
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


@lru_cache(maxsize=None)
def normalization_constant(n, s):
    """C(n, s) = 4^s s Gamma(n/2 + s) / (pi^(n/2) Gamma(1 - s))."""
    n = check_dim(n)
    s = check_order(s)
    return 4.0**s * s * gamma(0.5 * n + s) / (math.pi ** (0.5 * n) * gamma(1.0 - s))


@lru_cache(maxsize=None)
def green_constant(n, s):
    """kappa(n, s) = Gamma(n/2) / (4^s pi^(n/2) Gamma(s)^2)."""
    n = check_dim(n)
    s = check_order(s)
    return gamma(0.5 * n) / (4.0**s * math.pi ** (0.5 * n) * gamma(s) ** 2)


def torsion_constant(n, s):
    """Value of (-Delta)^s (1 - |x|^2)_+^s inside the unit ball of R^n."""
    n = check_dim(n)
    s = check_order(s)
    return 4.0**s * gamma(1.0 + s) * gamma(0.5 * n + s) / gamma(0.5 * n)


def sphere_area(n):
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    n = check_dim(n)
    return 2.0 * math.pi ** (0.5 * n) / gamma(0.5 * n)
