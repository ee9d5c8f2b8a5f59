"""Jacobi polynomials P_k^(alpha, beta) on [-1, 1]: evaluation, series sums
and derivatives, vectorized over points."""

import numpy as np
from scipy.special import gammaln


def jacobi_table(N, alpha, beta, y):
    """Array ``P[k, i] = P_k^(alpha,beta)(y_i)`` for ``k < N``, by the
    three-term recurrence."""
    y = np.asarray(y, dtype=float)
    P = np.empty((N,) + y.shape)
    if N == 0:
        return P
    P[0] = 1.0
    if N == 1:
        return P
    a, b = alpha, beta
    P[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * y
    for k in range(2, N):
        c = 2.0 * k + a + b
        a1 = 2.0 * k * (k + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (a * a - b * b)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        P[k] = ((a2 + a3 * y) * P[k - 1] - a4 * P[k - 2]) / a1
    return P


def jacobi_sum(coefs, alpha, beta, y):
    """sum_k coefs[k] P_k^(alpha,beta)(y) by Clenshaw's recurrence."""
    coefs = np.asarray(coefs, dtype=float)
    y = np.asarray(y, dtype=float)
    N = len(coefs)
    if N == 0:
        return np.zeros_like(y)
    a, b = alpha, beta
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    # P_{k+1} = (A_k + B_k y) P_k - C_k P_{k-1}
    for k in range(N - 1, -1, -1):
        kp = k + 1
        c = 2.0 * kp + a + b
        den = 2.0 * kp * (kp + a + b) * (c - 2.0)
        if kp == 1:
            A = 0.5 * (a - b)
            B = 0.5 * (a + b + 2.0)
        else:
            A = (c - 1.0) * (a * a - b * b) / den
            B = (c - 2.0) * (c - 1.0) * c / den
        k2 = k + 2
        c2 = 2.0 * k2 + a + b
        C2 = 2.0 * (k2 + a - 1.0) * (k2 + b - 1.0) * c2 / (2.0 * k2 * (k2 + a + b) * (c2 - 2.0))
        bk = coefs[k] + (A + B * y) * b1 - C2 * b2
        b2, b1 = b1, bk
    return b1


def derivative_coefficients(coefs, alpha, beta, j):
    """Coefficients of d^j/dy^j of ``sum coefs[k] P_k^(alpha,beta)`` in the
    basis P^(alpha+j, beta+j):

        d^j/dy^j P_k = Gamma(k + alpha + beta + 1 + j) /
                       (2^j Gamma(k + alpha + beta + 1)) P_{k-j}^(alpha+j, beta+j).
    """
    coefs = np.asarray(coefs, dtype=float)
    if j == 0:
        return coefs.copy()
    k = np.arange(j, len(coefs))
    if len(k) == 0:
        return np.zeros(1)
    g = np.exp(gammaln(k + alpha + beta + 1 + j) - gammaln(k + alpha + beta + 1)) / 2.0**j
    return coefs[j:] * g


def jacobi_derivatives(coefs, alpha, beta, y, order):
    """Array ``D[j] = d^j/dy^j sum coefs[k] P_k(y)`` for ``j <= order``."""
    y = np.asarray(y, dtype=float)
    out = np.empty((order + 1,) + y.shape)
    for j in range(order + 1):
        out[j] = jacobi_sum(derivative_coefficients(coefs, alpha, beta, j), alpha + j, beta + j, y)
    return out
