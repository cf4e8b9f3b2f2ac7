"""Small dense numerical kernel.

Pivoted linear solves (single and batched), weighted OLS with an implicit
intercept, order statistics, and the normal / chi-squared quantiles used by
the re-weighting step and the contamination generator.
"""

from __future__ import annotations

import math

import numpy as np

PIVOT_RTOL = 1e-12
RSS_ZERO_RTOL = 1e-20


class SingularMatrixError(ArithmeticError):
    """Raised when a system is (numerically) singular."""


def solve_linear_batched(A, b, pivot_rtol=PIVOT_RTOL):
    """Solve a stack of small square systems by Gaussian elimination.

    Parameters
    ----------
    A : array of shape (B, p, p)
    b : array of shape (B, p)

    Returns
    -------
    x : array of shape (B, p)
        Solutions; rows flagged singular contain garbage.
    singular : bool array of shape (B,)
        True where some pivot magnitude fell below
        ``pivot_rtol * max|A_initial|`` for that system.
    """
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    if A.ndim != 3 or A.shape[1] != A.shape[2] or b.shape != A.shape[:2]:
        raise ValueError("expected A of shape (B, p, p) and b of shape (B, p)")
    nb, p, _ = A.shape
    rows = np.arange(nb)
    thresh = pivot_rtol * np.abs(A).reshape(nb, -1).max(axis=1, initial=0.0)
    singular = np.zeros(nb, dtype=bool)

    for col in range(p):
        piv = col + np.argmax(np.abs(A[:, col:, col]), axis=1)
        swap = piv != col
        if swap.any():
            r = rows[swap]
            pr = piv[swap]
            tmp = A[r, col].copy()
            A[r, col] = A[r, pr]
            A[r, pr] = tmp
            tmpb = b[r, col].copy()
            b[r, col] = b[r, pr]
            b[r, pr] = tmpb
        pivot = A[:, col, col]
        bad = ~(np.abs(pivot) >= thresh) | (thresh == 0.0)
        singular |= bad
        pivot = np.where(bad, 1.0, pivot)
        A[:, col, col] = pivot
        if col + 1 < p:
            factor = A[:, col + 1:, col] / pivot[:, None]
            A[:, col + 1:, col:] -= factor[:, :, None] * A[:, None, col, col:]
            b[:, col + 1:] -= factor * b[:, col, None]

    x = np.empty_like(b)
    for col in range(p - 1, -1, -1):
        acc = b[:, col] - np.einsum("ij,ij->i", A[:, col, col + 1:], x[:, col + 1:])
        x[:, col] = acc / A[:, col, col]
    return x, singular


def solve_linear(A, b, pivot_rtol=PIVOT_RTOL):
    """Solve ``A x = b`` for one square system with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot is below
    ``pivot_rtol`` times the largest initial entry of ``A``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if b.shape != (A.shape[0],):
        raise ValueError("length of b does not match A")
    x, singular = solve_linear_batched(A[None], b[None], pivot_rtol)
    if singular[0]:
        raise SingularMatrixError("matrix is singular to working precision")
    return x[0]


def add_intercept(X):
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.ones(X.shape[0]), X])


def ols_fit(X, y, weights=None):
    """Least squares fit of ``y`` on ``[1, X]`` over the selected rows.

    ``weights`` is an optional 0/1 (or boolean) vector selecting rows.
    Returns ``(coef, sigma2)`` with ``coef = (intercept, slopes...)`` and
    ``sigma2 = RSS / (m - p)``; ``sigma2`` is 0 when the fit is exact.
    """
    Z = add_intercept(X)
    y = np.asarray(y, dtype=float)
    if weights is not None:
        mask = np.asarray(weights).astype(bool)
        Z = Z[mask]
        y = y[mask]
    m, p = Z.shape
    if m < p:
        raise SingularMatrixError(f"{m} rows cannot determine {p} coefficients")
    # equilibrate columns so the pivot test is scale free
    scale = np.abs(Z).max(axis=0)
    scale[scale == 0] = 1.0
    Zs = Z / scale
    coef = solve_linear(Zs.T @ Zs, Zs.T @ y) / scale
    resid = y - Z @ coef
    rss = float(resid @ resid)
    if rss <= RSS_ZERO_RTOL * (1.0 + float(y @ y)) or m == p:
        return coef, 0.0
    return coef, rss / (m - p)


def order_statistic(v, k):
    """k-th smallest entry of ``v`` (1-based rank)."""
    v = np.asarray(v, dtype=float).ravel()
    if not 1 <= k <= v.size:
        raise ValueError(f"rank {k} out of range for length {v.size}")
    return float(np.partition(v, k - 1)[k - 1])


# Coefficients of the rational approximation to the inverse normal CDF
# (P. J. Acklam), relative error below 1.2e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(q):
    """Inverse of the standard normal CDF."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {q}")
    plow = 0.02425
    if q < plow:
        t = math.sqrt(-2.0 * math.log(q))
        x = ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
             / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    elif q <= 1.0 - plow:
        s = q - 0.5
        t = s * s
        x = ((((((_A[0] * t + _A[1]) * t + _A[2]) * t + _A[3]) * t + _A[4]) * t + _A[5]) * s
             / (((((_B[0] * t + _B[1]) * t + _B[2]) * t + _B[3]) * t + _B[4]) * t + 1.0))
    else:
        t = math.sqrt(-2.0 * math.log1p(-q))
        x = -((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
              / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    # one Halley step; upper tail done on the complement to keep precision
    if q > 0.5:
        e = 0.5 * math.erfc(x / math.sqrt(2.0)) - (1.0 - q)
        e = -e
    else:
        e = normal_cdf(x) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return total * math.exp(-x + a * math.log(x) - lg)
    # Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    bb = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / bb
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        bb += 2.0
        d = an * d + bb
        if abs(d) < tiny:
            d = tiny
        c = bb + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return 1.0 - math.exp(-x + a * math.log(x) - lg) * h


def chisq_cdf(x, d):
    return _gammainc_lower(0.5 * d, 0.5 * x)


def chisq_quantile(q, d):
    """Quantile of the chi-squared distribution with ``d`` degrees of freedom."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {q}")
    if int(d) != d or d < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {d}")
    a = 0.5 * d
    lo, hi = 0.0, max(1.0, float(d))
    while chisq_cdf(hi, d) < q:
        lo, hi = hi, 2.0 * hi
    lg = math.lgamma(a)
    if q < 1e-3:
        # small-x behaviour P(a, x/2) ~ (x/2)^a / Gamma(a+1)
        x = 2.0 * math.exp((math.log(q) + math.lgamma(a + 1.0)) / a)
    else:
        # Wilson-Hilferty start
        z = normal_quantile(q)
        w = 2.0 / (9.0 * d)
        x = d * (1.0 - w + z * math.sqrt(w)) ** 3
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(500):
        f = chisq_cdf(x, d) - q
        if f < 0:
            lo = x
        else:
            hi = x
        dens = 0.5 * math.exp((a - 1.0) * math.log(0.5 * x) - 0.5 * x - lg)
        nx = x - f / dens if dens > 0 else math.nan
        if not lo < nx < hi:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-15 * x or hi - lo <= 1e-15 * hi:
            return nx
        x = nx
    return x
