"""Special functions: regularized incomplete gamma, digamma/trigamma and the
standard normal CDF and quantile.

All functions accept scalars or arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc, gammaln

__all__ = [
    "gammainc_lower",
    "digamma",
    "trigamma",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
]

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 100_000
_SQRT2 = np.sqrt(2.0)


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _unwrap(out, scalar):
    return float(out) if scalar else out


def _gser(a, x):
    """Series for P(a, x); converges quickly when x < a + 1."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return total * np.exp(-x + a * np.log(x) - gammaln(a))


def _gcf(a, x):
    """Continued fraction for Q(a, x) (modified Lentz); used when x >= a + 1."""
    b = x + 1.0 - a
    c = np.full(a.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(-x + a * np.log(x) - gammaln(a)) * h


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma function P(a, x).

    Uses the power series below ``x = a + 1`` and a continued fraction for
    the upper function above it.
    """
    scalar = np.ndim(a) == 0 and np.ndim(x) == 0
    a, x = np.broadcast_arrays(_as_float_array(a), _as_float_array(x))
    shape = a.shape
    a = a.astype(float).ravel()
    x = x.astype(float).ravel()
    if np.any(a <= 0) or np.any(x < 0) or not np.all(np.isfinite(a)):
        raise ValueError("gammainc_lower requires a > 0 and x >= 0")
    out = np.zeros_like(x)
    inf = np.isinf(x)
    out[inf] = 1.0
    use_series = (x > 0) & (x < a + 1.0) & ~inf
    use_cf = (x >= a + 1.0) & ~inf
    if use_series.any():
        out[use_series] = _gser(a[use_series], x[use_series])
    if use_cf.any():
        out[use_cf] = 1.0 - _gcf(a[use_cf], x[use_cf])
    out = np.clip(out, 0.0, 1.0)
    return _unwrap(out.reshape(shape), scalar)


def digamma(x):
    """Digamma function for positive arguments (recurrence + asymptotic series)."""
    scalar = np.ndim(x) == 0
    x = _as_float_array(x).astype(float, copy=True)
    if np.any(x <= 0):
        raise ValueError("digamma is only implemented for x > 0")
    acc = np.zeros_like(x)
    while True:
        small = x < 6.0
        if not small.any():
            break
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (
        1.0 / 12
        - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132))))
    )
    out = acc + np.log(x) - 0.5 * inv - series
    return _unwrap(out, scalar)


def trigamma(x):
    """Trigamma function for positive arguments."""
    scalar = np.ndim(x) == 0
    x = _as_float_array(x).astype(float, copy=True)
    if np.any(x <= 0):
        raise ValueError("trigamma is only implemented for x > 0")
    acc = np.zeros_like(x)
    while True:
        small = x < 6.0
        if not small.any():
            break
        acc[small] += 1.0 / (x[small] * x[small])
        x[small] += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    # Bernoulli-number asymptotic expansion
    series = inv + 0.5 * inv2 + inv * inv2 * (
        1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66))))
    )
    return _unwrap(acc + series, scalar)


def std_normal_cdf(z):
    """Standard normal CDF via the complementary error function."""
    scalar = np.ndim(z) == 0
    out = 0.5 * erfc(-_as_float_array(z) / _SQRT2)
    return _unwrap(out, scalar)


def std_normal_pdf(z):
    z = _as_float_array(z)
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


# Acklam's rational approximation coefficients
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = np.sqrt(-2.0 * np.log(p[lo]))
    out[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    )
    q = np.sqrt(-2.0 * np.log1p(-p[hi]))
    out[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
        (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    )
    q = p[mid] - 0.5
    r = q * q
    out[mid] = (
        (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5])
        * q
        / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    )
    return out


def std_normal_quantile(p):
    """Inverse standard normal CDF.

    Rational approximation (relative error ~1e-9) followed by one Halley
    refinement step on the CDF.

    Raises
    ------
    ValueError
        If any probability lies outside the open interval (0, 1).
    """
    scalar = np.ndim(p) == 0
    p = _as_float_array(p)
    if np.any(~(p > 0.0) | ~(p < 1.0)):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    flat = p.ravel()
    x = _acklam(flat)
    # refine in the smaller tail to avoid cancellation near 1
    upper = flat > 0.5
    err = np.where(upper, (1.0 - flat) - std_normal_cdf(-x), std_normal_cdf(x) - flat)
    u = err * np.sqrt(2.0 * np.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return _unwrap(x.reshape(p.shape), scalar)
