"""Zero-augmented gamma (ZAGA) distribution.

The gamma component is parameterised by its mean ``mu`` and shape ``sigma``:
mean ``mu`` and variance ``mu**2 / sigma``, i.e. rate ``sigma / mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import AllZero, DataError, NumericalError, TooFewDistinct
from .special import (
    digamma,
    gammainc_lower,
    std_normal_cdf,
    std_normal_quantile,
    trigamma,
)

__all__ = [
    "ZagaParams",
    "gamma_logpdf",
    "gamma_cdf",
    "gamma_quantile",
    "zaga_cdf",
    "zaga_quantile",
    "zaga_sample",
    "zaga_loglik",
    "zaga_mle",
    "gamma_shape_mle",
    "std_normal_cdf",
    "std_normal_quantile",
]


@dataclass(frozen=True)
class ZagaParams:
    pi: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (0.0 <= self.pi <= 1.0):
            raise DataError(f"pi must lie in [0, 1], got {self.pi}")
        if not (self.mu > 0 and np.isfinite(self.mu)):
            raise DataError(f"mu must be positive, got {self.mu}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise DataError(f"sigma must be positive, got {self.sigma}")

    @property
    def mean(self) -> float:
        """Unconditional mean ``(1 - pi) * mu``."""
        return (1.0 - self.pi) * self.mu

    @property
    def positive_variance(self) -> float:
        return self.mu**2 / self.sigma


def _check_gamma_params(mu, sigma):
    if np.any(~(np.asarray(mu) > 0)) or np.any(~(np.asarray(sigma) > 0)):
        raise DataError("gamma parameters require mu > 0 and sigma > 0")


def gamma_logpdf(x, mu, sigma):
    """Log density of the gamma distribution with mean ``mu`` and shape ``sigma``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DataError("gamma_logpdf requires x > 0")
    _check_gamma_params(mu, sigma)
    out = (
        sigma * np.log(sigma / mu)
        - gammaln(sigma)
        + (sigma - 1.0) * np.log(x)
        - sigma * x / mu
    )
    return float(out) if np.ndim(out) == 0 else out


def gamma_cdf(x, mu, sigma):
    """Gamma CDF, the regularized lower incomplete gamma P(sigma, sigma*x/mu)."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DataError("gamma_cdf requires x >= 0")
    _check_gamma_params(mu, sigma)
    return gammainc_lower(sigma, np.asarray(sigma) * x / np.asarray(mu))


def _gamma_quantile_guess(p, sigma):
    # Wilson-Hilferty in units of the mean
    z = std_normal_quantile(p)
    c = 1.0 / (9.0 * sigma)
    guess = (1.0 - c + z * np.sqrt(c)) ** 3
    small = guess <= 0.05
    # small-p expansion of the lower tail for tiny shapes / probabilities
    alt = np.exp((np.log(p) + gammaln(sigma + 1.0)) / sigma) / sigma
    return np.where(small, np.maximum(alt, 1e-300), guess)


def gamma_quantile(p, mu, sigma, rtol: float = 1e-12, max_iter: int = 200):
    """Gamma quantile by safeguarded Newton iteration inside a shrinking bracket."""
    scalar = np.ndim(p) == 0 and np.ndim(mu) == 0 and np.ndim(sigma) == 0
    p, mu, sigma = np.broadcast_arrays(
        np.asarray(p, dtype=float), np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float)
    )
    shape = p.shape
    p, mu, sigma = p.ravel(), mu.ravel(), sigma.ravel()
    if np.any(~(p > 0) | ~(p < 1)):
        raise DataError("gamma_quantile requires 0 < p < 1")
    _check_gamma_params(mu, sigma)

    # solve in standardised units y = sigma * x / mu, i.e. P(sigma, y) = p
    y = _gamma_quantile_guess(p, sigma) * sigma
    lo = np.zeros_like(y)
    hi = np.full_like(y, np.inf)
    active = np.ones_like(y, dtype=bool)
    for _ in range(max_iter):
        f = gammainc_lower(sigma, y) - p
        lo = np.where(f < 0, np.maximum(lo, y), lo)
        hi = np.where(f > 0, np.minimum(hi, y), hi)
        logdens = (sigma - 1.0) * np.log(y) - y - gammaln(sigma)
        step = f / np.exp(logdens)
        y_new = y - step
        outside = ~((y_new > lo) & (y_new < hi)) | ~np.isfinite(y_new)
        bisect = np.where(np.isfinite(hi), 0.5 * (lo + hi), 2.0 * y)
        y_new = np.where(outside, bisect, y_new)
        done = np.abs(y_new - y) <= rtol * np.abs(y_new)
        y = np.where(active, y_new, y)
        active &= ~done
        if not active.any():
            break
    else:
        raise NumericalError("gamma_quantile did not converge")
    out = (y * mu / sigma).reshape(shape)
    return float(out) if scalar else out


def zaga_cdf(x, pi, mu=None, sigma=None):
    """ZAGA CDF: ``pi`` at zero, ``pi + (1 - pi) * G(x)`` for positive ``x``.

    Accepts either a :class:`ZagaParams` or separate (possibly array) ``pi, mu, sigma``.
    """
    if isinstance(pi, ZagaParams):
        pi, mu, sigma = pi.pi, pi.mu, pi.sigma
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DataError("zaga_cdf requires x >= 0")
    g = gamma_cdf(x, mu, sigma)
    out = np.where(x > 0, pi + (1.0 - np.asarray(pi)) * g, np.broadcast_to(pi, np.shape(g)))
    return float(out) if np.ndim(out) == 0 else out


def zaga_quantile(p, pi, mu=None, sigma=None):
    """ZAGA quantile: zero when ``p <= pi``, else the gamma quantile of the rescaled probability."""
    if isinstance(pi, ZagaParams):
        pi, mu, sigma = pi.pi, pi.mu, pi.sigma
    scalar = all(np.ndim(v) == 0 for v in (p, pi, mu, sigma))
    p, pi, mu, sigma = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (p, pi, mu, sigma))
    )
    if np.any(~(p > 0) | ~(p < 1)):
        raise DataError("zaga_quantile requires 0 < p < 1")
    out = np.zeros(p.shape)
    pos = p > pi
    if pos.any():
        q = (p[pos] - pi[pos]) / (1.0 - pi[pos])
        out[pos] = gamma_quantile(q, mu[pos], sigma[pos])
    return float(out) if scalar else out


def zaga_sample(rng: np.random.Generator, params: ZagaParams | None = None, size=None, *,
                pi=None, mu=None, sigma=None):
    """Draw from the ZAGA distribution using (and advancing) ``rng``.

    Either pass a :class:`ZagaParams` or array-valued ``pi, mu, sigma`` which
    broadcast against ``size``.
    """
    if params is not None:
        pi, mu, sigma = params.pi, params.mu, params.sigma
    if size is None:
        size = np.broadcast_shapes(np.shape(pi), np.shape(mu), np.shape(sigma))
    zero = rng.random(size) < pi
    draws = rng.gamma(sigma, np.asarray(mu) / np.asarray(sigma), size=size)
    out = np.where(zero, 0.0, draws)
    return float(out) if np.ndim(out) == 0 else out


def zaga_loglik(x, pi, mu, sigma) -> float:
    """Summed ZAGA log-likelihood of observations ``x``."""
    x = np.asarray(x, dtype=float)
    pi, mu, sigma = (np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in (pi, mu, sigma))
    zero = x == 0
    total = np.sum(np.log(pi[zero]))
    pos = ~zero
    if pos.any():
        total += np.sum(np.log1p(-pi[pos]) + gamma_logpdf(x[pos], mu[pos], sigma[pos]))
    return float(total)


def gamma_shape_mle(positives, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Shape MLE for the mean/shape gamma parameterisation.

    With ``mu`` profiled out at the sample mean the score is
    ``log(s) - digamma(s) - (log(mean) - mean(log x))``; solved by Newton
    from the method-of-moments start ``mean**2 / var``.
    """
    x = np.asarray(positives, dtype=float)
    mean = x.mean()
    delta = np.log(mean) - np.mean(np.log(x))
    if not delta > 0:
        raise TooFewDistinct("need at least 2 distinct positive values")
    var = x.var()
    s = mean**2 / var if var > 0 else 1.0
    # Newton on log(s) keeps the iterate positive
    for _ in range(max_iter):
        score = np.log(s) - digamma(s) - delta
        dscore = 1.0 / s - trigamma(s)
        step = score / (dscore * s)
        s_new = s * np.exp(-np.clip(step, -5.0, 5.0))
        if abs(s_new - s) <= tol * s:
            return float(s_new)
        s = s_new
    raise NumericalError("gamma shape MLE did not converge")


def zaga_mle(values) -> ZagaParams:
    """Maximum-likelihood ZAGA fit.

    ``pi`` is the zero fraction, ``mu`` the mean of the positive values and
    ``sigma`` the profile-likelihood shape estimate.

    Raises
    ------
    AllZero
        When no value is positive.
    TooFewDistinct
        With fewer than 3 values or fewer than 2 distinct positives.
    """
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if np.any(x < 0):
        raise DataError("values must be non-negative")
    if x.size < 3:
        raise TooFewDistinct(f"need at least 3 values, got {x.size}")
    positives = x[x > 0]
    if positives.size == 0:
        raise AllZero()
    if np.unique(positives).size < 2:
        raise TooFewDistinct("need at least 2 distinct positive values")
    pi = (x.size - positives.size) / x.size
    return ZagaParams(pi=pi, mu=float(positives.mean()), sigma=gamma_shape_mle(positives))
