"""Seasonal zero-augmented gamma regression and the per-bin classical model.

Each distribution parameter gets its own predictor on the link scale::

    logit(pi_t)  = a1 + f1(u_t)
    log(mu_t)    = a2 + f2(u_t)
    log(sigma_t) = a3 + f3(u_t)

where ``u_t`` is the fraction of the year and ``f_j`` are cyclic cubic
splines constrained to integrate to zero over the year. The log-likelihood
splits into a Bernoulli part (zero indicators, ``pi``) and a gamma part
(positive values, ``mu`` and ``sigma``), which are maximised separately by
penalised Newton / Fisher scoring with step halving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import expit, gammaln

from .distributions import ZagaParams, gamma_logpdf, zaga_mle
from .errors import AllZero, DataError, InsufficientData, TooFewDistinct
from .special import digamma, trigamma
from .splines import CyclicBasis, build_cyclic_basis, eval_basis
from .timeseries import MaSeries, PrecipSeries, season_bin, seasonal_positions

__all__ = [
    "FitConfig",
    "SmoothTerm",
    "SeasonalZagaModel",
    "BinnedZagaModel",
    "BernoulliObjective",
    "GammaObjective",
    "fit_seasonal_zaga",
    "fit_binned_zaga",
    "predict_params",
    "loglik",
]

logger = logging.getLogger(__name__)

MODEL_FORMAT = "hydroindex/seasonal-zaga"
BINNED_FORMAT = "hydroindex/binned-zaga"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_seasonal_zaga`.

    ``lam`` entries left as ``None`` are calibrated so that the seasonal
    curve has roughly ``target_edf`` effective degrees of freedom.
    """

    dims: tuple[int, int, int] = (10, 10, 10)
    lam: tuple[float | None, float | None, float | None] = (None, None, None)
    target_edf: float = 4.0
    tol: float = 1e-8
    max_iter: int = 200
    fix_pi_zero: bool = False
    select: str | None = None  # "aic" enables grid search over penalty weights


def _sum_to_zero_basis(dim: int) -> np.ndarray:
    """Orthonormal columns spanning vectors whose entries sum to zero."""
    q, _ = np.linalg.qr(np.ones((dim, 1)), mode="complete")
    return q[:, 1:]


@dataclass(frozen=True)
class SmoothTerm:
    """Intercept plus a cyclic spline on the link scale."""

    basis: CyclicBasis
    intercept: float
    coefs: np.ndarray
    lam: float

    def eta(self, positions) -> np.ndarray:
        return self.intercept + eval_basis(self.basis, positions) @ self.coefs

    def to_dict(self) -> dict:
        return {
            "dim": self.basis.dim,
            "knots": [float(v) for v in self.basis.knots],
            "intercept": float(self.intercept),
            "coefs": [float(v) for v in self.coefs],
            "lambda": float(self.lam),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SmoothTerm":
        basis = build_cyclic_basis(int(d["dim"]))
        if not np.allclose(basis.knots, d["knots"]):
            raise DataError("model knots do not match an equally spaced cyclic basis")
        return cls(basis, float(d["intercept"]), np.asarray(d["coefs"], dtype=float), float(d["lambda"]))


@dataclass(frozen=True)
class SeasonalZagaModel:
    """Fitted seasonal ZAGA regression.

    ``pi_term`` is ``None`` when the data had no zeros and ``pi`` was fixed
    at zero.
    """

    pi_term: SmoothTerm | None
    mu_term: SmoothTerm
    sigma_term: SmoothTerm
    fit_stats: dict = field(default_factory=dict)

    @property
    def pi_fixed(self) -> bool:
        return self.pi_term is None

    @property
    def converged(self) -> bool:
        return bool(self.fit_stats.get("converged", False))

    @property
    def alpha(self) -> tuple[float, float, float]:
        a1 = -np.inf if self.pi_term is None else self.pi_term.intercept
        return (a1, self.mu_term.intercept, self.sigma_term.intercept)

    def predict_arrays(self, dates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = seasonal_positions(dates)
        if self.pi_term is None:
            pi = np.zeros(len(u))
        else:
            pi = expit(self.pi_term.eta(u))
        mu = np.exp(self.mu_term.eta(u))
        sigma = np.exp(self.sigma_term.eta(u))
        return pi, mu, sigma

    def predict_params(self, dates) -> list[ZagaParams]:
        return [ZagaParams(float(p), float(m), float(s)) for p, m, s in zip(*self.predict_arrays(dates))]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": FORMAT_VERSION,
            "pi_fixed": self.pi_fixed,
            "pi": None if self.pi_term is None else self.pi_term.to_dict(),
            "mu": self.mu_term.to_dict(),
            "sigma": self.sigma_term.to_dict(),
            "fit_stats": _jsonable(self.fit_stats),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonalZagaModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError(f"not a seasonal ZAGA model document: format={d.get('format')!r}")
        if d.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported model version {d.get('version')!r}")
        pi = None if d.get("pi") is None else SmoothTerm.from_dict(d["pi"])
        return cls(pi, SmoothTerm.from_dict(d["mu"]), SmoothTerm.from_dict(d["sigma"]), dict(d.get("fit_stats", {})))


@dataclass(frozen=True)
class BinnedZagaModel:
    """Independent ZAGA parameters per seasonal bin (classical SPI)."""

    bins: int
    params: tuple[ZagaParams, ...]
    counts: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.params) != self.bins:
            raise DataError("one ZagaParams per bin is required")

    def predict_arrays(self, dates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        b = season_bin(dates, self.bins)
        table = np.array([[p.pi, p.mu, p.sigma] for p in self.params])
        return table[b, 0], table[b, 1], table[b, 2]

    def predict_params(self, dates) -> list[ZagaParams]:
        b = season_bin(dates, self.bins)
        return [self.params[i] for i in b]

    def to_dict(self) -> dict:
        return {
            "format": BINNED_FORMAT,
            "version": FORMAT_VERSION,
            "bins": self.bins,
            "params": [{"pi": p.pi, "mu": p.mu, "sigma": p.sigma} for p in self.params],
            "counts": list(self.counts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinnedZagaModel":
        if d.get("format") != BINNED_FORMAT:
            raise DataError(f"not a binned ZAGA model document: format={d.get('format')!r}")
        params = tuple(ZagaParams(**p) for p in d["params"])
        return cls(int(d["bins"]), params, tuple(d.get("counts", ())))


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# objectives


class _Design:
    """Intercept + sum-to-zero spline design for one predictor."""

    def __init__(self, basis: CyclicBasis, positions: np.ndarray):
        self.basis = basis
        self.Z = _sum_to_zero_basis(basis.dim)
        Xs = eval_basis(basis, positions) @ self.Z
        self.A = np.column_stack([np.ones(len(positions)), Xs])
        P = np.zeros((basis.dim, basis.dim))
        P[1:, 1:] = self.Z.T @ basis.penalty @ self.Z
        self.P = P

    @property
    def size(self) -> int:
        return self.A.shape[1]

    def term(self, theta: np.ndarray, lam: float) -> SmoothTerm:
        return SmoothTerm(self.basis, float(theta[0]), self.Z @ theta[1:], float(lam))


class BernoulliObjective:
    """Penalised log-likelihood of the zero indicators under a logit link."""

    def __init__(self, design: _Design, is_zero: np.ndarray, lam: float):
        self.design = design
        self.y = is_zero.astype(float)
        self.lam = lam

    def loglik(self, theta) -> float:
        eta = self.design.A @ theta
        # log p for zeros, log(1-p) for positives, computed stably
        return float(np.sum(self.y * eta - np.logaddexp(0.0, eta)))

    def penalty(self, theta) -> float:
        return float(self.lam * theta @ self.design.P @ theta)

    def value(self, theta) -> float:
        return self.loglik(theta) - self.penalty(theta)

    def grad(self, theta) -> np.ndarray:
        p = expit(self.design.A @ theta)
        return self.design.A.T @ (self.y - p) - 2.0 * self.lam * self.design.P @ theta

    def info(self, theta, penalized: bool = True) -> np.ndarray:
        p = expit(self.design.A @ theta)
        w = p * (1.0 - p)
        I = self.design.A.T @ (w[:, None] * self.design.A)
        if penalized:
            I = I + 2.0 * self.lam * self.design.P
        return I


class GammaObjective:
    """Penalised gamma log-likelihood of the positive values (log links for mu and sigma)."""

    def __init__(self, d_mu: _Design, d_sigma: _Design, x: np.ndarray, lam_mu: float, lam_sigma: float):
        self.d_mu = d_mu
        self.d_sigma = d_sigma
        self.x = x
        self.logx = np.log(x)
        self.lam_mu = lam_mu
        self.lam_sigma = lam_sigma
        self.split = d_mu.size

    def _params(self, theta):
        mu = np.exp(self.d_mu.A @ theta[: self.split])
        sigma = np.exp(self.d_sigma.A @ theta[self.split:])
        return mu, sigma

    def loglik(self, theta) -> float:
        mu, sigma = self._params(theta)
        with np.errstate(over="ignore", invalid="ignore"):
            ll = sigma * np.log(sigma / mu) - gammaln(sigma) + (sigma - 1.0) * self.logx - sigma * self.x / mu
        total = float(np.sum(ll))
        return total if np.isfinite(total) else -np.inf

    def penalty(self, theta) -> float:
        a, b = theta[: self.split], theta[self.split:]
        return float(self.lam_mu * a @ self.d_mu.P @ a + self.lam_sigma * b @ self.d_sigma.P @ b)

    def value(self, theta) -> float:
        return self.loglik(theta) - self.penalty(theta)

    def grad(self, theta) -> np.ndarray:
        mu, sigma = self._params(theta)
        a, b = theta[: self.split], theta[self.split:]
        r = self.x / mu
        u_mu = sigma * (r - 1.0)
        u_sigma = sigma * (np.log(sigma) - np.log(mu) + 1.0 - digamma(sigma) + self.logx - r)
        g_mu = self.d_mu.A.T @ u_mu - 2.0 * self.lam_mu * self.d_mu.P @ a
        g_sigma = self.d_sigma.A.T @ u_sigma - 2.0 * self.lam_sigma * self.d_sigma.P @ b
        return np.concatenate([g_mu, g_sigma])

    def info(self, theta, penalized: bool = True) -> np.ndarray:
        """Expected (Fisher) information; the mu/sigma cross block is zero."""
        _, sigma = self._params(theta)
        w_mu = sigma
        w_sigma = sigma * sigma * trigamma(sigma) - sigma
        n1, n2 = self.split, self.d_sigma.size
        I = np.zeros((n1 + n2, n1 + n2))
        I[:n1, :n1] = self.d_mu.A.T @ (w_mu[:, None] * self.d_mu.A)
        I[n1:, n1:] = self.d_sigma.A.T @ (w_sigma[:, None] * self.d_sigma.A)
        if penalized:
            I[:n1, :n1] += 2.0 * self.lam_mu * self.d_mu.P
            I[n1:, n1:] += 2.0 * self.lam_sigma * self.d_sigma.P
        return I


def _maximize(obj, theta0: np.ndarray, tol: float, max_iter: int):
    """Scoring iterations with step halving; returns (theta, history, converged)."""
    theta = np.array(theta0, dtype=float)
    f = obj.value(theta)
    history = [f]
    converged = False
    for _ in range(max_iter):
        g = obj.grad(theta)
        I = obj.info(theta)
        try:
            step = np.linalg.solve(I, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(I, g, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            f_new = obj.value(cand)
            if np.isfinite(f_new) and f_new >= f - 1e-12 * abs(f):
                break
            t *= 0.5
        else:
            break
        improvement = f_new - f
        theta, f = cand, f_new
        history.append(f)
        if abs(improvement) < tol:
            converged = True
            break
    return theta, history, converged


def _edf(I_unpen: np.ndarray, I_pen: np.ndarray) -> float:
    return float(np.trace(np.linalg.solve(I_pen, I_unpen)))


def _calibrate_lambda(A: np.ndarray, w: np.ndarray, P: np.ndarray, target: float) -> float:
    """Penalty weight giving a smooth (non-intercept) EDF of ``target``."""
    M = A.T @ (w[:, None] * A)
    max_edf = A.shape[1] - 1

    def smooth_edf(log_lam):
        return _edf(M, M + 2.0 * 10.0**log_lam * P) - 1.0

    if target >= max_edf - 1e-6:
        return 0.0
    lo, hi = -12.0, 12.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if smooth_edf(mid) > target:
            lo = mid
        else:
            hi = mid
    return float(10.0 ** (0.5 * (lo + hi)))


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, (MaSeries, PrecipSeries)):
        dates, values = data.dates, data.values
    else:
        dates, values = data
        dates = np.asarray(dates, dtype="datetime64[D]")
        values = np.asarray(values, dtype=float)
    keep = ~np.isnan(values)
    return dates[keep], values[keep]


def _fit_bernoulli(u, is_zero, dim, lam, cfg: FitConfig):
    design = _Design(build_cyclic_basis(dim), u)
    p0 = is_zero.mean()
    theta0 = np.zeros(design.size)
    theta0[0] = np.log(p0 / (1.0 - p0))
    if lam is None:
        lam = _calibrate_lambda(design.A, np.full(len(u), p0 * (1.0 - p0)), design.P, cfg.target_edf)
    obj = BernoulliObjective(design, is_zero, lam)
    theta, history, converged = _maximize(obj, theta0, cfg.tol, cfg.max_iter)
    return obj, theta, history, converged


def _fit_gamma(u, x, dims, lams, cfg: FitConfig):
    d_mu = _Design(build_cyclic_basis(dims[0]), u)
    d_sigma = _Design(build_cyclic_basis(dims[1]), u)
    mean = x.mean()
    var = x.var()
    s0 = mean**2 / var if var > 0 else 1.0
    theta0 = np.zeros(d_mu.size + d_sigma.size)
    theta0[0] = np.log(mean)
    theta0[d_mu.size] = np.log(s0)
    lam_mu, lam_sigma = lams
    if lam_mu is None:
        lam_mu = _calibrate_lambda(d_mu.A, np.full(len(x), s0), d_mu.P, cfg.target_edf)
    if lam_sigma is None:
        w = s0 * s0 * trigamma(s0) - s0
        lam_sigma = _calibrate_lambda(d_sigma.A, np.full(len(x), w), d_sigma.P, cfg.target_edf)
    obj = GammaObjective(d_mu, d_sigma, x, lam_mu, lam_sigma)
    theta, history, converged = _maximize(obj, theta0, cfg.tol, cfg.max_iter)
    return obj, theta, history, converged


def _aic(obj, theta) -> float:
    edf = _edf(obj.info(theta, penalized=False), obj.info(theta))
    return -2.0 * obj.loglik(theta) + 2.0 * edf


_AIC_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


def fit_seasonal_zaga(data, config: FitConfig | None = None) -> SeasonalZagaModel:
    """Fit the seasonal ZAGA regression to a precipitation or moving-average series.

    Undefined entries are skipped. Data without any zero fixes ``pi`` at 0.

    Raises
    ------
    InsufficientData
        With fewer than three observations per basis function.
    AllZero
        When no observation is positive.
    """
    cfg = config or FitConfig()
    dates, x = _as_xy(data)
    total_dim = sum(cfg.dims)
    if len(x) < 3 * total_dim:
        raise InsufficientData(
            f"need at least {3 * total_dim} defined observations for basis dims {cfg.dims}, got {len(x)}"
        )
    if np.any(x < 0):
        raise DataError("observations must be non-negative")
    is_zero = x == 0
    positives = x[~is_zero]
    if positives.size == 0:
        raise AllZero("all observations are zero; gamma component is unidentifiable")
    if np.unique(positives).size < 2:
        raise DataError("need at least 2 distinct positive observations")
    u = seasonal_positions(dates)

    stats: dict[str, Any] = {"n": int(len(x)), "n_zero": int(is_zero.sum())}
    fix_pi = cfg.fix_pi_zero or not is_zero.any()
    if fix_pi and is_zero.any():
        raise DataError("pi can only be fixed at zero when the data contain no zeros")

    pi_term = None
    bern_ll = 0.0
    bern_pen = 0.0
    converged = True
    iterations = 0
    if not fix_pi:
        candidates = [cfg.lam[0]]
        if cfg.select == "aic":
            base = _fit_bernoulli(u, is_zero, cfg.dims[0], cfg.lam[0], cfg)[0].lam
            candidates = [base * m for m in _AIC_GRID]
        best = None
        for lam in candidates:
            obj, theta, hist, conv = _fit_bernoulli(u, is_zero, cfg.dims[0], lam, cfg)
            score = _aic(obj, theta) if cfg.select == "aic" else 0.0
            if best is None or score < best[0]:
                best = (score, obj, theta, hist, conv)
        _, obj, theta, hist, conv = best
        pi_term = obj.design.term(theta, obj.lam)
        bern_ll, bern_pen = obj.loglik(theta), obj.penalty(theta)
        converged &= conv
        iterations += len(hist) - 1
        stats["pi"] = {"loglik": bern_ll, "history": hist, "converged": conv,
                       "edf": _edf(obj.info(theta, False), obj.info(theta)) - 1.0}
    else:
        stats["pi"] = None

    u_pos = u[~is_zero]
    candidates = [(cfg.lam[1], cfg.lam[2])]
    if cfg.select == "aic":
        base = _fit_gamma(u_pos, positives, cfg.dims[1:], (cfg.lam[1], cfg.lam[2]), cfg)[0]
        candidates = [(base.lam_mu * a, base.lam_sigma * b) for a in _AIC_GRID for b in _AIC_GRID]
    best = None
    for lams in candidates:
        obj, theta, hist, conv = _fit_gamma(u_pos, positives, cfg.dims[1:], lams, cfg)
        score = _aic(obj, theta) if cfg.select == "aic" else 0.0
        if best is None or score < best[0]:
            best = (score, obj, theta, hist, conv)
    _, gobj, gtheta, ghist, gconv = best
    mu_term = gobj.d_mu.term(gtheta[: gobj.split], gobj.lam_mu)
    sigma_term = gobj.d_sigma.term(gtheta[gobj.split:], gobj.lam_sigma)
    converged &= gconv
    iterations += len(ghist) - 1
    gI, gIp = gobj.info(gtheta, False), gobj.info(gtheta)
    stats["gamma"] = {"loglik": gobj.loglik(gtheta), "history": ghist, "converged": gconv,
                      "edf": _edf(gI, gIp) - 2.0}

    stats["loglik"] = bern_ll + gobj.loglik(gtheta)
    stats["penalized_loglik"] = stats["loglik"] - bern_pen - gobj.penalty(gtheta)
    stats["iterations"] = iterations
    stats["converged"] = bool(converged)
    if not converged:
        logger.warning("seasonal ZAGA fit did not converge within %d iterations", cfg.max_iter)
    return SeasonalZagaModel(pi_term, mu_term, sigma_term, stats)


def predict_params(model, dates) -> list[ZagaParams]:
    """ZAGA parameters of ``model`` at each date."""
    return model.predict_params(dates)


def fit_binned_zaga(data, bins: int, min_size: int = 3) -> BinnedZagaModel:
    """Independent ZAGA maximum-likelihood fits per seasonal bin.

    Errors raised for a bin carry its index.
    """
    dates, x = _as_xy(data)
    labels = season_bin(dates, bins)
    params = []
    counts = []
    short = [b for b in range(bins) if np.count_nonzero(labels == b) < min_size]
    if short:
        raise InsufficientData(
            f"seasonal bins with fewer than {min_size} values: {short}", bins=short
        )
    for b in range(bins):
        vals = x[labels == b]
        try:
            params.append(zaga_mle(vals))
        except (AllZero, TooFewDistinct) as exc:
            raise type(exc)(str(exc), bin_index=b) from None
        counts.append(int(vals.size))
    return BinnedZagaModel(bins, tuple(params), tuple(counts))


def loglik(model, data) -> float:
    """ZAGA log-likelihood of the defined entries of ``data`` under ``model``."""
    dates, x = _as_xy(data)
    pi, mu, sigma = model.predict_arrays(dates)
    zero = x == 0
    with np.errstate(divide="ignore"):
        total = np.sum(np.log(pi[zero]))
    pos = ~zero
    if pos.any():
        total += np.sum(np.log1p(-pi[pos]) + gamma_logpdf(x[pos], mu[pos], sigma[pos]))
    return float(total)
