"""Standardized index pipelines: classical SPI, MBSI-1 and MBSI-2."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .distributions import ZagaParams, gamma_cdf, zaga_quantile
from .errors import DataError, InsufficientData
from .gamlss import (
    BinnedZagaModel,
    FitConfig,
    SeasonalZagaModel,
    fit_binned_zaga,
    fit_seasonal_zaga,
)
from .special import std_normal_quantile
from .timeseries import MaSeries, PrecipSeries, moving_average, season_indices

__all__ = [
    "IndexSeries",
    "Coverage",
    "compute_spi",
    "compute_mbsi1",
    "compute_mbsi2",
    "coverage_interval",
    "coverage_band",
    "pit_probabilities",
    "clamp_probabilities",
    "monte_carlo_cdf",
]

logger = logging.getLogger(__name__)

METHODS = ("spi", "mbsi1", "mbsi2")
ANALYTIC_NEFF = 10**6
MIN_SPI_BIN_SIZE = 8
RELIABLE_SPI_BIN_SIZE = 30
DEFAULT_M = 10_000
MIN_M = 100
REPLICATE_BLOCK = 1000


@dataclass(frozen=True)
class IndexSeries:
    """Standardized values with the probabilities and parameters behind them.

    Arrays are aligned with ``dates``; undefined entries hold ``nan``.
    """

    method: str
    scale: int
    dates: np.ndarray
    ma: np.ndarray
    prob: np.ndarray
    z: np.ndarray
    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    metadata: dict = field(default_factory=dict)
    model: Any = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.z)

    def params_at(self, i: int) -> ZagaParams:
        return ZagaParams(float(self.pi[i]), float(self.mu[i]), float(self.sigma[i]))


class Coverage(NamedTuple):
    lo: float
    hi: float
    mean: float


def clamp_probabilities(prob: np.ndarray, n_eff: int) -> np.ndarray:
    """Restrict probabilities to [1/(2 n_eff), 1 - 1/(2 n_eff)]."""
    eps = 0.5 / n_eff
    return np.clip(prob, eps, 1.0 - eps)


def pit_probabilities(x, pi, mu, sigma) -> np.ndarray:
    """ZAGA PIT values; an exact zero maps to the midpoint ``pi / 2`` of the atom."""
    x = np.asarray(x, dtype=float)
    pi = np.asarray(pi, dtype=float)
    out = np.full(x.shape, np.nan)
    ok = ~np.isnan(x)
    pos = ok & (x > 0)
    zero = ok & (x == 0)
    out[zero] = 0.5 * pi[zero]
    if pos.any():
        g = gamma_cdf(x[pos], np.asarray(mu)[pos], np.asarray(sigma)[pos])
        out[pos] = pi[pos] + (1.0 - pi[pos]) * g
    return out


def _standardize(prob: np.ndarray, n_eff: int) -> tuple[np.ndarray, np.ndarray]:
    ok = ~np.isnan(prob)
    p = prob.copy()
    p[ok] = clamp_probabilities(p[ok], n_eff)
    z = np.full(p.shape, np.nan)
    if ok.any():
        z[ok] = std_normal_quantile(p[ok])
    return p, z


def compute_spi(series: PrecipSeries, k: int, bins: int = 12,
                min_bin_size: int = MIN_SPI_BIN_SIZE) -> IndexSeries:
    """Classical SPI: independent ZAGA fits per seasonal bin of the k-step moving average.

    Raises
    ------
    InsufficientData
        If any bin holds fewer than ``min_bin_size`` defined values; the
        offending bins are listed.
    """
    ma = moving_average(series, k)
    groups = season_indices(ma, bins)
    sizes = [len(g) for g in groups]
    short = [b for b, n in enumerate(sizes) if n < min_bin_size]
    if short:
        raise InsufficientData(
            f"SPI needs at least {min_bin_size} values per seasonal bin; "
            f"under-populated bins: {short} (sizes {[sizes[b] for b in short]})",
            bins=short,
        )
    if min(sizes) < RELIABLE_SPI_BIN_SIZE:
        logger.warning(
            "SPI bins hold as few as %d values; per-bin estimates are unreliable below %d",
            min(sizes), RELIABLE_SPI_BIN_SIZE,
        )
    model = fit_binned_zaga(ma, bins)
    pi, mu, sigma = model.predict_arrays(ma.dates)
    prob = pit_probabilities(ma.values, pi, mu, sigma)
    prob, z = _standardize(prob, ANALYTIC_NEFF)
    meta = {"method": "spi", "k": int(k), "bins": int(bins), "min_bin_size": int(min(sizes))}
    return IndexSeries("spi", int(k), ma.dates, ma.values, prob, z, pi, mu, sigma, meta, model)


def compute_mbsi1(series: PrecipSeries, k: int, config: FitConfig | None = None) -> IndexSeries:
    """MBSI-1: a seasonal ZAGA regression fitted to the k-step moving average."""
    ma = moving_average(series, k)
    cfg = config or FitConfig()
    if not np.any(ma.values[ma.defined] == 0) and not cfg.fix_pi_zero:
        cfg = FitConfig(**{**cfg.__dict__, "fix_pi_zero": True})
    model = fit_seasonal_zaga(ma, cfg)
    return index_from_model(model, ma, method="mbsi1")


def index_from_model(model: SeasonalZagaModel | BinnedZagaModel, ma: MaSeries, method: str) -> IndexSeries:
    """Standardize ``ma`` with the analytic ZAGA CDF of a fitted model."""
    pi, mu, sigma = model.predict_arrays(ma.dates)
    prob = pit_probabilities(ma.values, pi, mu, sigma)
    prob, z = _standardize(prob, ANALYTIC_NEFF)
    meta = {"method": method, "k": int(ma.scale)}
    if isinstance(model, SeasonalZagaModel):
        meta["converged"] = model.converged
    return IndexSeries(method, int(ma.scale), ma.dates, ma.values, prob, z, pi, mu, sigma, meta, model)


def _rolling_mean(a: np.ndarray, k: int) -> np.ndarray:
    """Trailing k-mean along the last axis; the first k-1 columns are nan."""
    out = np.full(a.shape, np.nan)
    out[..., k - 1:] = np.lib.stride_tricks.sliding_window_view(a, k, axis=-1).mean(axis=-1)
    return out


def _block_counts(seed: int, block: int, size: int, k: int, pi, mu, sigma, target, defined):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    T = len(pi)
    zero = rng.random((size, T)) < pi
    draws = rng.gamma(sigma, mu / sigma, size=(size, T))
    sims = np.where(zero, 0.0, draws)
    rep = _rolling_mean(sims, k)[:, defined]
    t = target[defined]
    less = np.count_nonzero(rep < t, axis=0)
    ties = np.count_nonzero(rep == t, axis=0)
    return less, ties


def monte_carlo_cdf(pi, mu, sigma, target, k: int, m: int, seed: int,
                    workers: int | None = None, block_size: int = REPLICATE_BLOCK):
    """Count replicates whose k-step moving average falls below (and ties) ``target``.

    Replicate series are drawn from independent ZAGA marginals. Replicates
    are generated in fixed blocks, each with its own stream derived from
    ``(seed, block index)``, so the counts do not depend on ``workers``.
    Returns integer arrays ``(less, ties)`` over all entries; undefined
    targets get zero counts.
    """
    pi, mu, sigma, target = (np.asarray(v, dtype=float) for v in (pi, mu, sigma, target))
    defined = ~np.isnan(target)
    n_blocks = -(-m // block_size)
    sizes = [min(block_size, m - b * block_size) for b in range(n_blocks)]
    args = [(seed, b, sizes[b], k, pi, mu, sigma, target, defined) for b in range(n_blocks)]
    if workers is None:
        workers = min(8, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _block_counts(*a), args))
    else:
        results = [_block_counts(*a) for a in args]
    less = np.zeros(len(target), dtype=np.int64)
    ties = np.zeros(len(target), dtype=np.int64)
    for lc, tc in results:
        less[defined] += lc
        ties[defined] += tc
    return less, ties


def compute_mbsi2(series: PrecipSeries, k: int, m: int = DEFAULT_M, seed: int = 0,
                  config: FitConfig | None = None, model: SeasonalZagaModel | None = None,
                  ties: bool = False, workers: int | None = None) -> IndexSeries:
    """MBSI-2: one seasonal ZAGA fit at scale 1, k-scale CDF by Monte Carlo.

    The probability for each entry is the fraction of ``m`` simulated series
    whose k-step moving average is strictly below the observed one; with
    ``ties=True`` half the tied fraction is added. A pre-fitted ``model``
    skips the fit.
    """
    if m < MIN_M:
        raise DataError(f"Monte Carlo replicate count m must be >= {MIN_M}, got {m}")
    if model is None:
        cfg = config or FitConfig()
        present = series.values[~np.isnan(series.values)]
        if not np.any(present == 0) and not cfg.fix_pi_zero:
            cfg = FitConfig(**{**cfg.__dict__, "fix_pi_zero": True})
        model = fit_seasonal_zaga(series, cfg)
    ma = moving_average(series, k)
    pi, mu, sigma = model.predict_arrays(series.dates)
    less, tied = monte_carlo_cdf(pi, mu, sigma, ma.values, k, m, seed, workers=workers)
    prob = np.full(len(ma), np.nan)
    ok = ma.defined
    counts = less + (0.5 * tied if ties else 0.0)
    prob[ok] = counts[ok] / m
    prob, z = _standardize(prob, m)
    meta = {"method": "mbsi2", "k": int(k), "m": int(m), "seed": int(seed), "ties": bool(ties),
            "converged": model.converged}
    return IndexSeries("mbsi2", int(k), ma.dates, ma.values, prob, z, pi, mu, sigma, meta, model)


def coverage_interval(params: ZagaParams, level: float = 0.95) -> Coverage:
    """Central ``level`` probability interval of a ZAGA plus its mean ``(1 - pi) * mu``."""
    if not 0.0 < level < 1.0:
        raise DataError(f"coverage level must lie in (0, 1), got {level}")
    tail = 0.5 * (1.0 - level)
    lo = zaga_quantile(tail, params)
    hi = zaga_quantile(1.0 - tail, params)
    return Coverage(float(lo), float(hi), params.mean)


def coverage_band(pi, mu, sigma, level: float = 0.95) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`coverage_interval` over aligned parameter arrays."""
    if not 0.0 < level < 1.0:
        raise DataError(f"coverage level must lie in (0, 1), got {level}")
    pi, mu, sigma = (np.asarray(v, dtype=float) for v in (pi, mu, sigma))
    tail = 0.5 * (1.0 - level)
    lo = zaga_quantile(np.full(pi.shape, tail), pi, mu, sigma)
    hi = zaga_quantile(np.full(pi.shape, 1.0 - tail), pi, mu, sigma)
    return lo, hi, (1.0 - pi) * mu
