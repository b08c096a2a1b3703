"""Synthetic precipitation generators with known seasonal ZAGA parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .timeseries import MONTHLY, PrecipSeries, period_steps_for, seasonal_positions

__all__ = ["SeasonalCurves", "weekly_dates", "monthly_dates", "simulate", "AMAZON_WEEKLY", "SINE_TEST"]

Curve = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeasonalCurves:
    """``pi``, ``mu`` and ``sigma`` as functions of the year fraction."""

    pi: Curve
    mu: Curve
    sigma: Curve

    def arrays(self, dates):
        u = seasonal_positions(dates)
        return self.pi(u), self.mu(u), self.sigma(u)


def _two_pi(u):
    return 2.0 * np.pi * np.asarray(u, dtype=float)


# Wet season early in the year, near-zero weeks only in the dry season.
AMAZON_WEEKLY = SeasonalCurves(
    pi=lambda u: expit(-4.0 + 1.5 * np.cos(_two_pi(u) - 1.6 * np.pi)),
    mu=lambda u: np.exp(3.6 + 0.6 * np.cos(_two_pi(u) - 0.4 * np.pi)),
    sigma=lambda u: np.exp(0.5 + 0.2 * np.sin(_two_pi(u))),
)

SINE_TEST = SeasonalCurves(
    pi=lambda u: expit(-1.0 + np.sin(_two_pi(u))),
    mu=lambda u: np.exp(2.0 + 0.8 * np.cos(_two_pi(u))),
    sigma=lambda u: np.full(np.shape(u), 2.0),
)


def weekly_dates(n: int = 522, start: str = "2004-01-05") -> np.ndarray:
    return np.datetime64(start, "D") + 7 * np.arange(n)


def monthly_dates(n_years: int, start_year: int = 1980, day: int = 15) -> np.ndarray:
    months = np.datetime64(f"{start_year}-01", "M") + np.arange(12 * n_years)
    return months.astype("datetime64[D]") + (day - 1)


def simulate(curves: SeasonalCurves, dates, rng: np.random.Generator, step=None) -> PrecipSeries:
    """Independent ZAGA draws at each date with the seasonal parameters of ``curves``."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    pi, mu, sigma = curves.arrays(dates)
    zero = rng.random(len(dates)) < pi
    values = np.where(zero, 0.0, rng.gamma(sigma, mu / sigma))
    if step is None:
        gap = int(np.median(np.diff(dates).astype(int))) if len(dates) > 1 else 7
        step = MONTHLY if 28 <= gap <= 31 else gap
    return PrecipSeries(dates, values, step=step, period_steps=period_steps_for(step))
