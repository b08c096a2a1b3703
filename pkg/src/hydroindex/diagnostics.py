"""Model checking: PIT uniformity and normal QQ comparisons."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError
from .special import std_normal_quantile

__all__ = [
    "DiagnosticsReport",
    "ks_uniform",
    "ks_critical_value",
    "qq_points",
    "pit_histogram",
    "diagnose",
]

MIN_POINTS = 5


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic Kolmogorov critical value ``sqrt(-log(alpha/2)/2) / sqrt(n)``.

    Conservative-ish approximation; not exact for n below about 35.
    """
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks_uniform(probs, alpha: float = 0.01) -> tuple[float, bool]:
    """Kolmogorov distance between the empirical CDF of ``probs`` and U(0, 1).

    Returns ``(statistic, passed)`` where ``passed`` means the statistic is
    below the asymptotic critical value at level ``alpha``.
    """
    p = np.sort(np.asarray(probs, dtype=float))
    n = len(p)
    if n < MIN_POINTS:
        raise DataError(f"KS test needs at least {MIN_POINTS} values, got {n}")
    if np.any(~(p > 0) | ~(p < 1)):
        raise DataError("KS uniformity values must lie in (0, 1)")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - p)
    d_minus = np.max(p - (i - 1) / n)
    stat = float(max(d_plus, d_minus))
    return stat, stat < ks_critical_value(n, alpha)


def qq_points(z) -> np.ndarray:
    """Normal QQ pairs ``(theoretical, empirical)`` with plotting positions (i - 0.5)/n."""
    z = np.sort(np.asarray(z, dtype=float))
    n = len(z)
    if n < MIN_POINTS:
        raise DataError(f"QQ comparison needs at least {MIN_POINTS} values, got {n}")
    theo = std_normal_quantile((np.arange(1, n + 1) - 0.5) / n)
    return np.column_stack([theo, z])


def pit_histogram(probs, bins: int = 20) -> np.ndarray:
    """Counts over equal-width bins of [0, 1]; the last bin is closed on the right."""
    if bins < 2:
        raise DataError("histogram needs at least 2 bins")
    p = np.asarray(probs, dtype=float)
    idx = np.minimum(np.floor(p * bins).astype(int), bins - 1)
    idx = np.maximum(idx, 0)
    return np.bincount(idx, minlength=bins)


@dataclass
class DiagnosticsReport:
    n: int
    ks_stat: float
    ks_critical: float
    ks_pass: bool
    alpha: float
    pit_histogram: list[int]
    qq_points: list[tuple[float, float]]
    qq_max_deviation: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qq_points"] = [[float(a), float(b)] for a, b in self.qq_points]
        return d


def diagnose(prob, z, alpha: float = 0.01, bins: int = 20) -> DiagnosticsReport:
    """Diagnostics over the defined entries of aligned ``prob`` and ``z`` arrays."""
    prob = np.asarray(prob, dtype=float)
    z = np.asarray(z, dtype=float)
    ok = ~np.isnan(prob) & ~np.isnan(z)
    p, zz = prob[ok], z[ok]
    stat, passed = ks_uniform(p, alpha)
    qq = qq_points(zz)
    return DiagnosticsReport(
        n=int(ok.sum()),
        ks_stat=stat,
        ks_critical=ks_critical_value(int(ok.sum()), alpha),
        ks_pass=bool(passed),
        alpha=alpha,
        pit_histogram=[int(c) for c in pit_histogram(p, bins)],
        qq_points=[(float(a), float(b)) for a, b in qq],
        qq_max_deviation=float(np.max(np.abs(qq[:, 0] - qq[:, 1]))),
    )
