"""Standardized hydro-climatic indices from precipitation records.

Three methods are provided: the classical SPI (independent ZAGA fits per
calendar bin), MBSI-1 (a seasonal ZAGA regression on the moving average)
and MBSI-2 (a seasonal model of the raw series with Monte Carlo CDFs of the
moving average).
"""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    ZagaParams,
    gamma_cdf,
    gamma_logpdf,
    gamma_quantile,
    std_normal_cdf,
    std_normal_quantile,
    zaga_cdf,
    zaga_mle,
    zaga_quantile,
    zaga_sample,
)
from .events import ExtremeEvent, Intensity, classify_intensity, detect_events  # noqa: E402
from .gamlss import (  # noqa: E402
    BinnedZagaModel,
    FitConfig,
    SeasonalZagaModel,
    fit_binned_zaga,
    fit_seasonal_zaga,
    loglik,
    predict_params,
)
from .indices import IndexSeries, compute_mbsi1, compute_mbsi2, compute_spi, coverage_interval  # noqa: E402
from .timeseries import MaSeries, PrecipSeries, load_csv, moving_average, seasonal_position, split_by_season  # noqa: E402

__all__ = [
    "ZagaParams", "gamma_cdf", "gamma_logpdf", "gamma_quantile", "std_normal_cdf", "std_normal_quantile",
    "zaga_cdf", "zaga_mle", "zaga_quantile", "zaga_sample",
    "ExtremeEvent", "Intensity", "classify_intensity", "detect_events",
    "BinnedZagaModel", "FitConfig", "SeasonalZagaModel", "fit_binned_zaga", "fit_seasonal_zaga", "loglik",
    "predict_params",
    "IndexSeries", "compute_mbsi1", "compute_mbsi2", "compute_spi", "coverage_interval",
    "MaSeries", "PrecipSeries", "load_csv", "moving_average", "seasonal_position", "split_by_season",
]
