"""Precipitation series ingestion, moving averages and seasonal covariates."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError, DuplicateDate, MalformedRow, NegativeValue, TooFewRows

__all__ = [
    "PrecipSeries",
    "MaSeries",
    "load_csv",
    "moving_average",
    "seasonal_position",
    "seasonal_positions",
    "season_bin",
    "season_indices",
    "split_by_season",
]

DAYS_PER_YEAR = 365.2425
MONTHLY = "month"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _to_datetime64(dates: Iterable) -> np.ndarray:
    out = np.array([np.datetime64(d, "D") for d in dates], dtype="datetime64[D]")
    return out


@dataclass(frozen=True)
class PrecipSeries:
    """Ordered precipitation observations; ``nan`` marks a missing value.

    ``step`` is a number of days, or ``"month"`` for calendar-monthly data.
    """

    dates: np.ndarray
    values: np.ndarray
    step: int | str = 7
    period_steps: float = DAYS_PER_YEAR / 7

    def __post_init__(self):
        dates = np.asarray(self.dates)
        if dates.dtype != "datetime64[D]":
            dates = _to_datetime64(self.dates)
        values = np.asarray(self.values, dtype=float)
        if dates.shape != values.shape or dates.ndim != 1:
            raise DataError("dates and values must be one-dimensional and of equal length")
        if len(dates) > 1 and np.any(np.diff(dates).astype(int) <= 0):
            raise DataError("timestamps must be strictly increasing")
        present = ~np.isnan(values)
        if np.any(values[present] < 0):
            raise DataError("precipitation values must be non-negative")
        if not self.period_steps > 0:
            raise DataError("period_steps must be positive")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @classmethod
    def from_values(cls, dates: Sequence, values: Sequence[float], step: int | str | None = None):
        dates = _to_datetime64(dates)
        if step is None:
            step = infer_step(dates)
        return cls(dates, np.asarray(values, dtype=float), step=step, period_steps=period_steps_for(step))


@dataclass(frozen=True)
class MaSeries:
    """k-step trailing moving average; ``nan`` where undefined."""

    scale: int
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.scale < 1:
            raise DataError("scale must be a positive integer")
        object.__setattr__(self, "dates", _frozen(self.dates))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)


def period_steps_for(step: int | str) -> float:
    if step == MONTHLY:
        return 12.0
    return DAYS_PER_YEAR / float(step)


def infer_step(dates: np.ndarray) -> int | str:
    """Modal spacing in days; spacings of 28-31 days are treated as monthly."""
    if len(dates) < 2:
        raise TooFewRows("at least 2 rows are needed to infer the step")
    diffs = np.diff(dates).astype(int)
    mode = Counter(diffs.tolist()).most_common(1)[0][0]
    if 28 <= mode <= 31:
        return MONTHLY
    return int(mode)


def load_csv(source: IO[bytes] | IO[str] | str, step: int | str | None = None) -> PrecipSeries:
    """Read a ``date,precip`` CSV into a :class:`PrecipSeries`.

    ``source`` may be a path, a text stream or a byte stream. An empty precip
    cell is a missing value. Rows are sorted by date. ``step`` overrides the
    inferred spacing.
    """
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return load_csv(fh, step=step)
    raw = source.read()
    text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TooFewRows("empty input") from None
    if [h.strip().lower() for h in header] != ["date", "precip"]:
        raise MalformedRow(1, f"expected header 'date,precip', got {','.join(header)!r}")

    rows: list[tuple[date, float]] = []
    seen: dict[date, int] = {}
    for row_no, fields in enumerate(reader, start=1):
        line = row_no + 1
        if not fields or (len(fields) == 1 and not fields[0].strip()):
            continue
        if len(fields) != 2:
            raise MalformedRow(line, f"expected 2 fields, got {len(fields)}")
        d_text, v_text = fields[0].strip(), fields[1].strip()
        try:
            d = datetime.fromisoformat(d_text).date()
        except ValueError:
            raise MalformedRow(line, f"unparseable date {d_text!r}") from None
        if v_text == "":
            v = math.nan
        else:
            try:
                v = float(v_text)
            except ValueError:
                raise MalformedRow(line, f"unparseable precipitation {v_text!r}") from None
            if not math.isfinite(v):
                raise MalformedRow(line, f"non-finite precipitation {v_text!r}")
            if v < 0:
                raise NegativeValue(row_no, v)
        if d in seen:
            raise DuplicateDate(row_no, d)
        seen[d] = row_no
        rows.append((d, v))

    if len(rows) < 2:
        raise TooFewRows(f"need at least 2 rows, got {len(rows)}")
    rows.sort(key=lambda r: r[0])
    dates = _to_datetime64(r[0] for r in rows)
    values = np.array([r[1] for r in rows], dtype=float)
    if step is None:
        step = infer_step(dates)
    return PrecipSeries(dates, values, step=step, period_steps=period_steps_for(step))


def moving_average(series: PrecipSeries, k: int, min_fraction: float | None = None) -> MaSeries:
    """Trailing k-step mean of ``series``.

    The first ``k - 1`` entries are undefined, and so is any window holding a
    missing value. With ``min_fraction`` set (at least 0.5), a window is
    instead averaged over its present values when at least that fraction of
    the window is present.
    """
    n = len(series)
    if not isinstance(k, (int, np.integer)) or k < 1 or k > n:
        raise DataError(f"moving-average scale k={k} out of range [1, {n}]")
    k = int(k)
    values = series.values
    present = ~np.isnan(values)
    filled = np.where(present, values, 0.0)

    csum = np.concatenate([[0.0], np.cumsum(filled)])
    ccount = np.concatenate([[0], np.cumsum(present)])
    window_sum = csum[k:] - csum[:-k]
    window_count = ccount[k:] - ccount[:-k]

    out = np.full(n, np.nan)
    if min_fraction is None:
        ok = window_count == k
        # cumulative sums accumulate rounding; recompute exactly for full windows
        tail = np.lib.stride_tricks.sliding_window_view(filled, k).mean(axis=1)
        out[k - 1:] = np.where(ok, tail, np.nan)
    else:
        if not 0.5 <= min_fraction <= 1.0:
            raise DataError("min_fraction must lie in [0.5, 1]")
        ok = window_count >= math.ceil(min_fraction * k)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = window_sum / window_count
        out[k - 1:] = np.where(ok, mean, np.nan)
    return MaSeries(k, series.dates, out)


def seasonal_positions(dates) -> np.ndarray:
    """Fraction of the calendar year elapsed at each date, in [0, 1)."""
    d = np.asarray(dates, dtype="datetime64[D]")
    years = d.astype("datetime64[Y]")
    start = years.astype("datetime64[D]")
    end = (years + 1).astype("datetime64[D]")
    day_index = (d - start).astype(float)
    year_len = (end - start).astype(float)
    return day_index / year_len


def seasonal_position(timestamp, fraction_of_day: float = 0.0) -> float:
    """Fraction of the year at ``timestamp``: (day-of-year - 1 + fraction-of-day) / days-in-year."""
    if isinstance(timestamp, datetime):
        fraction_of_day = (
            timestamp.hour * 3600 + timestamp.minute * 60 + timestamp.second + timestamp.microsecond / 1e6
        ) / 86400.0
        timestamp = timestamp.date()
    d = np.datetime64(timestamp, "D")
    year = d.astype("datetime64[Y]")
    start = year.astype("datetime64[D]")
    year_len = float(((year + 1).astype("datetime64[D]") - start).astype(int))
    return (float((d - start).astype(int)) + fraction_of_day) / year_len


def season_bin(dates, bins: int) -> np.ndarray:
    """Seasonal bin index of each date.

    Twelve bins follow calendar months exactly; otherwise the year fraction is
    cut into ``bins`` equal slices.
    """
    d = np.asarray(dates, dtype="datetime64[D]")
    if bins == 12:
        months = d.astype("datetime64[M]").astype(int) % 12
        return months.astype(int)
    pos = seasonal_positions(d)
    return np.minimum((pos * bins).astype(int), bins - 1)


def season_indices(ma: MaSeries, bins: int) -> list[np.ndarray]:
    """Indices into ``ma`` of the defined entries falling in each seasonal bin."""
    if bins < 1:
        raise DataError("bins must be >= 1")
    idx = np.flatnonzero(ma.defined)
    labels = season_bin(ma.dates[idx], bins)
    return [idx[labels == b] for b in range(bins)]


def split_by_season(ma: MaSeries, bins: int) -> list[np.ndarray]:
    """Partition the defined moving-average values into ``bins`` seasonal groups."""
    return [ma.values[i] for i in season_indices(ma, bins)]
