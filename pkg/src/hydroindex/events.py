"""Flood and drought detection from standardized index values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError

__all__ = ["Intensity", "ExtremeEvent", "classify_intensity", "detect_events", "find_runs"]


class Intensity(str, Enum):
    EXTREME_FLOOD = "extreme flood"
    SEVERE_FLOOD = "severe flood"
    MODERATE_FLOOD = "moderate flood"
    NEAR_NORMAL = "near normal"
    MODERATE_DROUGHT = "moderate drought"
    SEVERE_DROUGHT = "severe drought"
    EXTREME_DROUGHT = "extreme drought"

    def __str__(self) -> str:
        return self.value


def classify_intensity(z: float) -> Intensity:
    """Intensity class of a standardized value.

    Flood classes are closed below (``1 <= z < 1.5`` is moderate), drought
    classes closed above (``-1.5 < z <= -1`` is moderate).
    """
    z = float(z)
    if not math.isfinite(z):
        raise DataError(f"cannot classify non-finite value {z!r}")
    if z >= 2.0:
        return Intensity.EXTREME_FLOOD
    if z >= 1.5:
        return Intensity.SEVERE_FLOOD
    if z >= 1.0:
        return Intensity.MODERATE_FLOOD
    if z > -1.0:
        return Intensity.NEAR_NORMAL
    if z > -1.5:
        return Intensity.MODERATE_DROUGHT
    if z > -2.0:
        return Intensity.SEVERE_DROUGHT
    return Intensity.EXTREME_DROUGHT


@dataclass(frozen=True)
class ExtremeEvent:
    kind: str  # "drought" or "flood"
    start: int  # inclusive entry index
    end: int  # inclusive entry index
    peak: float
    magnitude: float
    intensity: Intensity
    start_date: np.datetime64 | None = None
    end_date: np.datetime64 | None = None

    @property
    def duration(self) -> int:
        return self.end - self.start + 1


def find_runs(z) -> list[tuple[int, int, int]]:
    """Maximal runs of same-signed values as ``(start, end, sign)``.

    ``nan`` and exact zeros end a run and belong to none.
    """
    z = np.asarray(z, dtype=float)
    sign = np.zeros(len(z), dtype=int)
    ok = ~np.isnan(z)
    sign[ok] = np.sign(z[ok]).astype(int)
    runs = []
    i = 0
    n = len(z)
    while i < n:
        s = sign[i]
        if s == 0:
            i += 1
            continue
        j = i
        while j + 1 < n and sign[j + 1] == s:
            j += 1
        runs.append((i, j, int(s)))
        i = j + 1
    return runs


def detect_events(z, threshold: float = 1.0, dates=None) -> list[ExtremeEvent]:
    """Droughts and floods as maximal same-sign runs reaching ``|z| >= threshold``.

    ``z`` is an array of standardized values or an object with ``z`` and
    ``dates`` attributes (such as an index series).
    """
    if hasattr(z, "z"):
        dates = z.dates if dates is None else dates
        z = z.z
    if not threshold > 0:
        raise DataError(f"threshold must be > 0, got {threshold}")
    z = np.asarray(z, dtype=float)
    events = []
    for start, end, s in find_runs(z):
        seg = z[start:end + 1]
        peak_i = int(np.argmax(np.abs(seg)))
        peak = float(seg[peak_i])
        if abs(peak) < threshold:
            continue
        events.append(
            ExtremeEvent(
                kind="flood" if s > 0 else "drought",
                start=start,
                end=end,
                peak=peak,
                magnitude=abs(math.fsum(seg)),
                intensity=classify_intensity(peak),
                start_date=None if dates is None else dates[start],
                end_date=None if dates is None else dates[end],
            )
        )
    return events
