"""File formats: index CSV + metadata JSON, events CSV, model and report JSON.

Floats are written with ``repr`` so they read back bit-identically and never
depend on the locale.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .diagnostics import DiagnosticsReport
from .errors import DataError, MalformedRow
from .events import ExtremeEvent, Intensity
from .gamlss import BINNED_FORMAT, MODEL_FORMAT, BinnedZagaModel, SeasonalZagaModel
from .indices import IndexSeries

__all__ = [
    "INDEX_COLUMNS",
    "EVENT_COLUMNS",
    "format_float",
    "write_index_csv",
    "read_index_csv",
    "index_metadata",
    "write_json",
    "read_json",
    "write_events_csv",
    "read_events_csv",
    "save_model",
    "load_model",
    "write_histogram_csv",
    "write_qq_csv",
]

INDEX_COLUMNS = ("date", "ma", "prob", "z", "pi", "mu", "sigma")
EVENT_COLUMNS = ("kind", "start", "end", "peak", "magnitude", "intensity")


def format_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def _parse_float(text: str, line: int) -> float:
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(line, f"unparseable number {text!r}") from None


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")


def index_csv_text(index: IndexSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INDEX_COLUMNS)
    for i in range(len(index)):
        w.writerow([
            str(index.dates[i]),
            format_float(index.ma[i]),
            format_float(index.prob[i]),
            format_float(index.z[i]),
            format_float(index.pi[i]),
            format_float(index.mu[i]),
            format_float(index.sigma[i]),
        ])
    return buf.getvalue()


def write_index_csv(index: IndexSeries, path) -> None:
    _write_text(path, index_csv_text(index))


def read_index_csv(path, metadata: dict | None = None) -> IndexSeries:
    """Load an index CSV; ``metadata`` (the JSON sidecar) supplies method and scale."""
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError(f"{path}: empty index file")
    if tuple(rows[0]) != INDEX_COLUMNS:
        raise MalformedRow(1, f"expected header {','.join(INDEX_COLUMNS)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataError(f"{path}: index file has no entries")
    cols = {c: [] for c in INDEX_COLUMNS}
    for line, r in enumerate(body, start=2):
        if len(r) != len(INDEX_COLUMNS):
            raise MalformedRow(line, f"expected {len(INDEX_COLUMNS)} fields, got {len(r)}")
        try:
            cols["date"].append(np.datetime64(r[0], "D"))
        except ValueError:
            raise MalformedRow(line, f"unparseable date {r[0]!r}") from None
        for c, v in zip(INDEX_COLUMNS[1:], r[1:]):
            cols[c].append(_parse_float(v, line))
    meta = dict(metadata or {})
    arr = {c: np.array(cols[c], dtype=float) for c in INDEX_COLUMNS[1:]}
    return IndexSeries(
        method=str(meta.get("method", "unknown")),
        scale=int(meta.get("k", 0)),
        dates=np.array(cols["date"], dtype="datetime64[D]"),
        ma=arr["ma"], prob=arr["prob"], z=arr["z"],
        pi=arr["pi"], mu=arr["mu"], sigma=arr["sigma"],
        metadata=meta,
    )


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    _write_text(path, json_text(obj))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def index_metadata(index: IndexSeries, model_file: str | None = None, **extra) -> dict:
    meta = {k: v for k, v in index.metadata.items()}
    meta.update({"method": index.method, "k": index.scale, "n": int(len(index)),
                 "n_defined": int(index.defined.sum()), "model_file": model_file})
    meta.setdefault("m", None)
    meta.setdefault("seed", None)
    meta.update(extra)
    return meta


def events_csv_text(events: Iterable[ExtremeEvent], dates=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for ev in events:
        start = ev.start_date if ev.start_date is not None else (dates[ev.start] if dates is not None else ev.start)
        end = ev.end_date if ev.end_date is not None else (dates[ev.end] if dates is not None else ev.end)
        w.writerow([ev.kind, str(start), str(end), format_float(ev.peak), format_float(ev.magnitude),
                    ev.intensity.value])
    return buf.getvalue()


def write_events_csv(events: Iterable[ExtremeEvent], path, dates=None) -> None:
    _write_text(path, events_csv_text(events, dates))


def read_events_csv(path) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != EVENT_COLUMNS:
        raise MalformedRow(1, f"expected header {','.join(EVENT_COLUMNS)}")
    out = []
    for line, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        out.append({
            "kind": r[0], "start": r[1], "end": r[2],
            "peak": _parse_float(r[3], line), "magnitude": _parse_float(r[4], line),
            "intensity": Intensity(r[5]),
        })
    return out


def save_model(model, path) -> None:
    write_json(model.to_dict(), path)


def load_model(path):
    d = read_json(path)
    fmt = d.get("format")
    if fmt == MODEL_FORMAT:
        return SeasonalZagaModel.from_dict(d)
    if fmt == BINNED_FORMAT:
        return BinnedZagaModel.from_dict(d)
    raise DataError(f"{path}: unknown model format {fmt!r}")


def write_histogram_csv(report: DiagnosticsReport, path) -> None:
    bins = len(report.pit_histogram)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lower", "upper", "count"])
    for i, c in enumerate(report.pit_histogram):
        w.writerow([format_float(i / bins), format_float((i + 1) / bins), c])
    _write_text(path, buf.getvalue())


def write_qq_csv(report: DiagnosticsReport, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theoretical", "empirical"])
    for a, b in report.qq_points:
        w.writerow([format_float(a), format_float(b)])
    _write_text(path, buf.getvalue())
