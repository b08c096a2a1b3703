"""Command-line interface: ``fit``, ``index``, ``events`` and ``diagnose``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import diagnose
from .errors import DataError, HydroIndexError, NumericalError
from .events import detect_events
from .gamlss import FitConfig, SeasonalZagaModel, fit_seasonal_zaga
from .indices import DEFAULT_M, coverage_band, compute_mbsi1, compute_mbsi2, compute_spi, index_from_model
from .io import (
    index_metadata,
    load_model,
    read_index_csv,
    read_json,
    save_model,
    write_events_csv,
    write_histogram_csv,
    write_index_csv,
    write_json,
    write_qq_csv,
)
from .svgplot import events_svg, histogram_svg, qq_svg, timeline_svg
from .timeseries import load_csv, moving_average

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
SEED_ENV = "HYDROINDEX_SEED"

logger = logging.getLogger("hydroindex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    input: str
    output: str
    method: str | None = None
    scale: int = 1
    bins: int | None = None
    dims: tuple[int, int, int] = (10, 10, 10)
    lam: tuple[float | None, float | None, float | None] = (None, None, None)
    select: str | None = None
    threshold: float = 1.0
    m: int | None = None
    seed: int | None = None
    ties: bool = False
    workers: int | None = None
    model: str | None = None
    plot: bool = False
    alpha: float = 0.01
    hist_bins: int = 20

    def validate(self) -> None:
        if self.scale < 1:
            raise UsageError("--scale must be a positive integer")
        if self.command == "index":
            if self.method == "spi" and self.model:
                raise UsageError("--model is not used with --method spi")
            if self.method != "spi" and self.bins is not None:
                raise UsageError("--bins is only valid with --method spi")
            if self.method != "mbsi2":
                for flag, val in (("--m", self.m), ("--seed", self.seed), ("--workers", self.workers)):
                    if val is not None:
                        raise UsageError(f"{flag} is only valid with --method mbsi2")
                if self.ties:
                    raise UsageError("--ties is only valid with --method mbsi2")
            elif self.m is not None and self.m < 100:
                raise UsageError("--m must be at least 100")
        if self.threshold <= 0:
            raise UsageError("--threshold must be > 0")
        if not 0 < self.alpha < 1:
            raise UsageError("--alpha must lie in (0, 1)")
        if self.hist_bins < 2:
            raise UsageError("--hist-bins must be at least 2")
        if any(d < 4 for d in self.dims):
            raise UsageError("--basis-dims entries must be >= 4")
        if any(v is not None and v < 0 for v in self.lam):
            raise UsageError("--lambda entries must be >= 0")

    def fit_config(self) -> FitConfig:
        return FitConfig(dims=self.dims, lam=self.lam, select=self.select)


def _add_fit_flags(p):
    p.add_argument("--basis-dims", nargs=3, type=int, metavar=("PI", "MU", "SIGMA"), default=[10, 10, 10],
                   help="cyclic spline dimension per predictor (default 10 10 10)")
    p.add_argument("--lambda", dest="lam", nargs=3, type=float, metavar=("PI", "MU", "SIGMA"), default=None,
                   help="fixed penalty weights (default: calibrated to ~4 effective df)")
    p.add_argument("--select", choices=["aic"], default=None, help="choose penalty weights by AIC grid search")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hydroindex", description="Standardized precipitation indices (SPI, MBSI-1, MBSI-2).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the seasonal ZAGA model and save it as JSON")
    p.add_argument("-i", "--input", required=True, help="precipitation CSV (date,precip)")
    p.add_argument("-o", "--output", required=True, help="model JSON path")
    p.add_argument("--scale", type=int, default=1, help="moving-average scale k to fit at (default 1)")
    _add_fit_flags(p)

    p = sub.add_parser("index", help="compute a standardized index series")
    p.add_argument("-i", "--input", required=True, help="precipitation CSV (date,precip)")
    p.add_argument("-o", "--output", required=True, help="output directory (index.csv, meta.json)")
    p.add_argument("--method", required=True, choices=["spi", "mbsi1", "mbsi2"])
    p.add_argument("--scale", type=int, default=1, help="time-scale k in series steps (default 1)")
    p.add_argument("--bins", type=int, default=None, help="seasonal bins for spi (default 12)")
    p.add_argument("--model", default=None, help="model JSON from `fit` (mbsi1 at the same k, mbsi2 at k=1)")
    p.add_argument("--m", type=int, default=None, help=f"Monte Carlo replicates for mbsi2 (default {DEFAULT_M})")
    p.add_argument("--seed", type=int, default=None, help=f"random seed for mbsi2 (default ${SEED_ENV} or 0)")
    p.add_argument("--ties", action="store_true", help="mbsi2: count half of tied replicates")
    p.add_argument("--workers", type=int, default=None, help="mbsi2: simulation threads")
    _add_fit_flags(p)

    p = sub.add_parser("events", help="detect floods and droughts in an index CSV")
    p.add_argument("-i", "--input", required=True, help="index CSV from `index`")
    p.add_argument("-o", "--output", required=True, help="events CSV path")
    p.add_argument("--threshold", type=float, default=1.0, help="detection threshold on |z| (default 1.0)")

    p = sub.add_parser("diagnose", help="PIT uniformity and normality diagnostics")
    p.add_argument("-i", "--input", required=True, help="index CSV from `index`")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--alpha", type=float, default=0.01, help="KS significance level (default 0.01)")
    p.add_argument("--hist-bins", type=int, default=20, help="PIT histogram bins (default 20)")
    p.add_argument("--threshold", type=float, default=1.0, help="event threshold for the event plot")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")
    return parser


def _config_from_args(args) -> RunConfig:
    lam = tuple(args.lam) if getattr(args, "lam", None) else (None, None, None)
    seed = getattr(args, "seed", None)
    cfg = RunConfig(
        command=args.command,
        input=args.input,
        output=args.output,
        method=getattr(args, "method", None),
        scale=getattr(args, "scale", 1),
        bins=getattr(args, "bins", None),
        dims=tuple(getattr(args, "basis_dims", (10, 10, 10))),
        lam=lam,
        select=getattr(args, "select", None),
        threshold=getattr(args, "threshold", 1.0),
        m=getattr(args, "m", None),
        seed=seed,
        ties=getattr(args, "ties", False),
        workers=getattr(args, "workers", None),
        model=getattr(args, "model", None),
        plot=getattr(args, "plot", False),
        alpha=getattr(args, "alpha", 0.01),
        hist_bins=getattr(args, "hist_bins", 20),
    )
    cfg.validate()
    return cfg


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def _sidecar(index_path: str) -> dict:
    meta_path = Path(index_path).with_name("meta.json")
    return read_json(meta_path) if meta_path.exists() else {}


def cmd_fit(cfg: RunConfig) -> None:
    series = load_csv(cfg.input)
    data = moving_average(series, cfg.scale)
    model = fit_seasonal_zaga(data, cfg.fit_config())
    stats = dict(model.fit_stats)
    stats["k"] = cfg.scale
    model = SeasonalZagaModel(model.pi_term, model.mu_term, model.sigma_term, stats)
    Path(cfg.output).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, cfg.output)
    if not model.converged:
        raise NumericalError("seasonal ZAGA fit did not converge; model written with converged=false")


def cmd_index(cfg: RunConfig) -> None:
    series = load_csv(cfg.input)
    k = cfg.scale
    if cfg.method == "spi":
        index = compute_spi(series, k, bins=cfg.bins or 12)
    elif cfg.method == "mbsi1":
        if cfg.model:
            model = _load_seasonal(cfg.model, k)
            index = index_from_model(model, moving_average(series, k), "mbsi1")
        else:
            index = compute_mbsi1(series, k, cfg.fit_config())
    else:
        model = _load_seasonal(cfg.model, 1) if cfg.model else None
        seed = cfg.seed if cfg.seed is not None else _default_seed()
        index = compute_mbsi2(series, k, m=cfg.m or DEFAULT_M, seed=seed, config=cfg.fit_config(),
                              model=model, ties=cfg.ties, workers=cfg.workers)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_index_csv(index, out / "index.csv")
    # names and content hashes, not paths, so metadata does not depend on the working location
    model_file = Path(cfg.model).name if cfg.model else None
    extra = {"model_sha256": _sha256(cfg.model)} if cfg.model else {}
    meta = index_metadata(index, model_file=model_file, input=Path(cfg.input).name,
                          input_sha256=_sha256(cfg.input), **extra)
    write_json(meta, out / "meta.json")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_seasonal(path: str, k: int) -> SeasonalZagaModel:
    model = load_model(path)
    if not isinstance(model, SeasonalZagaModel):
        raise DataError(f"{path}: expected a seasonal ZAGA model")
    fitted_k = model.fit_stats.get("k", 1)
    if fitted_k != k:
        raise DataError(f"{path}: model was fitted at scale k={fitted_k}, but k={k} is required")
    return model


def cmd_events(cfg: RunConfig) -> None:
    index = read_index_csv(cfg.input, _sidecar(cfg.input))
    events = detect_events(index, threshold=cfg.threshold)
    Path(cfg.output).parent.mkdir(parents=True, exist_ok=True)
    write_events_csv(events, cfg.output)


def cmd_diagnose(cfg: RunConfig) -> None:
    index = read_index_csv(cfg.input, _sidecar(cfg.input))
    report = diagnose(index.prob, index.z, alpha=cfg.alpha, bins=cfg.hist_bins)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc.update({"method": index.method, "k": index.scale})
    write_json(doc, out / "diagnostics.json")
    write_histogram_csv(report, out / "pit_histogram.csv")
    write_qq_csv(report, out / "qq.csv")
    if cfg.plot:
        ok = ~(np.isnan(index.pi) | np.isnan(index.mu) | np.isnan(index.sigma))
        if index.method == "mbsi2" and index.scale > 1:
            # stored parameters describe the raw series, not the k-step average
            ok[:] = False
        lo = np.full(len(index), np.nan)
        hi = lo.copy()
        mean = lo.copy()
        if ok.any():
            lo[ok], hi[ok], mean[ok] = coverage_band(index.pi[ok], index.mu[ok], index.sigma[ok], 0.95)
        method, k = index.method, index.scale
        (out / "timeline.svg").write_text(timeline_svg(index.dates, index.ma, lo, hi, mean, method, k),
                                          encoding="utf-8")
        (out / "pit_histogram.svg").write_text(histogram_svg(report.pit_histogram, method, k), encoding="utf-8")
        (out / "qq.svg").write_text(qq_svg(report.qq_points, method, k), encoding="utf-8")
        events = detect_events(index, threshold=cfg.threshold)
        (out / "events.svg").write_text(events_svg(index.dates, index.z, events, cfg.threshold, method, k),
                                        encoding="utf-8")


COMMANDS = {"fit": cmd_fit, "index": cmd_index, "events": cmd_events, "diagnose": cmd_diagnose}


def _fail(code: int, kind: str, message: str) -> int:
    line = json.dumps({"error": kind, "exit_code": code, "message": " ".join(str(message).split())})
    print(line, file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _config_from_args(args)
        COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_DATA, "FileNotFound", f"{exc.filename}: no such file")
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    except (HydroIndexError, ValueError) as exc:
        return _fail(EXIT_DATA, type(exc).__name__, str(exc))
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
