"""Minimal static SVG charts for the diagnose command."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 800, 400
ML, MR, MT, MB = 60, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str, xlim, ylim, xlabel: str = "", ylabel: str = ""):
        self.x0, self.x1 = (float(v) for v in xlim)
        self.y0, self.y1 = (float(v) for v in ylim)
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
            f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>',
            f'<text x="14" y="{H / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>',
            f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="black"/>',
        ]
        for t in np.linspace(self.y0, self.y1, 5):
            y = self.py(t)
            self.parts.append(
                f'<text x="{ML - 5}" y="{_fmt(y + 4)}" text-anchor="end" font-family="sans-serif" '
                f'font-size="10">{t:.3g}</text>'
            )

    def px(self, x):
        return ML + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def py(self, y):
        return H - MB - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def xticks(self, positions, labels):
        for p, lab in zip(positions, labels):
            x = float(self.px(p))
            self.parts.append(
                f'<text x="{_fmt(x)}" y="{H - MB + 15}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="10">{escape(str(lab))}</text>'
            )

    def polyline(self, x, y, color="black", width=1.0):
        # nan breaks the line into segments
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ok = ~(np.isnan(x) | np.isnan(y))
        start = None
        for i in range(len(x) + 1):
            inside = i < len(x) and ok[i]
            if inside and start is None:
                start = i
            elif not inside and start is not None:
                pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.px(x[start:i]), self.py(y[start:i])))
                self.parts.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'
                )
                start = None

    def band(self, x, lo, hi, color="#9ecae1"):
        x, lo, hi = (np.asarray(v, dtype=float) for v in (x, lo, hi))
        ok = ~(np.isnan(lo) | np.isnan(hi) | np.isnan(x))
        if not ok.any():
            return
        xs, l, h = x[ok], lo[ok], hi[ok]
        top = [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.px(xs), self.py(h))]
        bot = [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(self.px(xs[::-1]), self.py(l[::-1]))]
        self.parts.append(f'<polygon points="{" ".join(top + bot)}" fill="{color}" stroke="none"/>')

    def rect(self, x0, x1, y0, y1, color, opacity=1.0):
        a, b = float(self.px(x0)), float(self.px(x1))
        c, d = float(self.py(y1)), float(self.py(y0))
        self.parts.append(
            f'<rect x="{_fmt(min(a, b))}" y="{_fmt(min(c, d))}" width="{_fmt(abs(b - a))}" '
            f'height="{_fmt(abs(d - c))}" fill="{color}" fill-opacity="{opacity}"/>'
        )

    def points(self, x, y, color="black", r=2.0):
        for a, b in zip(self.px(x), self.py(y)):
            self.parts.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="{r}" fill="{color}"/>')

    def hline(self, y, color="gray", dash="4,3"):
        yy = _fmt(float(self.py(y)))
        self.parts.append(
            f'<line x1="{ML}" y1="{yy}" x2="{W - MR}" y2="{yy}" stroke="{color}" stroke-dasharray="{dash}"/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _year_ticks(dates):
    years = dates.astype("datetime64[Y]")
    first = years[0].astype(int)
    last = years[-1].astype(int)
    step = max(1, (last - first) // 10 + 1)
    ticks = [np.datetime64(str(1970 + y), "D") for y in range(first, last + 1, step)]
    pos = [float((t - dates[0]).astype(int)) for t in ticks if t >= dates[0]]
    labels = [str(t.astype("datetime64[Y]")) for t in ticks if t >= dates[0]]
    return pos, labels


def timeline_svg(dates, ma, lo, hi, mean, method: str, k: int) -> str:
    """Moving average with the 95% coverage band and fitted mean."""
    x = (dates - dates[0]).astype(float)
    vals = np.concatenate([np.asarray(v, dtype=float) for v in (ma, lo, hi, mean)])
    vals = vals[~np.isnan(vals)]
    top = float(vals.max()) if vals.size else 1.0
    has_band = bool(np.any(~np.isnan(np.asarray(lo, dtype=float))))
    title = f"{method.upper()} k={k}: moving average" + (" and 95% coverage interval" if has_band else "")
    c = _Canvas(title,
                (x[0], x[-1]), (0.0, top * 1.05), "date", "precipitation (mm)")
    c.band(x, lo, hi)
    c.polyline(x, mean, color="#08519c", width=1.5)
    c.polyline(x, ma, color="black", width=0.8)
    c.xticks(*_year_ticks(dates))
    return c.render()


def histogram_svg(counts, method: str, k: int) -> str:
    counts = np.asarray(counts, dtype=float)
    bins = len(counts)
    c = _Canvas(f"{method.upper()} k={k}: PIT histogram", (0.0, 1.0), (0.0, max(counts.max(), 1.0) * 1.1),
                "probability", "count")
    for i, n in enumerate(counts):
        c.rect(i / bins, (i + 1) / bins, 0.0, n, "#6baed6")
    c.hline(counts.sum() / bins)
    c.xticks([0, 0.25, 0.5, 0.75, 1.0], ["0", "0.25", "0.5", "0.75", "1"])
    return c.render()


def qq_svg(qq, method: str, k: int) -> str:
    qq = np.asarray(qq, dtype=float)
    lim = float(np.max(np.abs(qq))) * 1.05 if qq.size else 3.0
    c = _Canvas(f"{method.upper()} k={k}: normal QQ", (-lim, lim), (-lim, lim),
                "theoretical quantile", "standardized value")
    c.polyline([-lim, lim], [-lim, lim], color="red")
    c.points(qq[:, 0], qq[:, 1], r=1.5)
    ticks = np.linspace(-lim, lim, 5)
    c.xticks(ticks, [f"{t:.2g}" for t in ticks])
    return c.render()


def events_svg(dates, z, events, threshold: float, method: str, k: int) -> str:
    x = (dates - dates[0]).astype(float)
    zz = np.asarray(z, dtype=float)
    lim = max(float(np.nanmax(np.abs(zz))) if np.any(~np.isnan(zz)) else 1.0, threshold) * 1.1
    c = _Canvas(f"{method.upper()} k={k}: extreme events (threshold ±{threshold:g})",
                (x[0], x[-1]), (-lim, lim), "date", "standardized value")
    for ev in events:
        color = "#de2d26" if ev.kind == "drought" else "#3182bd"
        c.rect(x[ev.start], x[ev.end] + (x[1] - x[0] if len(x) > 1 else 1.0), -lim, lim, color, 0.25)
    c.hline(threshold)
    c.hline(-threshold)
    c.hline(0.0, color="black", dash="1,0")
    c.polyline(x, zz, width=0.8)
    c.xticks(*_year_ticks(dates))
    return c.render()
