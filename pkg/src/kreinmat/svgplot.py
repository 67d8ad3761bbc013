"""Minimal standalone SVG line and scatter plots.

Only what the CLI needs: panels with axes and ticks, polylines (solid or
dashed, NaN splits a line), and point markers.  Output is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
          "#17becf", "#7f7f7f"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    return f"{v:.3g}"


def nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + 0.5 * step, step)
    ticks = ticks[(ticks >= lo - 1e-12 * abs(step)) & (ticks <= hi + 1e-12 * abs(step))]
    return np.round(ticks / step) * step


@dataclass
class Line:
    x: np.ndarray
    y: np.ndarray
    color: str = COLORS[0]
    dashed: bool = False
    width: float = 1.5
    label: Optional[str] = None


@dataclass
class Points:
    x: np.ndarray
    y: np.ndarray
    marker: str = "circle"  # circle | cross | x | square
    color: str = COLORS[0]
    size: float = 3.0
    label: Optional[str] = None


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    lines: list = field(default_factory=list)
    points: list = field(default_factory=list)
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None
    hlines: list = field(default_factory=list)
    vlines: list = field(default_factory=list)

    def line(self, x, y, **kw):
        self.lines.append(Line(np.asarray(x, float), np.asarray(y, float), **kw))
        return self

    def scatter(self, x, y, **kw):
        self.points.append(Points(np.atleast_1d(np.asarray(x, float)),
                                  np.atleast_1d(np.asarray(y, float)), **kw))
        return self

    def _limits(self):
        xs = [l.x for l in self.lines] + [p.x for p in self.points]
        ys = [l.y for l in self.lines] + [p.y for p in self.points]
        out = []
        for lim, arrs in ((self.xlim, xs), (self.ylim, ys)):
            if lim is not None:
                out.append(tuple(float(v) for v in lim))
                continue
            vals = np.concatenate([a[np.isfinite(a)] for a in arrs]) if arrs else np.zeros(0)
            if vals.size == 0:
                out.append((0.0, 1.0))
                continue
            lo, hi = float(vals.min()), float(vals.max())
            pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo), 1.0) * 0.1
            out.append((lo - pad, hi + pad))
        return out

    def render(self, ox: float, oy: float, w: float, h: float) -> list:
        (x0, x1), (y0, y1) = self._limits()
        ml, mr, mt, mb = 60.0, 15.0, 25.0, 40.0
        pw, ph = w - ml - mr, h - mt - mb
        left, top = ox + ml, oy + mt

        def X(v):
            return left + (v - x0) / (x1 - x0) * pw

        def Y(v):
            return top + ph - (v - y0) / (y1 - y0) * ph

        clip = f"clip{int(ox)}_{int(oy)}"
        el = [f'<clipPath id="{clip}"><rect x="{_fmt(left)}" y="{_fmt(top)}" '
              f'width="{_fmt(pw)}" height="{_fmt(ph)}"/></clipPath>',
              f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(pw)}" '
              f'height="{_fmt(ph)}" fill="none" stroke="black"/>']
        for t in nice_ticks(x0, x1):
            el.append(f'<line x1="{_fmt(X(t))}" y1="{_fmt(top + ph)}" x2="{_fmt(X(t))}" '
                      f'y2="{_fmt(top + ph + 4)}" stroke="black"/>')
            el.append(f'<text x="{_fmt(X(t))}" y="{_fmt(top + ph + 16)}" font-size="10" '
                      f'text-anchor="middle">{_tick_label(t)}</text>')
        for t in nice_ticks(y0, y1):
            el.append(f'<line x1="{_fmt(left - 4)}" y1="{_fmt(Y(t))}" x2="{_fmt(left)}" '
                      f'y2="{_fmt(Y(t))}" stroke="black"/>')
            el.append(f'<text x="{_fmt(left - 6)}" y="{_fmt(Y(t) + 3)}" font-size="10" '
                      f'text-anchor="end">{_tick_label(t)}</text>')
        if self.title:
            el.append(f'<text x="{_fmt(left + pw / 2)}" y="{_fmt(oy + 16)}" font-size="12" '
                      f'text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            el.append(f'<text x="{_fmt(left + pw / 2)}" y="{_fmt(top + ph + 32)}" '
                      f'font-size="11" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cx, cy = ox + 14, top + ph / 2
            el.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="11" text-anchor="middle" '
                      f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{escape(self.ylabel)}</text>')
        for v in self.hlines:
            if y0 <= v <= y1:
                el.append(f'<line class="ref" x1="{_fmt(left)}" y1="{_fmt(Y(v))}" '
                          f'x2="{_fmt(left + pw)}" y2="{_fmt(Y(v))}" stroke="#999"/>')
        for v in self.vlines:
            if x0 <= v <= x1:
                el.append(f'<line class="ref" x1="{_fmt(X(v))}" y1="{_fmt(top)}" '
                          f'x2="{_fmt(X(v))}" y2="{_fmt(top + ph)}" stroke="#999"/>')
        for ln in self.lines:
            dash = ' stroke-dasharray="5,3"' if ln.dashed else ""
            ok = np.isfinite(ln.x) & np.isfinite(ln.y)
            for run in _runs(ok):
                if len(run) < 2:
                    continue
                pts = " ".join(f"{_fmt(X(ln.x[k]))},{_fmt(Y(ln.y[k]))}" for k in run)
                el.append(f'<polyline points="{pts}" fill="none" stroke="{ln.color}" '
                          f'stroke-width="{ln.width}"{dash} clip-path="url(#{clip})"/>')
        for p in self.points:
            for a, b in zip(p.x, p.y):
                if not (np.isfinite(a) and np.isfinite(b)):
                    continue
                el.append(_marker(X(a), Y(b), p, clip))
        el.extend(self._legend(left + pw - 5, top + 5))
        return el

    def _legend(self, right, top):
        items = [(l.label, l.color, "line", l.dashed) for l in self.lines if l.label]
        items += [(p.label, p.color, p, False) for p in self.points if p.label]
        el = []
        for k, (label, color, kind, dashed) in enumerate(items):
            y = top + 12 * k + 6
            if kind == "line":
                dash = ' stroke-dasharray="5,3"' if dashed else ""
                el.append(f'<line class="legend" x1="{_fmt(right - 20)}" y1="{_fmt(y)}" '
                          f'x2="{_fmt(right)}" y2="{_fmt(y)}" stroke="{color}"{dash}/>')
            else:
                el.append(_marker(right - 10, y, kind, None).replace('class="marker', 'class="legend'))
            el.append(f'<text x="{_fmt(right - 24)}" y="{_fmt(y + 3)}" font-size="9" '
                      f'text-anchor="end">{escape(label)}</text>')
        return el


def _runs(mask):
    out, cur = [], []
    for k, good in enumerate(mask):
        if good:
            cur.append(k)
        elif cur:
            out.append(cur)
            cur = []
    if cur:
        out.append(cur)
    return out


def _marker(x, y, p: Points, clip) -> str:
    s = p.size
    cp = f' clip-path="url(#{clip})"' if clip else ""
    if p.marker == "cross":
        return (f'<path class="marker-cross" d="M{_fmt(x - s)},{_fmt(y)}H{_fmt(x + s)}'
                f'M{_fmt(x)},{_fmt(y - s)}V{_fmt(y + s)}" stroke="{p.color}" stroke-width="2"{cp}/>')
    if p.marker == "x":
        return (f'<path class="marker-x" d="M{_fmt(x - s)},{_fmt(y - s)}L{_fmt(x + s)},{_fmt(y + s)}'
                f'M{_fmt(x - s)},{_fmt(y + s)}L{_fmt(x + s)},{_fmt(y - s)}" '
                f'stroke="{p.color}" stroke-width="1.5"{cp}/>')
    if p.marker == "square":
        return (f'<rect class="marker-square" x="{_fmt(x - s)}" y="{_fmt(y - s)}" '
                f'width="{_fmt(2 * s)}" height="{_fmt(2 * s)}" fill="none" stroke="{p.color}"{cp}/>')
    return f'<circle class="marker-circle" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(s)}" fill="{p.color}"{cp}/>'


def render_svg(panels: Sequence[Panel], ncols: int = 1, panel_size=(480, 320)) -> str:
    ncols = max(1, min(ncols, len(panels)))
    nrows = -(-len(panels) // ncols)
    w, h = panel_size
    W, H = w * ncols, h * nrows
    body = []
    for k, p in enumerate(panels):
        r, c = divmod(k, ncols)
        body.extend(p.render(c * w, r * h, w, h))
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{W}" height="{H}" fill="white"/>', *body, "</svg>"]) + "\n"


def save_svg(path, panels: Sequence[Panel], ncols: int = 1, panel_size=(480, 320)):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(panels, ncols, panel_size))
