"""Minimal SVG emitter for line charts, bar charts and heatmaps.

Output is deterministic: coordinates are printed with fixed precision
and elements appear in call order.  A JSON metadata block can be
embedded so every plot carries the configuration that produced it.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

__all__ = ["Figure", "line_chart", "bar_chart", "heatmap"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    out = []
    k = 0
    while first + k * step <= hi + 1e-12 * step:
        out.append(first + k * step)
        k += 1
    return out


def _label(x: float) -> str:
    if x == 0:
        return "0"
    if abs(x) >= 1e4 or abs(x) < 1e-3:
        return f"{x:.1e}"
    return f"{x:.4g}"


class Figure:
    """Canvas with one plotting area and linear (or log-y) axes."""

    def __init__(self, width: int = 640, height: int = 400, title: str = "", xlabel: str = "", ylabel: str = ""):
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = 70, 20, 40, 50
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.items: list[str] = []
        self.legend: list[tuple[str, str]] = []
        self.metadata: str | None = None
        self.xlim = (0.0, 1.0)
        self.ylim = (0.0, 1.0)

    # -- coordinates -------------------------------------------------------------

    def set_limits(self, xs: Sequence[float], ys: Sequence[float], pad: float = 0.05) -> None:
        xs = [x for x in xs if math.isfinite(x)]
        ys = [y for y in ys if math.isfinite(y)]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        dy = (y1 - y0) * pad
        self.xlim = (x0, x1)
        self.ylim = (y0 - dy, y1 + dy)

    def px(self, x: float) -> float:
        x0, x1 = self.xlim
        return self.left + (x - x0) / (x1 - x0) * (self.width - self.left - self.right)

    def py(self, y: float) -> float:
        y0, y1 = self.ylim
        return self.height - self.bottom - (y - y0) / (y1 - y0) * (self.height - self.top - self.bottom)

    # -- primitives ----------------------------------------------------------------

    def polyline(self, xs: Sequence[float], ys: Sequence[float], color: str, label: str | None = None, dash: bool = False) -> None:
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys) if math.isfinite(y))
        style = ' stroke-dasharray="6,4"' if dash else ""
        self.items.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{style} points="{pts}"/>')
        if label:
            self.legend.append((label, color))

    def hline(self, y: float, color: str = "#888888", label: str | None = None) -> None:
        x0, x1 = self.xlim
        self.polyline([x0, x1], [y, y], color, label, dash=True)

    def rect(self, x: float, y: float, w: float, h: float, color: str) -> None:
        self.items.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{color}"/>')

    def text(self, x: float, y: float, s: str, size: int = 12, anchor: str = "middle", rotate: float | None = None) -> None:
        rot = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.items.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}"{rot}>{escape(s)}</text>'
        )

    # -- rendering ---------------------------------------------------------------------

    def _axes(self) -> list[str]:
        out = []
        x_a, x_b = self.left, self.width - self.right
        y_a, y_b = self.height - self.bottom, self.top
        out.append(f'<rect x="{x_a}" y="{y_b}" width="{x_b - x_a}" height="{y_a - y_b}" fill="none" stroke="#000000"/>')
        for t in _ticks(*self.xlim):
            x = self.px(t)
            out.append(f'<line x1="{_f(x)}" y1="{y_a}" x2="{_f(x)}" y2="{y_a + 5}" stroke="#000000"/>')
            out.append(f'<text x="{_f(x)}" y="{y_a + 18}" font-size="11" font-family="sans-serif" text-anchor="middle">{_label(t)}</text>')
        for t in _ticks(*self.ylim):
            y = self.py(t)
            out.append(f'<line x1="{x_a - 5}" y1="{_f(y)}" x2="{x_a}" y2="{_f(y)}" stroke="#000000"/>')
            out.append(f'<text x="{x_a - 8}" y="{_f(y + 4)}" font-size="11" font-family="sans-serif" text-anchor="end">{_label(t)}</text>')
        return out

    def render(self, axes: bool = True) -> str:
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        ]
        if self.metadata is not None:
            parts.append(f"<metadata>{escape(self.metadata)}</metadata>")
        parts.append(f'<rect width="{self.width}" height="{self.height}" fill="#ffffff"/>')
        parts.extend(self.items)
        if axes:
            parts.extend(self._axes())
        if self.title:
            parts.append(f'<text x="{self.width / 2:.2f}" y="22" font-size="14" font-family="sans-serif" text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            parts.append(f'<text x="{self.width / 2:.2f}" y="{self.height - 10}" font-size="12" font-family="sans-serif" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            y = self.height / 2
            parts.append(f'<text x="16" y="{y:.2f}" font-size="12" font-family="sans-serif" text-anchor="middle" transform="rotate(-90 16 {y:.2f})">{escape(self.ylabel)}</text>')
        for i, (label, color) in enumerate(self.legend):
            y = self.top + 14 + 16 * i
            x = self.width - self.right - 150
            parts.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 20}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{x + 26}" y="{y}" font-size="11" font-family="sans-serif">{escape(label)}</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def line_chart(series: dict[str, tuple[Sequence[float], Sequence[float]]], *, title: str = "", xlabel: str = "", ylabel: str = "",
               hlines: Sequence[float] = (), metadata: str | None = None) -> str:
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel)
    fig.metadata = metadata
    xs = [x for s in series.values() for x in s[0]]
    ys = [y for s in series.values() for y in s[1]] + list(hlines)
    fig.set_limits(xs, ys)
    for i, (name, (x, y)) in enumerate(series.items()):
        fig.polyline(x, y, PALETTE[i % len(PALETTE)], name)
    for h in hlines:
        fig.hline(h)
    return fig.render()


def bar_chart(values: Sequence[float], *, labels: Sequence[str] | None = None, title: str = "", xlabel: str = "", ylabel: str = "",
              metadata: str | None = None) -> str:
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel)
    fig.metadata = metadata
    n = len(values)
    fig.xlim = (-0.5, n - 0.5)
    top = max(values) if values else 1.0
    fig.ylim = (0.0, top * 1.05 if top > 0 else 1.0)
    for i, v in enumerate(values):
        x0, x1 = fig.px(i - 0.4), fig.px(i + 0.4)
        y0 = fig.py(v)
        fig.rect(x0, y0, x1 - x0, fig.py(0.0) - y0, PALETTE[0])
    return fig.render()


def _color(t: float) -> str:
    """Blue-white-red ramp for t in [0, 1]."""
    t = min(1.0, max(0.0, t))
    if t < 0.5:
        s = t / 0.5
        r, g, b = int(59 + s * 196), int(76 + s * 179), 255 - int(s * 0)
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 255, int(255 - s * 200), int(255 - s * 210)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(values: Sequence[Sequence[float]], *, x_range: tuple[float, float], y_range: tuple[float, float], title: str = "",
            xlabel: str = "", ylabel: str = "", metadata: str | None = None) -> str:
    """Cells of a rectangular grid coloured by value; NaN cells are left blank."""
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel)
    fig.metadata = metadata
    fig.xlim, fig.ylim = tuple(map(float, x_range)), tuple(map(float, y_range))
    flat = [v for row in values for v in row if math.isfinite(v)]
    lo, hi = (min(flat), max(flat)) if flat else (0.0, 1.0)
    span = hi - lo or 1.0
    nx, ny = len(values), len(values[0])
    dx = (x_range[1] - x_range[0]) / nx
    dy = (y_range[1] - y_range[0]) / ny
    for i, row in enumerate(values):
        for k, v in enumerate(row):
            if not math.isfinite(v):
                continue
            x0, x1 = fig.px(x_range[0] + i * dx), fig.px(x_range[0] + (i + 1) * dx)
            y1, y0 = fig.py(y_range[0] + k * dy), fig.py(y_range[0] + (k + 1) * dy)
            fig.rect(x0, y0, x1 - x0 + 0.3, y1 - y0 + 0.3, _color((v - lo) / span))
    fig.text(fig.width - fig.right, fig.top - 8, f"min {_label(lo)}  max {_label(hi)}", size=11, anchor="end")
    return fig.render()
