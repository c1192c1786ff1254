"""Minimal SVG figure builder.

Pure string assembly with fixed number formatting, so identical inputs
always produce byte-identical files.  Every figure is an 800x600 viewBox;
panels are <g class="panel"> groups carrying their data-space axis ranges
as data-* attributes, which lets shared-axis constraints be checked by
parsing the XML.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH = 800
HEIGHT = 600

FG = "#333333"
TREATED_COLOR = "#c0392b"
CONTROL_COLOR = "#2e6da4"


def _px(x: float) -> str:
    return f"{x:.2f}"


def _label(x: float) -> str:
    return format(x, ".4g")


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    power = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * power
    for mult in (1.0, 2.0, 2.5, 5.0):
        if raw <= mult * power:
            step = mult * power
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


class Figure:
    """One SVG document assembled as a list of element strings."""

    def __init__(self, title: str):
        self.parts: list[str] = []
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
            f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">'
        )
        self.parts.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
        self.text(WIDTH / 2, 24, title, size=16, anchor="middle", color="#000000")

    def add(self, element: str) -> None:
        self.parts.append(element)

    def line(self, x1, y1, x2, y2, color=FG, width=1.0, cls=None, dash=None) -> None:
        attrs = f'x1="{_px(x1)}" y1="{_px(y1)}" x2="{_px(x2)}" y2="{_px(y2)}" stroke="{color}" stroke-width="{width:g}"'
        if cls:
            attrs += f' class="{cls}"'
        if dash:
            attrs += f' stroke-dasharray="{dash}"'
        self.parts.append(f"<line {attrs}/>")

    def rect(self, x, y, w, h, fill, cls=None, opacity=None, stroke=None) -> None:
        attrs = f'x="{_px(x)}" y="{_px(y)}" width="{_px(w)}" height="{_px(h)}" fill="{fill}"'
        if opacity is not None:
            attrs += f' fill-opacity="{opacity:g}"'
        if stroke:
            attrs += f' stroke="{stroke}" stroke-width="0.5"'
        if cls:
            attrs += f' class="{cls}"'
        self.parts.append(f"<rect {attrs}/>")

    def circle(self, cx, cy, r, fill, cls=None, opacity=None) -> None:
        attrs = f'cx="{_px(cx)}" cy="{_px(cy)}" r="{_px(r)}" fill="{fill}"'
        if opacity is not None:
            attrs += f' fill-opacity="{opacity:g}"'
        if cls:
            attrs += f' class="{cls}"'
        self.parts.append(f"<circle {attrs}/>")

    def polyline(self, points, color, width=1.5, cls=None) -> None:
        coords = " ".join(f"{_px(x)},{_px(y)}" for x, y in points)
        attrs = f'points="{coords}" fill="none" stroke="{color}" stroke-width="{width:g}"'
        if cls:
            attrs += f' class="{cls}"'
        self.parts.append(f"<polyline {attrs}/>")

    def text(self, x, y, s, size=11, anchor="start", color=FG, cls=None) -> None:
        attrs = f'x="{_px(x)}" y="{_px(y)}" font-size="{size}" text-anchor="{anchor}" fill="{color}"'
        if cls:
            attrs += f' class="{cls}"'
        self.parts.append(f"<text {attrs}>{escape(s)}</text>")

    def message(self, s: str) -> None:
        self.text(WIDTH / 2, HEIGHT / 2, s, size=14, anchor="middle", cls="message")

    def tostring(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.tostring())


class Panel:
    """A rectangular data region inside a figure.

    Opens a <g class="panel"> carrying the axis ranges as data attributes;
    call :meth:`close` after drawing all panel content.
    """

    def __init__(self, fig: Figure, x0, y0, w, h, xlim, ylim, title=None):
        self.fig = fig
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xmin, self.xmax = float(xlim[0]), float(xlim[1])
        self.ymin, self.ymax = float(ylim[0]), float(ylim[1])
        if self.xmax <= self.xmin:
            self.xmax = self.xmin + 1.0
        if self.ymax <= self.ymin:
            self.ymax = self.ymin + 1.0
        fig.add(
            '<g class="panel" '
            f'data-xmin="{format(self.xmin, ".12g")}" data-xmax="{format(self.xmax, ".12g")}" '
            f'data-ymin="{format(self.ymin, ".12g")}" data-ymax="{format(self.ymax, ".12g")}">'
        )
        fig.rect(x0, y0, w, h, fill="none", stroke=FG)
        if title:
            fig.text(x0 + w / 2, y0 - 6, title, size=12, anchor="middle")

    def px(self, x: float) -> float:
        return self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.w

    def py(self, y: float) -> float:
        return self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h

    def x_ticks(self, labels=True) -> None:
        for t in nice_ticks(self.xmin, self.xmax):
            if t < self.xmin - 1e-12 or t > self.xmax + 1e-12:
                continue
            x = self.px(t)
            self.fig.line(x, self.y0 + self.h, x, self.y0 + self.h + 4)
            if labels:
                self.fig.text(x, self.y0 + self.h + 16, _label(t), size=10, anchor="middle")

    def y_ticks(self, labels=True) -> None:
        for t in nice_ticks(self.ymin, self.ymax):
            if t < self.ymin - 1e-12 or t > self.ymax + 1e-12:
                continue
            y = self.py(t)
            self.fig.line(self.x0 - 4, y, self.x0, y)
            if labels:
                self.fig.text(self.x0 - 7, y + 3, _label(t), size=10, anchor="end")

    def close(self) -> None:
        self.fig.add("</g>")
