"""Minimal self-contained SVG line charts with byte-stable output."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)

_MARGIN_LEFT = 72.0
_MARGIN_RIGHT = 150.0
_MARGIN_TOP = 40.0
_MARGIN_BOTTOM = 52.0


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    if value == 0:
        return "0"
    return f"{value:.4g}"


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    color: str


@dataclass
class LineChart:
    """Polyline chart; ``log_y`` plots log10(y) and drops non-positive points."""

    title: str
    x_label: str
    y_label: str
    log_y: bool = False
    width: int = 720
    height: int = 420
    series: list[Series] = field(default_factory=list)

    def add(self, label: str, x: Sequence[float], y: Sequence[float]) -> None:
        if len(x) != len(y):
            raise ValueError(f"series {label!r}: x and y lengths differ")
        color = PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(
            Series(label, tuple(float(v) for v in x), tuple(float(v) for v in y), color)
        )

    def _transform(self, y: float) -> float | None:
        if not math.isfinite(y):
            return None
        if self.log_y:
            return math.log10(y) if y > 0 else None
        return y

    def _ranges(self) -> tuple[float, float, float, float]:
        xs = [x for s in self.series for x in s.x if math.isfinite(x)]
        ys = [
            t
            for s in self.series
            for t in (self._transform(y) for y in s.y)
            if t is not None
        ]
        x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
        y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
        if x_hi == x_lo:
            x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
        if self.log_y:
            y_lo, y_hi = math.floor(y_lo), math.ceil(y_hi)
            if y_hi == y_lo:
                y_hi = y_lo + 1
        else:
            pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 0.5
            y_lo, y_hi = y_lo - pad, y_hi + pad
        return x_lo, x_hi, y_lo, y_hi

    def _y_ticks(self, y_lo: float, y_hi: float) -> list[tuple[float, str]]:
        if self.log_y:
            decades = range(int(y_lo), int(y_hi) + 1)
            step = max(1, math.ceil(len(decades) / 8))
            return [(float(d), f"1e{d}") for d in decades[::step]]
        ticks = [y_lo + (y_hi - y_lo) * i / 5 for i in range(6)]
        return [(t, _tick_label(t)) for t in ticks]

    def render(self) -> str:
        x_lo, x_hi, y_lo, y_hi = self._ranges()
        plot_w = self.width - _MARGIN_LEFT - _MARGIN_RIGHT
        plot_h = self.height - _MARGIN_TOP - _MARGIN_BOTTOM

        def px(x: float) -> float:
            return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

        def py(t: float) -> float:
            return _MARGIN_TOP + (y_hi - t) / (y_hi - y_lo) * plot_h

        bottom = _MARGIN_TOP + plot_h
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{_fmt(self.width / 2)}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{escape(self.title)}</text>',
            f'<rect x="{_fmt(_MARGIN_LEFT)}" y="{_fmt(_MARGIN_TOP)}" width="{_fmt(plot_w)}" '
            f'height="{_fmt(plot_h)}" fill="none" stroke="black"/>',
        ]
        for i in range(6):
            x = x_lo + (x_hi - x_lo) * i / 5
            out.append(
                f'<line x1="{_fmt(px(x))}" y1="{_fmt(bottom)}" x2="{_fmt(px(x))}" '
                f'y2="{_fmt(bottom + 5)}" stroke="black"/>'
            )
            out.append(
                f'<text x="{_fmt(px(x))}" y="{_fmt(bottom + 18)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{escape(_tick_label(x))}</text>'
            )
        for t, label in self._y_ticks(y_lo, y_hi):
            out.append(
                f'<line x1="{_fmt(_MARGIN_LEFT - 5)}" y1="{_fmt(py(t))}" '
                f'x2="{_fmt(_MARGIN_LEFT)}" y2="{_fmt(py(t))}" stroke="black"/>'
            )
            out.append(
                f'<text x="{_fmt(_MARGIN_LEFT - 8)}" y="{_fmt(py(t) + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{escape(label)}</text>'
            )
        out.append(
            f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="{_fmt(self.height - 12)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="13">'
            f"{escape(self.x_label)}</text>"
        )
        out.append(
            f'<text x="18" y="{_fmt(_MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {_fmt(_MARGIN_TOP + plot_h / 2)})">'
            f"{escape(self.y_label)}</text>"
        )

        for index, s in enumerate(self.series):
            for segment in self._segments(s):
                points = " ".join(f"{_fmt(px(x))},{_fmt(py(t))}" for x, t in segment)
                out.append(
                    f'<polyline fill="none" stroke="{s.color}" stroke-width="1.5" '
                    f'points="{points}"/>'
                )
            legend_y = _MARGIN_TOP + 14 + 18 * index
            legend_x = _MARGIN_LEFT + plot_w + 12
            out.append(
                f'<line x1="{_fmt(legend_x)}" y1="{_fmt(legend_y - 4)}" '
                f'x2="{_fmt(legend_x + 20)}" y2="{_fmt(legend_y - 4)}" '
                f'stroke="{s.color}" stroke-width="2"/>'
            )
            out.append(
                f'<text x="{_fmt(legend_x + 26)}" y="{_fmt(legend_y)}" '
                f'font-family="sans-serif" font-size="12">{escape(s.label)}</text>'
            )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def _segments(self, series: Series) -> list[list[tuple[float, float]]]:
        """Runs of plottable points; a NaN or non-positive log value breaks the line."""
        segments: list[list[tuple[float, float]]] = [[]]
        for x, y in zip(series.x, series.y):
            t = self._transform(y)
            if t is None or not math.isfinite(x):
                if segments[-1]:
                    segments.append([])
                continue
            segments[-1].append((x, t))
        return [s for s in segments if s]

    def write(self, path: str | Path) -> Path:
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(self.render(), encoding="utf-8", newline="\n")
        return output_path
