"""Minimal polyline/scatter SVG plots (CSV stays the canonical output)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np


class SvgPlot:
    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 640, height: int = 420, logx: bool = False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.margin = 58
        self.logx = logx
        self._series: list[tuple[str, np.ndarray, np.ndarray, str, str]] = []

    def add_line(self, x, y, color: str = "#1f6fb2", label: str = "") -> None:
        self._series.append(("line", *self._clean(x, y), color, label))

    def add_points(self, x, y, color: str = "#c23b22", label: str = "") -> None:
        self._series.append(("points", *self._clean(x, y), color, label))

    @staticmethod
    def _clean(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        return x[keep], y[keep]

    def render(self) -> str:
        w, h, m = self.width, self.height, self.margin
        xs = np.concatenate([s[1] for s in self._series]) if self._series else np.array([0.0, 1.0])
        ys = np.concatenate([s[2] for s in self._series]) if self._series else np.array([0.0, 1.0])
        if xs.size == 0:
            xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
        if self.logx:
            xs = np.log10(np.clip(xs, 1e-300, None))
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad_y = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad_y, y1 + pad_y

        def px(x):
            if self.logx:
                x = math.log10(max(x, 1e-300))
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def py(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            'fill="none" stroke="#333" stroke-width="1"/>',
        ]
        x_lo_label = f"1e{x0:.1f}" if self.logx else _num(x0)
        x_hi_label = f"1e{x1:.1f}" if self.logx else _num(x1)
        parts += [
            _text(m, h - m + 16, x_lo_label, anchor="middle"),
            _text(w - m, h - m + 16, x_hi_label, anchor="middle"),
            _text(m - 6, h - m, _num(y0 + pad_y), anchor="end"),
            _text(m - 6, m + 4, _num(y1 - pad_y), anchor="end"),
            _text(w / 2, h - m + 34, escape(self.xlabel), anchor="middle"),
            _text(14, h / 2, escape(self.ylabel), anchor="middle",
                  transform=f"rotate(-90 14 {h / 2})"),
            _text(w / 2, m - 14, escape(self.title), anchor="middle", size=14),
        ]
        legend_y = m + 14
        for kind, x, y, color, label in self._series:
            if x.size == 0:
                continue
            if kind == "line":
                pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
                parts.append(f'<polyline points="{pts}" fill="none" '
                             f'stroke="{color}" stroke-width="1.5"/>')
            else:
                for a, b in zip(x, y):
                    parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" '
                                 f'r="2.5" fill="{color}"/>')
            if label:
                parts.append(_text(w - m - 4, legend_y, escape(label),
                                   anchor="end", color=color))
                legend_y += 16
        parts.append("</svg>")
        return "\n".join(parts)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def _num(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.3e}"
    return f"{v:.4g}"


def _text(x, y, s: str, anchor: str = "start", color: str = "#222",
          size: int = 11, transform: str = "") -> str:
    tr = f' transform="{transform}"' if transform else ""
    return (f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" '
            f'fill="{color}" font-size="{size}" font-family="sans-serif"{tr}>'
            f"{s}</text>")
