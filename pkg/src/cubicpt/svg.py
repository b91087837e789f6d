"""Hand-emitted SVG line plots: polylines, markers, axes with 1-2-5 ticks.

Plots are diagnostics, not the product, so this stays dependency-free and
the output is a single self-contained XML document.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class SvgPlot:
    def __init__(self, width=760, height=520, title="", xlabel="", ylabel=""):
        self.width = width
        self.height = height
        self.margin = (64, 20, 46, 54)  # left, right, top, bottom
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.elements = []
        self._xlim = None
        self._ylim = None
        self._data_bounds = [math.inf, -math.inf, math.inf, -math.inf]

    def set_limits(self, xlo, xhi, ylo, yhi):
        self._xlim = (xlo, xhi)
        self._ylim = (ylo, yhi)

    def _track(self, xs, ys):
        b = self._data_bounds
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                b[0] = min(b[0], x)
                b[1] = max(b[1], x)
                b[2] = min(b[2], y)
                b[3] = max(b[3], y)

    def polyline(self, xs, ys, stroke="#1f4e9c", width=1.5, dash=None,
                 opacity=1.0):
        xs = [float(x) for x in xs]
        ys = [float(y) for y in ys]
        self._track(xs, ys)
        self.elements.append(("polyline", xs, ys, stroke, width, dash, opacity))

    def points(self, xs, ys, fill="#b03030", r=3.0):
        xs = [float(x) for x in xs]
        ys = [float(y) for y in ys]
        self._track(xs, ys)
        self.elements.append(("points", xs, ys, fill, r))

    def label(self, x, y, text, size=12, fill="#202020"):
        self.elements.append(("label", float(x), float(y), str(text), size, fill))

    def _limits(self):
        b = self._data_bounds
        xlo, xhi = self._xlim if self._xlim else (b[0], b[1])
        ylo, yhi = self._ylim if self._ylim else (b[2], b[3])
        if not math.isfinite(xlo) or xhi <= xlo:
            xlo, xhi = 0.0, 1.0
        if not math.isfinite(ylo) or yhi <= ylo:
            ylo, yhi = 0.0, 1.0
        padx = 0.04 * (xhi - xlo)
        pady = 0.06 * (yhi - ylo)
        if self._xlim is None:
            xlo, xhi = xlo - padx, xhi + padx
        if self._ylim is None:
            ylo, yhi = ylo - pady, yhi + pady
        return xlo, xhi, ylo, yhi

    def render(self) -> str:
        ml, mr, mt, mb = self.margin
        W, H = self.width, self.height
        xlo, xhi, ylo, yhi = self._limits()
        ax_w = W - ml - mr
        ax_h = H - mt - mb

        def px(x):
            return ml + (x - xlo) / (xhi - xlo) * ax_w

        def py(y):
            return mt + (yhi - y) / (yhi - ylo) * ax_h

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        ]
        # grid + ticks
        for t in _nice_ticks(xlo, xhi):
            X = px(t)
            out.append(f'<line x1="{X:.2f}" y1="{mt}" x2="{X:.2f}" '
                       f'y2="{mt + ax_h}" stroke="#e0e0e0" stroke-width="0.8"/>')
            out.append(f'<text x="{X:.2f}" y="{mt + ax_h + 18}" font-size="11" '
                       f'text-anchor="middle" fill="#404040">{_fmt(t)}</text>')
        for t in _nice_ticks(ylo, yhi):
            Y = py(t)
            out.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + ax_w}" '
                       f'y2="{Y:.2f}" stroke="#e0e0e0" stroke-width="0.8"/>')
            out.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" font-size="11" '
                       f'text-anchor="end" fill="#404040">{_fmt(t)}</text>')
        out.append(f'<rect x="{ml}" y="{mt}" width="{ax_w}" height="{ax_h}" '
                   f'fill="none" stroke="#303030" stroke-width="1.2"/>')
        for el in self.elements:
            if el[0] == "polyline":
                _, xs, ys, stroke, width, dash, opacity = el
                pts = " ".join(f"{px(x):.2f},{py(y):.2f}"
                               for x, y in zip(xs, ys)
                               if math.isfinite(x) and math.isfinite(y))
                dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline points="{pts}" fill="none" '
                           f'stroke="{stroke}" stroke-width="{width}"'
                           f'{dash_attr} opacity="{opacity}"/>')
            elif el[0] == "points":
                _, xs, ys, fill, r = el
                for x, y in zip(xs, ys):
                    if math.isfinite(x) and math.isfinite(y):
                        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" '
                                   f'r="{r}" fill="{fill}"/>')
            elif el[0] == "label":
                _, x, y, text, size, fill = el
                out.append(f'<text x="{px(x):.2f}" y="{py(y):.2f}" '
                           f'font-size="{size}" fill="{fill}">'
                           f'{escape(text)}</text>')
        if self.title:
            out.append(f'<text x="{W / 2}" y="{mt - 6}" font-size="14" '
                       f'text-anchor="middle" fill="#101010">'
                       f'{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{ml + ax_w / 2}" y="{H - 10}" font-size="12" '
                       f'text-anchor="middle" fill="#202020">'
                       f'{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(f'<text x="16" y="{mt + ax_h / 2}" font-size="12" '
                       f'text-anchor="middle" fill="#202020" '
                       f'transform="rotate(-90 16 {mt + ax_h / 2})">'
                       f'{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out)

    def write(self, path):
        with open(path, "w") as f:
            f.write(self.render())
