"""Static SVG figures rendered without any plotting dependency.

Every coordinate is formatted with a fixed precision, so the same report
payload always produces the same bytes. Figures are built from the report
dictionaries written by the command line interface, not from live result
objects; ``render_figures`` can therefore regenerate plots from a stored
report file long after the run that produced it.

Supported report kinds: calibration runs (p-value histogram plus an ECDF
difference panel with its simultaneous band, one figure per target),
simulation tests and predictive checks (null or replication histogram with
the observed value marked), and prior pushforward checks.
"""

from __future__ import annotations

import re
import warnings

__all__ = ["render_figures", "renderable_kinds"]

_PANEL_W = 360.0
_PANEL_H = 220.0
_MARGIN = 40.0
_BAR_FILL = "#4878a8"
_BAND_FILL = "#c8c8c8"
_LINE = "#202020"
_ACCENT = "#c03028"


def _fmt(v: float) -> str:
    return format(float(v), ".4f")


class _Canvas:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def rect(self, x, y, w, h, fill, stroke="none"):
        self._parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke=_LINE, width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"{d}/>'
        )

    def poly(self, points, fill="none", stroke=_LINE, width=1.0, closed=False):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        tag = "polygon" if closed else "polyline"
        self._parts.append(
            f'<{tag} points="{pts}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def text(self, x, y, s, size=11, anchor="start"):
        self._parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="monospace" '
            f'font-size="{size}" text-anchor="{anchor}">{_escape(s)}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}" '
            f'height="{_fmt(self.height)}" viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">'
        )
        body = "\n".join(self._parts)
        return f"{head}\n{body}\n</svg>\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Panel:
    """Maps data coordinates into one panel's pixel box."""

    def __init__(self, canvas, x0, y0, xlim, ylim):
        self.c = canvas
        self.px = x0 + _MARGIN
        self.py = y0 + _MARGIN * 0.6
        self.pw = _PANEL_W - _MARGIN * 1.4
        self.ph = _PANEL_H - _MARGIN * 1.4
        self.xlim = xlim
        self.ylim = ylim

    def x(self, v):
        lo, hi = self.xlim
        return self.px + (v - lo) / (hi - lo) * self.pw

    def y(self, v):
        lo, hi = self.ylim
        return self.py + self.ph - (v - lo) / (hi - lo) * self.ph

    def frame(self, title):
        self.c.rect(self.px, self.py, self.pw, self.ph, "none", stroke=_LINE)
        self.c.text(self.px, self.py - 8, title, size=12)
        for lim, anchor in ((self.xlim[0], "start"), (self.xlim[1], "end")):
            self.c.text(self.x(lim), self.py + self.ph + 14, format(lim, ".4g"), size=9,
                        anchor=anchor)

    def bars(self, edges, counts):
        top = max(max(counts), 1)
        self.ylim = (0.0, top * 1.05)
        for i, n in enumerate(counts):
            if n <= 0:
                continue
            x0, x1 = self.x(edges[i]), self.x(edges[i + 1])
            y1 = self.y(n)
            self.c.rect(x0, y1, x1 - x0, self.py + self.ph - y1, _BAR_FILL,
                        stroke="#ffffff")

    def vline(self, v, stroke=_ACCENT, dash=None):
        self.c.line(self.x(v), self.py, self.x(v), self.py + self.ph, stroke=stroke,
                    width=1.5, dash=dash)

    def hline(self, v, stroke=_LINE, dash="4,3"):
        self.c.line(self.px, self.y(v), self.px + self.pw, self.y(v), stroke=stroke,
                    dash=dash)


def _hist_panel(canvas, x0, y0, title, hist, observed=None, expected=None):
    edges = hist["edges"]
    counts = hist["counts"]
    panel = _Panel(canvas, x0, y0, (edges[0], edges[-1]), (0.0, 1.0))
    panel.bars(edges, counts)
    if expected is not None:
        panel.hline(expected)
    if observed is not None and edges[0] <= observed <= edges[-1]:
        panel.vline(observed)
    panel.frame(title)


def _band_panel(canvas, x0, y0, title, target):
    # payloads arrive as arrays in-process and as lists after a JSON round
    # trip; normalize so both render the same bytes
    band = target["band"]
    grid = [float(v) for v in band["grid"]]
    lower = [float(v) for v in band["lower"]]
    upper = [float(v) for v in band["upper"]]
    diff = [float(v) for v in target["ecdf_diff"]]
    span = max(max(abs(v) for v in lower + upper + diff), 1e-9) * 1.1
    panel = _Panel(canvas, x0, y0, (0.0, 1.0), (-span, span))
    poly = list(zip(grid, upper)) + list(zip(grid, lower))[::-1]
    panel.c.poly([(panel.x(g), panel.y(v)) for g, v in poly], fill=_BAND_FILL,
                 stroke="none", closed=True)
    panel.hline(0.0)
    panel.c.poly([(panel.x(g), panel.y(v)) for g, v in zip(grid, diff)],
                 stroke=_ACCENT, width=1.5)
    panel.frame(title)


def _calibration_figures(payload):
    out = {}
    s = payload["s"]
    for name, target in payload["targets"].items():
        if not len(target.get("pvalues", [])):
            warnings.warn(f"target {name!r} has no p-values; figure skipped")
            continue
        canvas = _Canvas(_PANEL_W, _PANEL_H * 2)
        hist = {
            "edges": [i / target["bins"] for i in range(target["bins"] + 1)],
            "counts": target["histogram"],
        }
        _hist_panel(canvas, 0, 0, f"p values: {name}", hist,
                    expected=s / target["bins"])
        _band_panel(canvas, 0, _PANEL_H, "ECDF difference", target)
        out[f"{payload['kind']}_{_slug(name)}.svg"] = canvas.render()
    return out


def _test_figure(payload):
    canvas = _Canvas(_PANEL_W, _PANEL_H)
    title = f"null: {payload['statistic']} (p={format(payload['pvalue'], '.4g')})"
    _hist_panel(canvas, 0, 0, title, payload["null_histogram"],
                observed=payload["observed"])
    return {"test_null.svg": canvas.render()}


def _predictive_figure(payload):
    canvas = _Canvas(_PANEL_W, _PANEL_H)
    obs = payload.get("observed_stat")
    ppp = payload.get("ppp")
    title = f"replicated: {payload['statistic']}"
    if ppp is not None:
        title += f" (ppp={format(ppp, '.4g')})"
    _hist_panel(canvas, 0, 0, title, payload["replication_histogram"], observed=obs)
    return {"predictive.svg": canvas.render()}


def _pushforward_figure(payload):
    canvas = _Canvas(_PANEL_W, _PANEL_H)
    frac = payload["fraction_in_region"]
    _hist_panel(canvas, 0, 0,
                f"prior pushforward (in region: {format(frac, '.4g')})",
                payload["histogram"])
    lo, hi = payload["region"]
    edges = payload["histogram"]["edges"]
    panel = _Panel(canvas, 0, 0, (edges[0], edges[-1]), (0.0, 1.0))
    for v in (lo, hi):
        if edges[0] <= v <= edges[-1]:
            panel.vline(v, dash="4,3")
    return {"pushforward.svg": canvas.render()}


_RENDERERS = {
    "sbc": _calibration_figures,
    "posterior-sbc": _calibration_figures,
    "test": _test_figure,
    "posterior-predictive": _predictive_figure,
    "frequentist-predictive": _predictive_figure,
    "prior-pushforward": _pushforward_figure,
}


def renderable_kinds():
    return sorted(_RENDERERS)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name).strip("-")


def render_figures(payload: dict) -> dict[str, str]:
    """Return {filename: svg text} for a report payload, {} if not plottable."""
    kind = payload.get("kind")
    renderer = _RENDERERS.get(kind)
    if renderer is None:
        return {}
    return renderer(payload)
