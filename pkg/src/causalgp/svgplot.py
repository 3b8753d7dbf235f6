"""Self-contained SVG rendering for the three report plots.

Output is deterministic: fixed palette, fixed canvas geometry, coordinates
rounded to two decimals, no timestamps or generator comments.  Files with a
header but no data rows render an axes-only chart rather than failing.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

__all__ = ["CsvFormatError", "plot_arc", "plot_fit", "plot_active"]

PALETTE = ("#1b6ca8", "#d1495b", "#2e933c", "#8f2d56", "#e09f3e", "#335c67")

_PANEL_W = 360
_PANEL_H = 280
_MARGIN = {"left": 52, "right": 14, "top": 30, "bottom": 40}


class CsvFormatError(ValueError):
    """Raised for a malformed input CSV; message carries the 1-based line."""


def _read_rows(path, required: tuple[str, ...]) -> list[dict]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}:1: empty file, expected header {','.join(required)}")
        missing = [c for c in required if c not in header]
        if missing:
            raise CsvFormatError(f"{path}:1: header is missing columns {missing}")
        idx = {c: header.index(c) for c in header}
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CsvFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(rec)}"
                )
            rows.append({c: rec[i] for c, i in idx.items()})
            rows[-1]["_line"] = lineno
    return rows


def _parse_float(row: dict, col: str, path) -> float:
    raw = row[col]
    try:
        value = float(raw)
    except ValueError:
        raise CsvFormatError(f"{path}:{row['_line']}: column {col!r} is not a number: {raw!r}")
    if not math.isfinite(value):
        raise CsvFormatError(f"{path}:{row['_line']}: column {col!r} is not finite: {raw!r}")
    return value


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


class _Panel:
    """One axes box at a page offset, with data-space to page-space scaling."""

    def __init__(self, ox: float, oy: float, title: str, xlabel: str, ylabel: str,
                 xlim: tuple[float, float], ylim: tuple[float, float]):
        def widen(lim):
            lo, hi = lim
            if not (math.isfinite(lo) and math.isfinite(hi)):
                lo, hi = 0.0, 1.0
            if hi <= lo:
                lo, hi = lo - 0.5, hi + 0.5
            return lo, hi

        self.xlim = widen(xlim)
        self.ylim = widen(ylim)
        self.x0 = ox + _MARGIN["left"]
        self.y0 = oy + _MARGIN["top"]
        self.w = _PANEL_W - _MARGIN["left"] - _MARGIN["right"]
        self.h = _PANEL_H - _MARGIN["top"] - _MARGIN["bottom"]
        self.parts: list[str] = []
        self._frame(title, xlabel, ylabel)

    def sx(self, v: float) -> float:
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * self.w

    def sy(self, v: float) -> float:
        lo, hi = self.ylim
        return self.y0 + self.h - (v - lo) / (hi - lo) * self.h

    def _frame(self, title: str, xlabel: str, ylabel: str) -> None:
        p = self.parts
        p.append(
            f'<rect x="{_fmt(self.x0)}" y="{_fmt(self.y0)}" width="{_fmt(self.w)}"'
            f' height="{_fmt(self.h)}" fill="none" stroke="#333" stroke-width="1"/>'
        )
        p.append(
            f'<text x="{_fmt(self.x0 + self.w / 2)}" y="{_fmt(self.y0 - 10)}"'
            f' text-anchor="middle" font-size="13">{title}</text>'
        )
        p.append(
            f'<text x="{_fmt(self.x0 + self.w / 2)}" y="{_fmt(self.y0 + self.h + 32)}"'
            f' text-anchor="middle" font-size="11">{xlabel}</text>'
        )
        p.append(
            f'<text x="{_fmt(self.x0 - 40)}" y="{_fmt(self.y0 + self.h / 2)}" font-size="11"'
            f' text-anchor="middle" transform="rotate(-90 {_fmt(self.x0 - 40)}'
            f' {_fmt(self.y0 + self.h / 2)})">{ylabel}</text>'
        )
        for v in _ticks(*self.xlim):
            px = self.sx(v)
            p.append(
                f'<line x1="{_fmt(px)}" y1="{_fmt(self.y0 + self.h)}" x2="{_fmt(px)}"'
                f' y2="{_fmt(self.y0 + self.h + 4)}" stroke="#333" stroke-width="1"/>'
            )
            p.append(
                f'<text x="{_fmt(px)}" y="{_fmt(self.y0 + self.h + 16)}" text-anchor="middle"'
                f' font-size="9">{v:.3g}</text>'
            )
        for v in _ticks(*self.ylim):
            py = self.sy(v)
            p.append(
                f'<line x1="{_fmt(self.x0 - 4)}" y1="{_fmt(py)}" x2="{_fmt(self.x0)}"'
                f' y2="{_fmt(py)}" stroke="#333" stroke-width="1"/>'
            )
            p.append(
                f'<text x="{_fmt(self.x0 - 6)}" y="{_fmt(py + 3)}" text-anchor="end"'
                f' font-size="9">{v:.3g}</text>'
            )

    def polyline(self, pts: list[tuple[float, float]], color: str, dashed: bool = False) -> None:
        if not pts:
            return
        coords = " ".join(f"{_fmt(self.sx(x))},{_fmt(self.sy(y))}" for x, y in pts)
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'
        )

    def polygon(self, pts: list[tuple[float, float]], color: str) -> None:
        if not pts:
            return
        coords = " ".join(f"{_fmt(self.sx(x))},{_fmt(self.sy(y))}" for x, y in pts)
        self.parts.append(f'<polygon points="{coords}" fill="{color}" fill-opacity="0.25" stroke="none"/>')

    def legend(self, entries: list[tuple[str, str, bool]]) -> None:
        for i, (label, color, dashed) in enumerate(entries):
            ly = self.y0 + 10 + 14 * i
            dash = ' stroke-dasharray="5,3"' if dashed else ""
            self.parts.append(
                f'<line x1="{_fmt(self.x0 + self.w - 96)}" y1="{_fmt(ly)}"'
                f' x2="{_fmt(self.x0 + self.w - 78)}" y2="{_fmt(ly)}"'
                f' stroke="{color}" stroke-width="1.5"{dash}/>'
            )
            self.parts.append(
                f'<text x="{_fmt(self.x0 + self.w - 74)}" y="{_fmt(ly + 3)}"'
                f' font-size="9">{label}</text>'
            )


def _document(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
        f' viewBox="0 0 {width} {height}" font-family="sans-serif">'
    )
    bg = f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>'
    return "\n".join([head, bg, *body, "</svg>"]) + "\n"


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def plot_arc(curves_csv, out_svg) -> None:
    """Accuracy-vs-rejection panels, one per quantile, curves averaged over seeds."""
    rows = _read_rows(curves_csv, ("design", "n", "method", "seed", "quantile", "rate", "accuracy"))
    if not rows:
        doc = _document(_PANEL_W, _PANEL_H, _Panel(0, 0, "arc", "rejection rate", "accuracy",
                                                   (0.0, 1.0), (0.0, 1.0)).parts)
        Path(out_svg).write_text(doc)
        return
    for row in rows:
        for col in ("quantile", "rate", "accuracy"):
            row[col + "_f"] = _parse_float(row, col, curves_csv)
    quantiles = sorted({row["quantile_f"] for row in rows})
    ns = sorted({row["n"] for row in rows})
    body: list[str] = []
    for pi, q in enumerate(quantiles):
        sub = [r for r in rows if r["quantile_f"] == q]
        series_keys = sorted({(r["method"], r["n"]) for r in sub})
        accs = [r["accuracy_f"] for r in sub]
        panel = _Panel(pi * _PANEL_W, 0, f"quantile {q:g}", "rejection rate", "accuracy",
                       (0.0, max(r["rate_f"] for r in sub)), (min(accs), max(accs)))
        legend = []
        for si, (method, n) in enumerate(series_keys):
            color = PALETTE[si % len(PALETTE)]
            label = method if len(ns) == 1 else f"{method} n={n}"
            grouped: dict[float, list[float]] = {}
            for r in sub:
                if (r["method"], r["n"]) == (method, n):
                    grouped.setdefault(r["rate_f"], []).append(r["accuracy_f"])
            pts = [(rate, _mean(vals)) for rate, vals in sorted(grouped.items())]
            panel.polyline(pts, color)
            legend.append((label, color, False))
        panel.legend(legend)
        body.extend(panel.parts)
    Path(out_svg).write_text(_document(_PANEL_W * len(quantiles), _PANEL_H, body))


def plot_fit(dump_csv, out_svg) -> None:
    """Truth and posterior mean over the grid, with a 95% band when variance is present."""
    rows = _read_rows(dump_csv, ("x", "truth", "mean", "variance"))
    if not rows:
        doc = _document(_PANEL_W, _PANEL_H, _Panel(0, 0, "fit", "x", "f(x)", (0.0, 1.0), (0.0, 1.0)).parts)
        Path(out_svg).write_text(doc)
        return
    pts = sorted(
        (
            _parse_float(r, "x", dump_csv),
            _parse_float(r, "truth", dump_csv),
            _parse_float(r, "mean", dump_csv),
            _parse_float(r, "variance", dump_csv),
        )
        for r in rows
    )
    xs = [p[0] for p in pts]
    los = [m - 1.959964 * math.sqrt(max(v, 0.0)) for _, _, m, v in pts]
    his = [m + 1.959964 * math.sqrt(max(v, 0.0)) for _, _, m, v in pts]
    ys = [p[1] for p in pts] + [p[2] for p in pts] + los + his
    panel = _Panel(0, 0, "fit", "x", "f(x)", (min(xs), max(xs)), (min(ys), max(ys)))
    if any(v > 0.0 for _, _, _, v in pts):
        band = [(x, hi) for x, hi in zip(xs, his)] + [(x, lo) for x, lo in zip(xs[::-1], los[::-1])]
        panel.polygon(band, PALETTE[0])
    panel.polyline([(x, t) for x, t, _, _ in pts], "#333333", dashed=True)
    panel.polyline([(x, m) for x, _, m, _ in pts], PALETTE[0])
    panel.legend([("truth", "#333333", True), ("estimate", PALETTE[0], False)])
    Path(out_svg).write_text(_document(_PANEL_W, _PANEL_H, panel.parts))


def plot_active(curves_csv, out_svg) -> None:
    """Test MSE against acquisition step, one mean curve per strategy."""
    rows = _read_rows(curves_csv, ("step", "strategy", "seed", "mse"))
    if not rows:
        doc = _document(_PANEL_W, _PANEL_H, _Panel(0, 0, "active learning", "step", "mse",
                                                   (0.0, 1.0), (0.0, 1.0)).parts)
        Path(out_svg).write_text(doc)
        return
    for row in rows:
        row["step_f"] = _parse_float(row, "step", curves_csv)
        row["mse_f"] = _parse_float(row, "mse", curves_csv)
    strategies = sorted({r["strategy"] for r in rows})
    mses = [r["mse_f"] for r in rows]
    panel = _Panel(0, 0, "active learning", "step", "mse",
                   (0.0, max(r["step_f"] for r in rows)), (min(mses), max(mses)))
    legend = []
    for si, strategy in enumerate(strategies):
        color = PALETTE[si % len(PALETTE)]
        grouped: dict[float, list[float]] = {}
        for r in rows:
            if r["strategy"] == strategy:
                grouped.setdefault(r["step_f"], []).append(r["mse_f"])
        panel.polyline([(s, _mean(v)) for s, v in sorted(grouped.items())], color)
        legend.append((strategy, color, False))
    panel.legend(legend)
    Path(out_svg).write_text(_document(_PANEL_W, _PANEL_H, panel.parts))
