"""Deterministic SVG chart rendering for the analysis report.

Hand-built SVG rather than a plotting library: output is a pure function
of the inputs (no timestamps, ids, or font metrics), so charts diff
cleanly and byte-identical re-renders are testable.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .stats import KsResult, ConfusionMatrix3, kde_pdf

_FONT = 'font-family="sans-serif"'

GROUP_COLORS = {"A_WINS": "#2166ac", "TIE": "#4d4d4d", "B_WINS": "#b2182c"}
GROUP_TITLES = {"A_WINS": "model A wins", "TIE": "tie", "B_WINS": "model B wins"}


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if x == x else "nan"


def _svg_doc(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>',
                      *body, "</svg>"])


def _polyline(points: Sequence[tuple[float, float]], color: str, width: float = 1.5) -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"/>')


def _text(x: float, y: float, content: str, size: int = 12, anchor: str = "start",
          color: str = "#222222") -> str:
    return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" {_FONT} '
            f'text-anchor="{anchor}" fill="{color}">{_escape(content)}</text>')


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _axis_x(x0: float, x1: float, y: float, lo: float, hi: float,
            ticks: Sequence[float]) -> list[str]:
    parts = [f'<line x1="{_fmt(x0)}" y1="{_fmt(y)}" x2="{_fmt(x1)}" y2="{_fmt(y)}" '
             f'stroke="#666666" stroke-width="1"/>']
    for tick in ticks:
        px = x0 + (tick - lo) / (hi - lo) * (x1 - x0)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(y)}" x2="{_fmt(px)}" '
                     f'y2="{_fmt(y + 4)}" stroke="#666666" stroke-width="1"/>')
        parts.append(_text(px, y + 16, _fmt(tick), size=10, anchor="middle"))
    return parts


def render_density_chart(groups: Sequence[tuple[str, Sequence[float]]],
                         bandwidth: float = 0.5, grid_points: int = 401) -> str:
    """Stacked per-group KDE panels of score differences over [-1, 1]."""
    if not groups:
        raise ValueError("at least one group required")
    if grid_points < 2:
        raise ValueError("grid must have at least two points")
    grid = np.linspace(-1.0, 1.0, grid_points)
    panel_w, panel_h, pad, gap = 520, 130, 48, 26
    width = panel_w + 2 * pad
    height = pad + len(groups) * (panel_h + gap)
    body: list[str] = [_text(pad, 24, "Density of nugget score differences (score B - score A)",
                             size=14)]
    top = pad
    for label, samples in groups:
        color = GROUP_COLORS.get(label, "#333333")
        title = GROUP_TITLES.get(label, label)
        densities = kde_pdf(samples, bandwidth=bandwidth, grid=grid)
        peak = float(densities.max()) or 1.0
        points = [
            (pad + (x + 1.0) / 2.0 * panel_w, top + panel_h - d / peak * (panel_h - 18))
            for x, d in zip(grid, densities)
        ]
        body.append(_polyline(points, color))
        body.extend(_axis_x(pad, pad + panel_w, top + panel_h, -1.0, 1.0,
                            [-1.0, -0.5, 0.0, 0.5, 1.0]))
        body.append(_text(pad + 6, top + 14, f"{title} (n={len(samples)})", size=11,
                          color=color))
        top += panel_h + gap
    return _svg_doc(width, height, body)


def _format_p(p: float) -> str:
    if p >= 0.001:
        return f"{p:.3f}"
    return f"{p:.2e}"


def render_cdf_chart(panels: Sequence[tuple[str, Sequence[float], str, Sequence[float], KsResult]]) -> str:
    """Side-by-side ECDF panels, one per pairwise K-S comparison, D and p annotated."""
    if not panels:
        raise ValueError("at least one panel required")
    panel_w, panel_h, pad, gap = 300, 220, 46, 34
    width = pad + len(panels) * (panel_w + gap)
    height = panel_h + 2 * pad + 22
    body: list[str] = [_text(pad, 24, "Empirical CDFs of nugget score differences", size=14)]
    left = pad
    for label_x, xs, label_y, ys, ks in panels:
        for label, samples in ((label_x, xs), (label_y, ys)):
            color = GROUP_COLORS.get(label, "#333333")
            data = np.sort(np.asarray(samples, dtype=np.float64))
            n = data.size
            points = [(left, float(pad + 18 + panel_h))]
            for i, value in enumerate(data, start=1):
                px = left + (float(value) + 1.0) / 2.0 * panel_w
                py = pad + 18 + panel_h - (i / n) * panel_h
                points.append((px, points[-1][1]))
                points.append((px, py))
            points.append((left + panel_w, points[-1][1]))
            body.append(_polyline(points, color, width=1.3))
        body.extend(_axis_x(left, left + panel_w, pad + 18 + panel_h, -1.0, 1.0,
                            [-1.0, 0.0, 1.0]))
        title = f"{GROUP_TITLES.get(label_x, label_x)} vs {GROUP_TITLES.get(label_y, label_y)}"
        body.append(_text(left, pad + 8, title, size=11))
        body.append(_text(left, pad + 18 + panel_h + 32,
                          f"D={ks.statistic:.3f}, p={_format_p(ks.p_value)}", size=11))
        left += panel_w + gap
    return _svg_doc(width, height, body)


def _cell_color(count: int, peak: int) -> str:
    if peak <= 0:
        return "#f7fbff"
    # Light to saturated blue ramp.
    frac = count / peak
    r = int(247 - frac * (247 - 33))
    g = int(251 - frac * (251 - 102))
    b = int(255 - frac * (255 - 172))
    return f"#{r:02x}{g:02x}{b:02x}"


def render_confusion_chart(matrix: ConfusionMatrix3, title: str,
                           col_title: str = "predicted") -> str:
    """3x3 heatmap with counts printed in the cells."""
    cell, pad_left, pad_top = 92, 110, 72
    width = pad_left + 3 * cell + 30
    height = pad_top + 3 * cell + 46
    peak = max(max(row) for row in matrix.counts)
    body: list[str] = [_text(pad_left, 26, title, size=14)]
    body.append(_text(pad_left + 1.5 * cell, 48, col_title, size=11, anchor="middle"))
    for j, label in enumerate(matrix.col_labels):
        body.append(_text(pad_left + j * cell + cell / 2, pad_top - 8,
                          GROUP_TITLES.get(label, label), size=10, anchor="middle"))
    for i, row in enumerate(matrix.counts):
        body.append(_text(pad_left - 8, pad_top + i * cell + cell / 2 + 4,
                          GROUP_TITLES.get(matrix.row_labels[i], matrix.row_labels[i]),
                          size=10, anchor="end"))
        for j, count in enumerate(row):
            x, y = pad_left + j * cell, pad_top + i * cell
            fill = _cell_color(count, peak)
            body.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                        f'fill="{fill}" stroke="#999999"/>')
            text_color = "#ffffff" if peak and count / peak > 0.6 else "#111111"
            body.append(_text(x + cell / 2, y + cell / 2 + 5, str(count), size=13,
                              anchor="middle", color=text_color))
    body.append(_text(pad_left, pad_top + 3 * cell + 28, "rows: human vote", size=10))
    return _svg_doc(width, height, body)


def _bar_panel(body: list[str], left: int, top: int, width: int, height: int,
               title: str, items: Sequence[tuple[str, int]], color: str) -> None:
    body.append(_text(left, top - 8, title, size=12))
    if not items:
        body.append(_text(left, top + 20, "(empty)", size=10))
        return
    peak = max(count for _, count in items) or 1
    bar_w = width / len(items)
    for i, (label, count) in enumerate(items):
        h = count / peak * (height - 24)
        x = left + i * bar_w
        body.append(f'<rect x="{_fmt(x + 2)}" y="{_fmt(top + height - 24 - h)}" '
                    f'width="{_fmt(bar_w - 4)}" height="{_fmt(h)}" fill="{color}"/>')
        body.append(_text(x + bar_w / 2, top + height - 12, label[:10], size=9,
                          anchor="middle"))
        body.append(_text(x + bar_w / 2, top + height - 28 - h, str(count), size=9,
                          anchor="middle"))


def render_histograms(vote_histogram: Mapping[str, int],
                      language_histogram: Mapping[str, int],
                      rating_histograms: Mapping[str, Sequence[int]] | None = None) -> str:
    """Dataset overview: vote and language distributions, plus per-category rating spreads."""
    panel_w, panel_h, pad = 420, 150, 46
    columns = 2
    n_rating = len(rating_histograms) if rating_histograms else 0
    rating_rows = (n_rating + columns - 1) // columns
    height = pad + panel_h + 40 + rating_rows * (panel_h + 40)
    width = pad * 2 + columns * (panel_w + 30)
    body: list[str] = [_text(pad, 24, "Dataset overview", size=14)]
    votes = sorted(vote_histogram.items())
    _bar_panel(body, pad, pad + 24, panel_w, panel_h, "human votes", votes, "#2166ac")
    languages = sorted(language_histogram.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    _bar_panel(body, pad + panel_w + 30, pad + 24, panel_w, panel_h,
               "languages (top 10)", languages, "#35978f")
    if rating_histograms:
        i = 0
        for name in sorted(rating_histograms):
            counts = rating_histograms[name]
            row, col = divmod(i, columns)
            left = pad + col * (panel_w + 30)
            top = pad + panel_h + 64 + row * (panel_h + 40)
            items = [(str(v), int(c)) for v, c in enumerate(counts)]
            _bar_panel(body, left, top, panel_w, panel_h, f"rating: {name}", items,
                       "#8073ac")
            i += 1
    return _svg_doc(width, height, body)
