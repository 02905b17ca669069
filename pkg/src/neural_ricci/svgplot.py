"""Self-contained SVG line plots (polyline + axes + legend); no plotting
dependency, output is plain valid XML."""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 180, 44, 56


def _xmap(x, x0, x1):
    span = (x1 - x0) or 1.0
    return _ML + (x - x0) / span * (_W - _ML - _MR)


def _ymap(y, y0, y1):
    span = (y1 - y0) or 1.0
    return _H - _MB - (y - y0) / span * (_H - _MT - _MB)


def line_plot(series, title: str, xlabel: str, ylabel: str, path,
              y_range=(0.0, 1.0)) -> None:
    """series: iterable of (label, xs, ys). Writes an SVG file."""
    series = [(str(lab), list(map(float, xs)), list(map(float, ys)))
              for lab, xs, ys in series]
    xs_all = [x for _, xs, _ in series for x in xs] or [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    if x0 == x1:
        x1 = x0 + 1.0
    y0, y1 = y_range

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
        f'height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{escape(title)}</text>',
    ]
    # axes
    ax_y = _H - _MB
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{ax_y}" '
                 'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{_ML}" y1="{ax_y}" x2="{_W - _MR}" y2="{ax_y}" '
                 'stroke="black" stroke-width="1"/>')
    # ticks
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        px = _xmap(xv, x0, x1)
        parts.append(f'<line x1="{px:.1f}" y1="{ax_y}" x2="{px:.1f}" '
                     f'y2="{ax_y + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{ax_y + 20}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{xv:.2f}</text>')
        yv = y0 + (y1 - y0) * i / 5
        py = _ymap(yv, y0, y1)
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" '
                     f'y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 9}" y="{py + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{yv:.2f}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13">{escape(xlabel)}</text>')
    parts.append(f'<text x="20" y="{(_MT + ax_y) / 2:.1f}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" transform="rotate(-90 20 '
                 f'{(_MT + ax_y) / 2:.1f})">{escape(ylabel)}</text>')
    # curves + legend
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_xmap(x, x0, x1):.2f},{_ymap(y, y0, y1):.2f}"
                       for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        ly = _MT + 16 + 18 * i
        lx = _W - _MR + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2.5"/>')
        parts.append(f'<text x="{lx + 27}" y="{ly}" '
                     f'font-family="sans-serif" font-size="12">'
                     f'{escape(label)}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
