"""Minimal deterministic SVG output: line plots and heatmaps.

No plotting dependency: artifacts must render the same bytes for the same
data on every machine, and the needs here stop at labeled axes, a few line
series, and a rasterized-rectangle heatmap.  All numbers are formatted
with fixed precision so files diff cleanly.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["line_plot", "heatmap"]

_MARGIN_L = 64
_MARGIN_R = 16
_MARGIN_T = 28
_MARGIN_B = 44

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

# viridis anchor colors, dark-to-bright; linear interpolation between stops.
_HEAT_STOPS = (
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    return f"{x:.6g}"


def _nice_step(span: float, target: int) -> float:
    if span <= 0:
        return 1.0
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = _nice_step(hi - lo, target)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _expand(lo: float, hi: float) -> tuple[float, float]:
    if hi > lo:
        return lo, hi
    pad = max(abs(lo), 1.0) * 0.5
    return lo - pad, hi + pad


def line_plot(
    path,
    series,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    width: int = 640,
    height: int = 400,
) -> None:
    """Write a line plot. `series` is a list of (x, y, label) triples."""
    series = [
        (np.asarray(x, dtype=float), np.asarray(y, dtype=float), label)
        for x, y, label in series
    ]
    xlo = min(float(x.min()) for x, _, _ in series if len(x))
    xhi = max(float(x.max()) for x, _, _ in series if len(x))
    ylo = min(float(y.min()) for _, y, _ in series if len(y))
    yhi = max(float(y.max()) for _, y, _ in series if len(y))
    xlo, xhi = _expand(xlo, xhi)
    ylo, yhi = _expand(ylo, yhi)

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def sx(v: float) -> float:
        return _MARGIN_L + (v - xlo) / (xhi - xlo) * plot_w

    def sy(v: float) -> float:
        return _MARGIN_T + (yhi - v) / (yhi - ylo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>'
        )
    # grid and ticks
    for t in _ticks(xlo, xhi):
        x = sx(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_T}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_MARGIN_T + plot_h + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{_tick_label(t)}</text>"
        )
    for t in _ticks(ylo, yhi):
        y = sy(t)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y)}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_tick_label(t)}</text>'
        )
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333"/>'
    )

    for i, (x, y, label) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        if label:
            ly = _MARGIN_T + 14 + 16 * i
            lx = _MARGIN_L + plot_w - 130
            parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                f'font-size="11">{label}</text>'
            )

    if xlabel:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{height - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{xlabel}</text>"
        )
    if ylabel:
        yc = _MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="14" y="{yc:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {yc:.1f})">{ylabel}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def _block_mean(z: np.ndarray, max_rows: int, max_cols: int) -> np.ndarray:
    rows, cols = z.shape
    rstep = max(1, -(-rows // max_rows))
    cstep = max(1, -(-cols // max_cols))
    rpad = (-rows) % rstep
    cpad = (-cols) % cstep
    padded = np.pad(z, ((0, rpad), (0, cpad)), mode="edge")
    shaped = padded.reshape(
        padded.shape[0] // rstep, rstep, padded.shape[1] // cstep, cstep
    )
    return shaped.mean(axis=(1, 3))


def _heat_color(v: float) -> str:
    pos = min(max(v, 0.0), 1.0) * (len(_HEAT_STOPS) - 1)
    i = min(int(pos), len(_HEAT_STOPS) - 2)
    frac = pos - i
    r0, g0, b0 = _HEAT_STOPS[i]
    r1, g1, b1 = _HEAT_STOPS[i + 1]
    r = round(255 * (r0 + frac * (r1 - r0)))
    g = round(255 * (g0 + frac * (g1 - g0)))
    b = round(255 * (b0 + frac * (b1 - b0)))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    path,
    x,
    y,
    z,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    width: int = 640,
    height: int = 420,
    max_cells: tuple[int, int] = (150, 200),
) -> None:
    """Write a heatmap of z[y, x], block-averaged down to max_cells.

    x runs along the horizontal axis, y along the vertical (increasing
    upward); z rows index y and columns index x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != (len(y), len(x)):
        raise ValueError(f"z shape {z.shape} does not match ({len(y)}, {len(x)})")
    zs = _block_mean(z, max_cells[0], max_cells[1])
    peak = float(zs.max()) if zs.size else 0.0
    if peak > 0:
        zs = zs / peak

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B
    nrows, ncols = zs.shape
    cw = plot_w / ncols
    ch = plot_h / nrows

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>'
        )
    for r in range(nrows):
        yy = _MARGIN_T + plot_h - (r + 1) * ch
        for c in range(ncols):
            color = _heat_color(float(zs[r, c]))
            parts.append(
                f'<rect x="{_fmt(_MARGIN_L + c * cw)}" y="{_fmt(yy)}" '
                f'width="{_fmt(cw + 0.5)}" height="{_fmt(ch + 0.5)}" '
                f'fill="{color}"/>'
            )
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333"/>'
    )

    for t in _ticks(float(x.min()), float(x.max())):
        px = _MARGIN_L + (t - x.min()) / (x.max() - x.min() or 1.0) * plot_w
        parts.append(
            f'<text x="{_fmt(px)}" y="{_MARGIN_T + plot_h + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{_tick_label(t)}</text>"
        )
    for t in _ticks(float(y.min()), float(y.max())):
        py = _MARGIN_T + plot_h - (t - y.min()) / (y.max() - y.min() or 1.0) * plot_h
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_tick_label(t)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{height - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{xlabel}</text>"
        )
    if ylabel:
        yc = _MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="14" y="{yc:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {yc:.1f})">{ylabel}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
