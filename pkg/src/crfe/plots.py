"""Dependency-free SVG line plots for the experiment reports.

Writes a fixed-size canvas with one mean line and a shaded +-1 std band.
All coordinates are formatted with two decimals so identical inputs
always produce identical bytes.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 62, 16, 34, 48


def _px(v: float) -> str:
    return format(float(v), ".2f")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def line_plot_svg(x, mean, std, title: str, x_label: str, y_label: str) -> str:
    """Render one metric trajectory; x is drawn in the given order.

    Subset-size curves pass sizes in descending order so elimination
    progresses left to right.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if not (x.shape == mean.shape == std.shape) or x.size == 0:
        raise ValueError("x, mean and std must share a non-empty shape")

    lo = float((mean - std).min())
    hi = float((mean + std).max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    # positions follow the input order: index 0 at the left edge
    if x.size == 1:
        xs = np.array([LEFT + plot_w / 2.0])
    else:
        xs = LEFT + np.arange(x.size) / (x.size - 1) * plot_w

    def ypix(v):
        return TOP + (hi - v) / (hi - lo) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>'
    )

    # +-1 std band
    upper = [(xs[i], ypix(mean[i] + std[i])) for i in range(x.size)]
    lower = [(xs[i], ypix(mean[i] - std[i])) for i in range(x.size - 1, -1, -1)]
    pts = " ".join(f"{_px(a)},{_px(b)}" for a, b in upper + lower)
    out.append(f'<polygon points="{pts}" fill="#c6dbef" stroke="none"/>')

    line = " ".join(f"{_px(xs[i])},{_px(ypix(mean[i]))}" for i in range(x.size))
    out.append(
        f'<polyline points="{line}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
    )

    # axes
    out.append(
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{HEIGHT - BOTTOM}" '
        f'stroke="black" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" '
        f'y2="{HEIGHT - BOTTOM}" stroke="black" stroke-width="1"/>'
    )
    for tv in _ticks(lo + pad, hi - pad):
        yy = ypix(tv)
        out.append(
            f'<line x1="{LEFT - 4}" y1="{_px(yy)}" x2="{LEFT}" y2="{_px(yy)}" '
            f'stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{LEFT - 7}" y="{_px(yy + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{format(tv, ".3g")}</text>'
        )
    n_xticks = min(7, x.size)
    for idx in np.unique(np.linspace(0, x.size - 1, n_xticks).round().astype(int)):
        xx = xs[idx]
        out.append(
            f'<line x1="{_px(xx)}" y1="{HEIGHT - BOTTOM}" x2="{_px(xx)}" '
            f'y2="{HEIGHT - BOTTOM + 4}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_px(xx)}" y="{HEIGHT - BOTTOM + 17}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{format(x[idx], ".6g")}</text>'
        )
    out.append(
        f'<text x="{LEFT + plot_w // 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    out.append(
        f'<text x="16" y="{TOP + plot_h // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {TOP + plot_h // 2})">{y_label}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_plot(path, x, mean, std, title, x_label, y_label) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_plot_svg(x, mean, std, title, x_label, y_label))
