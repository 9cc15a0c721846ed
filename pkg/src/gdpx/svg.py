"""Static SVG rendering of a queueing diagram (hand-written, deterministic)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .queueing import QueueingDiagram

WIDTH, HEIGHT = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 20, 36, 48

COLORS = {"A": "#1f4e9c", "P_model": "#b03a2e", "A_model": "#1e8449",
          "excess": "#f5b041", "airborne": "#aed6f1"}
DASH = {"A": "", "P_model": ' stroke-dasharray="6 3"', "A_model": ' stroke-dasharray="2 2"'}


def _num(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _steps(xs, ys) -> list:
    """Corner points of a right-continuous step curve."""
    pts = []
    for i, y in enumerate(ys):
        pts.append((xs[i], y))
        pts.append((xs[i + 1], y))
    return pts


def _ticks(hi: float, n: int = 5) -> list:
    if hi <= 0:
        return [0]
    step = max(1, int(np.ceil(hi / n)))
    return list(range(0, int(hi) + step, step))


def render_diagram_svg(d: QueueingDiagram, title: str = "") -> str:
    """Step plot of A, P' and A' with the excess and airborne areas shaded."""
    m = len(d.A)
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    ymax = float(max(int(d.P_model[-1]) if m else 0, 1))
    xs = list(range(m + 1))

    def px(i):
        return LEFT + (plot_w * i / m if m else 0)

    def py(v):
        return TOP + plot_h * (1 - v / ymax)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')

    if m:
        for name, upper, lower in (("airborne", d.P_model, d.A_model), ("excess", d.A_model, d.A)):
            top = _steps(xs, upper)
            bottom = _steps(xs, lower)[::-1]
            pts = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in top + bottom)
            out.append(f'<polygon class="{name}" points="{pts}" fill="{COLORS[name]}" '
                       f'fill-opacity="0.6" stroke="none"/>')
        for name in ("P_model", "A_model", "A"):
            pts = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in _steps(xs, getattr(d, name)))
            out.append(f'<polyline class="{name}" points="{pts}" fill="none" '
                       f'stroke="{COLORS[name]}" stroke-width="1.5"{DASH[name]}/>')

    # axes
    x0, y0 = LEFT, TOP + plot_h
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for v in _ticks(ymax):
        y = _num(py(v))
        out.append(f'<line x1="{x0 - 4}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{x0 - 6}" y="{y}" text-anchor="end" dominant-baseline="middle">{v}</text>')
    for i in (_ticks(m, 8) if m else [0]):
        if i > m:
            continue
        x = _num(px(i))
        out.append(f'<line x1="{x}" y1="{y0}" x2="{x}" y2="{y0 + 4}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{y0 + 16}" text-anchor="middle">{d.q0 + i}</text>')
    out.append(f'<text x="{LEFT + plot_w // 2}" y="{HEIGHT - 8}" text-anchor="middle">quarter hour</text>')
    out.append(f'<text x="16" y="{TOP + plot_h // 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + plot_h // 2})">cumulative flights</text>')

    # legend
    lx = LEFT + 10
    for k, (name, label) in enumerate((("A", "actual"), ("P_model", "model planned"),
                                       ("A_model", "model served"), ("excess", "excess delay"),
                                       ("airborne", "airborne delay"))):
        y = TOP + 10 + 14 * k
        out.append(f'<rect x="{lx}" y="{y - 5}" width="12" height="8" fill="{COLORS[name]}"/>')
        out.append(f'<text x="{lx + 16}" y="{y + 3}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
