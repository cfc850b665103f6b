"""Self-contained SVG line charts (no plotting dependency)."""
from xml.sax.saxutils import escape

__all__ = ["line_chart"]

PALETTE = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"]


def _fmt(x):
    return f"{x:.2f}"


def line_chart(series, hline=None, title="", xlabel="rho", ylabel="power",
               xlim=None, ylim=(0.0, 1.0), width=720, height=480, comment=None):
    """Render ``series`` as an SVG document.

    Parameters
    ----------
    series : list of (label, xs, ys)
    hline : float, optional
        Dashed horizontal reference line (e.g. the nominal level).
    comment : str, optional
        Embedded as an XML comment (fingerprint, version).

    Returns
    -------
    str
    """
    left, right, top, bottom = 60, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom
    if xlim is None:
        xs_all = [float(x) for _, xs, _ in series for x in xs]
        xlim = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    x0, x1 = xlim
    y0, y1 = ylim
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(x):
        return left + (float(x) - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1 - (float(y) - y0) / (y1 - y0)) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">']
    if comment:
        out.append(f"<!-- {escape(comment).replace('--', '- -')} -->")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    for i in range(6):
        fx = x0 + (x1 - x0) * i / 5
        fy = y0 + (y1 - y0) * i / 5
        out.append(f'<line x1="{_fmt(sx(fx))}" y1="{top + ph}" x2="{_fmt(sx(fx))}" '
                   f'y2="{top + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(sx(fx))}" y="{top + ph + 18}" text-anchor="middle">{fx:.3g}</text>')
        out.append(f'<line x1="{left - 5}" y1="{_fmt(sy(fy))}" x2="{left}" y2="{_fmt(sy(fy))}" stroke="#444"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(sy(fy) + 4)}" text-anchor="end">{fy:.2g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if hline is not None:
        out.append(f'<line x1="{left}" y1="{_fmt(sy(hline))}" x2="{left + pw}" '
                   f'y2="{_fmt(sy(hline))}" stroke="#888" stroke-dasharray="4,3"/>')
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(min(max(y, y0), y1)))}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 42}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
