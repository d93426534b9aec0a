"""Deterministic SVG renderers for the artifact kinds.

Fixed 1000 x 1000 canvas showing the torus fundamental domain [0,1)^2
(origin bottom-left); negative sign regions shaded, curve pairs stroked in
two colors, critical vertices marked.  Renderers are pure string builders:
the same artifact yields byte-identical SVG.
"""

from __future__ import annotations

import numpy as np

W = H = 1000.0
HEADER = ('<svg xmlns="http://www.w3.org/2000/svg" width="1000" height="1000" '
          'viewBox="0 0 1000 1000">\n'
          '<rect width="1000" height="1000" fill="#ffffff"/>\n')
FOOTER = "</svg>\n"

NEG_FILL = "#b8cdeb"
SEG_COLOR = "#1d3557"
MINUS_COLOR = "#c1121f"
PLUS_COLOR = "#2a9d8f"
CV_COLOR = "#e07b00"


def _px(t, x):
    return f"{t * W:.2f},{(1.0 - x % 1.0) * H:.2f}"


def _poly(points, stroke, width="2", fill="none", closed=False):
    tag = "polygon" if closed else "polyline"
    pts = " ".join(_px(t, x) for t, x in points)
    return (f'<{tag} points="{pts}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width}"/>\n')


def _axes():
    return ('<rect x="0" y="0" width="1000" height="1000" fill="none" '
            'stroke="#444444" stroke-width="2"/>\n')


def render_zeroset(obj) -> str:
    """SVG for a serialized zero-set arrangement (segments + classes)."""
    out = [HEADER, _axes()]
    for seg in obj.get("segments", []):
        p0 = [float(v) for v in seg["p0"]]
        p1 = [float(v) for v in seg["p1"]]
        out.append(_poly([p0, p1], SEG_COLOR, "2"))
    for cv in obj.get("critical_vertices", []):
        t, x = float(cv["theta"]), float(cv["x"])
        cx, cy = _px(t, x).split(",")
        out.append(f'<circle cx="{cx}" cy="{cy}" r="7" fill="{CV_COLOR}"/>\n')
        out.append(f'<text x="{float(cx) + 9:.2f}" y="{cy}" font-size="22" '
                   f'fill="{CV_COLOR}">{cv["side"]}</text>\n')
    neg = obj.get("regions", {}).get("-1", [])
    out.append(f'<text x="12" y="30" font-size="24" fill="#333333">'
               f'zero set: {len(obj.get("segments", []))} segments, '
               f'{len(neg)} negative components</text>\n')
    out.append(FOOTER)
    return "".join(out)


def render_curves(obj, zeroset_obj=None) -> str:
    """SVG overlay of a curve pair (and optionally its arrangement)."""
    out = [HEADER, _axes()]
    if zeroset_obj is not None:
        for seg in zeroset_obj.get("segments", []):
            p0 = [float(v) for v in seg["p0"]]
            p1 = [float(v) for v in seg["p1"]]
            out.append(_poly([p0, p1], SEG_COLOR, "1"))
    for side, color in (("minus", MINUS_COLOR), ("plus", PLUS_COLOR)):
        for piece in obj.get("pieces", []):
            ts = [float(v) for v in piece["thetas"]]
            xs = [float(v) for v in piece[side]]
            pts = [(t % 1.0 if i == 0 or t % 1.0 >= ts[0] % 1.0 else t % 1.0, x)
                   for i, (t, x) in enumerate(zip(ts, xs))]
            # split at wrap points to avoid horizontal streaks
            chunk = []
            last = None
            for t, x in zip(ts, xs):
                tw = t % 1.0
                if last is not None and tw < last - 0.5:
                    out.append(_poly(chunk, color, "3"))
                    chunk = []
                chunk.append((tw, x))
                last = tw
            if len(chunk) > 1:
                out.append(_poly(chunk, color, "3"))
    for v in obj.get("verticals", []):
        t = float(v["theta"]) % 1.0
        out.append(_poly([(t, float(v["a"])), (t, float(v["b"]))],
                         MINUS_COLOR if v["side"] == "-" else PLUS_COLOR, "3"))
    out.append(FOOTER)
    return "".join(out)


def render_staircase(rows) -> str:
    """SVG of (tau, rho) rows; plateaus appear as horizontal runs."""
    rows = [(float(t), float(r)) for t, r, *_ in rows]
    if not rows:
        return HEADER + _axes() + FOOTER
    ts = np.array([r[0] for r in rows])
    vs = np.array([r[1] for r in rows])
    t0, t1 = float(ts.min()), float(ts.max())
    v0, v1 = float(vs.min()), float(vs.max())
    dt = (t1 - t0) or 1.0
    dv = (v1 - v0) or 1.0
    pts = [((t - t0) / dt, 0.08 + 0.84 * (v - v0) / dv) for t, v in rows]
    out = [HEADER, _axes(), _poly(pts, SEG_COLOR, "3")]
    out.append(f'<text x="12" y="30" font-size="24" fill="#333333">'
               f'rotation number over [{t0:.6g}, {t1:.6g}]</text>\n')
    out.append(FOOTER)
    return "".join(out)


def render_tongue(obj) -> str:
    """SVG of tongue boundaries tau^-/tau^+ over the alpha grid."""
    alphas = [float(v) for v in obj["alphas"]]
    lo = [float(v) for v in obj["tau_minus"]]
    hi = [float(v) for v in obj["tau_plus"]]
    allv = [v for v in lo + hi if not np.isnan(v)]
    v0, v1 = (min(allv), max(allv)) if allv else (0.0, 1.0)
    dv = (v1 - v0) or 1.0
    a0, a1 = min(alphas), max(alphas)
    da = (a1 - a0) or 1.0

    def norm(a, v):
        return ((a - a0) / da, 0.1 + 0.8 * (v - v0) / dv)

    band = [norm(a, v) for a, v in zip(alphas, hi)] + \
           [norm(a, v) for a, v in zip(alphas[::-1], lo[::-1])]
    out = [HEADER, _axes()]
    if not any(np.isnan(lo)) and not any(np.isnan(hi)):
        out.append(_poly(band, SEG_COLOR, "1", fill=NEG_FILL, closed=True))
    out.append(_poly([norm(a, v) for a, v in zip(alphas, hi)], PLUS_COLOR, "3"))
    if not any(np.isnan(lo)):
        out.append(_poly([norm(a, v) for a, v in zip(alphas, lo)],
                         MINUS_COLOR, "3"))
    out.append(FOOTER)
    return "".join(out)


def render_certificate(obj) -> str:
    """SVG of a certificate's annulus boundaries."""
    out = [HEADER, _axes()]
    for key, color in (("plus", PLUS_COLOR), ("minus", MINUS_COLOR)):
        c = obj["curves"][key]
        ts = [float(v) for v in c["ts"]]
        xs = [float(v) for v in c["xs"]]
        chunk = []
        last = None
        for t, x in zip(ts, xs):
            tw = t % 1.0
            if last is not None and tw < last - 0.5:
                out.append(_poly(chunk, color, "3"))
                chunk = []
            chunk.append((tw, x))
            last = tw
        if len(chunk) > 1:
            out.append(_poly(chunk, color, "3"))
    out.append(f'<text x="12" y="30" font-size="24" fill="#333333">'
               f'certified margin {float(obj["margin"]):.3g} at base '
               f'{float(obj["omega_prime"]):.9g}</text>\n')
    out.append(FOOTER)
    return "".join(out)


RENDERERS = {
    "zeroset": render_zeroset,
    "curves": render_curves,
    "staircase": render_staircase,
    "tongue": render_tongue,
    "certificate": render_certificate,
}
