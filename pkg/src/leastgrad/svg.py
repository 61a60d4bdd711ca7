"""Static SVG plots of level families."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import ConvexBoundary

# a few stops of a perceptually ordered ramp (dark blue to yellow)
_RAMP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    float,
)


def _color(x: float) -> str:
    x = min(max(float(x), 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(x), len(_RAMP) - 2)
    c = _RAMP[i] + (x - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#{:02x}{:02x}{:02x}".format(*np.round(c).astype(int))


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _pts(P) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in P)


def _segments(family, max_lines):
    """Distinct level segments (at SVG precision) from an evenly thinned set of levels."""
    lines = [ln for ln in family.lines if ln.segments]
    if len(lines) > max_lines:
        idx = np.unique(np.linspace(0, len(lines) - 1, max_lines).round().astype(int))
        lines = [lines[i] for i in idx]
    seen, out = set(), []
    for ln in lines:
        for c in ln.segments:
            key = tuple(_fmt(v) for v in (*c.p, *c.q))
            rkey = key[2:] + key[:2]
            if key in seen or rkey in seen:
                continue
            seen.add(key)
            out.append((ln.t, c))
    return out


def render_svg(family, domain: ConvexBoundary, max_lines=41, size=480, n_outline=400) -> str:
    """SVG text: domain outline, level lines colored by ``t``, hatched fat regions."""
    lo, hi = domain.bounding_box()
    pad = 0.05 * float(np.max(hi - lo))
    lo, hi = lo - pad, hi + pad
    w, h = hi - lo
    scale = size / max(w, h)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w * scale)}" height="{_fmt(h * scale)}" '
        f'viewBox="{_fmt(lo[0])} {_fmt(-hi[1])} {_fmt(w)} {_fmt(h)}">',
        "<defs>",
        f'<pattern id="hatch" patternUnits="userSpaceOnUse" width="{_fmt(w / 40)}" height="{_fmt(w / 40)}" '
        'patternTransform="rotate(45)">',
        f'<path d="M0,0 V{_fmt(w / 40)}" stroke="#555555" stroke-width="{_fmt(w / 400)}"/>',
        "</pattern>",
        "</defs>",
        # flip y so that user coordinates read with y pointing up
        '<g transform="scale(1,-1)">',
    ]
    stroke = _fmt(w / 300)
    fats = [] if family is None else family.fat_regions
    for fr in fats:
        P = fr.region.polygon()
        if len(P) < 3:
            continue
        out.append(
            f'<polygon class="fat" data-value="{fr.value:.6g}" points="{_pts(P)}" '
            f'fill="url(#hatch)" fill-opacity="0.6" stroke="none"/>'
        )
    if family is not None:
        span = family.M - family.m
        for t, c in _segments(family, max_lines):
            x = 0.5 if span <= 0 else (t - family.m) / span
            out.append(
                f'<line x1="{_fmt(c.p[0])}" y1="{_fmt(c.p[1])}" x2="{_fmt(c.q[0])}" y2="{_fmt(c.q[1])}" '
                f'stroke="{_color(x)}" stroke-width="{stroke}" data-t="{t:.6g}"/>'
            )
    P = domain.param(domain.sample(n_outline))
    d = "M" + " L".join(f"{_fmt(x)},{_fmt(y)}" for x, y in P) + " Z"
    out.append(f'<path class="outline" d="{d}" fill="none" stroke="black" stroke-width="{stroke}"/>')
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def emit_svg(family, domain: ConvexBoundary, path, **kw) -> Path:
    """Write :func:`render_svg` output to ``path``; I/O errors propagate."""
    path = Path(path)
    path.write_text(render_svg(family, domain, **kw))
    return path
