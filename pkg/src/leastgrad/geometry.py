"""Convex planar boundaries, arcs, chords and the distance-to-arc machinery.

Every boundary is parametrized by arclength ``s`` in ``[0, total_length)``,
traversed counter-clockwise, so that ``(outward_normal, tangent)`` is a
positively oriented frame.  Arc parameters are kept *unwrapped*: an arc
starting at ``s_start`` covers ``[s_start, s_start + length]`` and points are
obtained through ``param(s % total_length)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import GeometryError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def as_points(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != 2:
        raise GeometryError(f"expected points with 2 coordinates, got shape {arr.shape}")
    return arr


def rot_minus90(v):
    """Rotation by -pi/2: (x, y) -> (y, -x)."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def rot_plus90(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def golden_min(fun, lo, hi, iters=80):
    """Vectorized golden-section minimization of ``fun`` on ``[lo, hi]``.

    ``fun`` maps an array of abscissae to an array of values of the same
    shape; each entry is minimized independently.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - _INVPHI * (b - a), a + _INVPHI * (b - a))
        fn = fun(new)
        d, fd, c, fc = (
            np.where(left, c, new),
            np.where(left, fc, fn),
            np.where(left, new, d),
            np.where(left, fn, fd),
        )
    x = 0.5 * (a + b)
    return x, fun(x)


def bisect_predicate(pred, lo, hi, iters=60):
    """Locate the switch of a boolean predicate with ``pred(lo) != pred(hi)``.

    Returns the bracket ``(lo, hi)`` after ``iters`` halvings; ``pred`` keeps
    its value at ``lo`` on the returned ``lo``.
    """
    p_lo = pred(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if pred(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


# ---------------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------------


class ConvexBoundary:
    """Closed, positively oriented convex curve parametrized by arclength."""

    kind = "abstract"
    strictly_convex = False
    total_length: float
    diam: float

    def param(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def outward_normal(self, s):
        return rot_minus90(self.tangent(s))

    def contains(self, p, tol=0.0):
        """Closed-domain membership, ``tol`` absolute in length units."""
        raise NotImplementedError

    def green(self, s0, s1):
        """Half of the integral of ``x dy - y dx`` along the boundary from s0 to s1 (s1 >= s0)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def breakpoints(self) -> np.ndarray:
        """Parameters of corners (empty for smooth boundaries)."""
        return np.empty(0)

    @property
    def tol(self) -> float:
        return 1e-9 * self.total_length

    def wrap(self, s):
        return np.mod(s, self.total_length)

    def sample(self, n):
        s = np.linspace(0.0, self.total_length, n, endpoint=False)
        if self.breakpoints.size:
            s = np.union1d(s, self.breakpoints)
        return s

    def bounding_box(self):
        pts = self.param(self.sample(4096))
        return pts.min(axis=0), pts.max(axis=0)

    def locate(self, p):
        """Arclength parameter of the nearest boundary point (vectorized)."""
        pts = as_points(p)
        flat = pts.reshape(-1, 2)
        s, _ = self._nearest_generic(flat)
        return s.reshape(pts.shape[:-1])

    def _nearest_generic(self, pts, n=4096, chunk=512):
        P = self.total_length
        grid = np.linspace(0.0, P, n, endpoint=False)
        B = self.param(grid)
        k = np.empty(len(pts), dtype=int)
        for i in range(0, len(pts), chunk):
            blk = pts[i : i + chunk]
            d2 = ((blk[:, None, :] - B[None, :, :]) ** 2).sum(-1)
            k[i : i + chunk] = np.argmin(d2, axis=1)
        h = P / n
        lo = grid[k] - h
        hi = grid[k] + h

        def dist(s):
            return np.linalg.norm(self.param(s) - pts, axis=-1)

        s, d = golden_min(dist, lo, hi)
        return np.mod(s, P), d

    def line_crossings(self, anchor, normal, n=8192):
        """Parameters where the line ``normal . (x - anchor) = 0`` crosses the boundary."""
        anchor = np.asarray(anchor, float)
        normal = np.asarray(normal, float)
        s = self.sample(n)
        vals = (self.param(s) - anchor) @ normal
        out = []
        m = len(s)
        for i in range(m):
            j = (i + 1) % m
            v0, v1 = vals[i], vals[j]
            if v0 == 0.0:
                out.append(s[i])
                continue
            if v0 * v1 < 0.0:
                a = s[i]
                b = s[j] if j > i else s[j] + self.total_length
                fa = v0
                for _ in range(200):
                    mid = 0.5 * (a + b)
                    if mid in (a, b):
                        break
                    fm = (self.param(mid) - anchor) @ normal
                    if fm == 0.0:
                        a = b = mid
                        break
                    if (fm < 0) == (fa < 0):
                        a, fa = mid, fm
                    else:
                        b = mid
                out.append(float(np.mod(0.5 * (a + b), self.total_length)))
        return np.array(sorted(set(out)))

    def arc(self, s_start, s_end) -> "BoundaryArc":
        """Arc traversed positively from ``s_start`` to ``s_end`` (mod total length)."""
        P = self.total_length
        s0 = float(np.mod(s_start, P))
        length = float(np.mod(s_end - s_start, P))
        if length == 0.0:
            length = P
        return BoundaryArc(self, s0, length)

    def full_arc(self) -> "BoundaryArc":
        return BoundaryArc(self, 0.0, self.total_length)


class Circle(ConvexBoundary):
    kind = "circle"
    strictly_convex = True

    def __init__(self, radius=1.0, center=(0.0, 0.0)):
        if radius <= 0:
            raise GeometryError("circle radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.total_length = 2.0 * math.pi * self.radius
        self.diam = 2.0 * self.radius

    def angle(self, s):
        return np.asarray(s, float) / self.radius

    def param(self, s):
        th = self.angle(s)
        return self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def tangent(self, s):
        th = self.angle(s)
        return np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def outward_normal(self, s):
        th = self.angle(s)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    def contains(self, p, tol=0.0):
        d = np.linalg.norm(as_points(p) - self.center, axis=-1)
        return d <= self.radius + tol

    def locate(self, p):
        q = as_points(p) - self.center
        th = np.arctan2(q[..., 1], q[..., 0])
        s = np.mod(th, 2.0 * math.pi) * self.radius
        at_center = np.hypot(q[..., 0], q[..., 1]) == 0.0
        return np.where(at_center, 0.0, s)

    def green(self, s0, s1):
        r = self.radius
        cx, cy = self.center
        t0, t1 = s0 / r, s1 / r
        val = r * cx * (math.sin(t1) - math.sin(t0)) + r * r * (t1 - t0) - r * cy * (math.cos(t1) - math.cos(t0))
        return 0.5 * val

    def to_dict(self):
        return {"kind": "circle", "radius": self.radius, "center": self.center.tolist()}


class Polygon(ConvexBoundary):
    """Convex polygon given by its vertices; parameter starts at ``vertices[0]``."""

    kind = "polyline"

    def __init__(self, vertices, tol=1e-12):
        v = as_points(vertices).copy()
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area < 0:
            v = v[::-1].copy()
        e = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(e, axis=1)
        if np.any(lengths == 0):
            raise GeometryError("polygon has repeated vertices")
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = lengths.max() ** 2
        if np.any(cross < -tol * scale):
            raise GeometryError("polygon is not convex")
        self.vertices = v
        self.edges = e
        self.lengths = lengths
        self.unit = e / lengths[:, None]
        self.cum = np.concatenate([[0.0], np.cumsum(lengths)])
        self.total_length = float(self.cum[-1])
        diffs = v[:, None, :] - v[None, :, :]
        self.diam = float(np.sqrt((diffs**2).sum(-1)).max())

    @property
    def breakpoints(self):
        return self.cum[:-1].copy()

    def _index(self, s):
        s = np.mod(np.asarray(s, float), self.total_length)
        idx = np.searchsorted(self.cum, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.vertices) - 1)
        return s, idx

    def param(self, s):
        s, idx = self._index(s)
        return self.vertices[idx] + (s - self.cum[idx])[..., None] * self.unit[idx]

    def tangent(self, s):
        _, idx = self._index(s)
        return self.unit[idx]

    def contains(self, p, tol=0.0):
        q = as_points(p)
        rel = q[..., None, :] - self.vertices
        cr = self.edges[:, 0] * rel[..., 1] - self.edges[:, 1] * rel[..., 0]
        return np.all(cr / self.lengths >= -tol, axis=-1)

    def locate(self, p):
        q = as_points(p)
        flat = q.reshape(-1, 2)
        rel = flat[:, None, :] - self.vertices[None]
        lam = np.clip((rel * self.unit[None]).sum(-1), 0.0, self.lengths[None])
        foot = self.vertices[None] + lam[..., None] * self.unit[None]
        d = np.linalg.norm(flat[:, None, :] - foot, axis=-1)
        s = self.cum[:-1][None] + lam
        s = np.mod(s, self.total_length)
        dmin = d.min(axis=1, keepdims=True)
        cand = np.where(d <= dmin + 1e-12 * self.total_length, s, np.inf)
        return cand.min(axis=1).reshape(q.shape[:-1])

    def green(self, s0, s1):
        P = self.total_length
        ks = []
        base = math.floor(s0 / P) * P
        for k in range(-1, int(math.ceil((s1 - base) / P)) + 2):
            for c in self.cum[:-1]:
                x = base + k * P + c
                if s0 < x < s1:
                    ks.append(x)
        path = np.array([s0] + sorted(ks) + [s1])
        pts = self.param(path)
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def to_dict(self):
        return {"kind": "polyline", "points": self.vertices.tolist()}


class Rectangle(Polygon):
    """``(-L, L) x (-h, h)``; parameter 0 at the corner ``(L, -h)``.

    With this start, ``s`` in ``[0, 2h + 2L]`` runs up the right side and
    along the top (Gamma_1 = v_1 u h_1) and the rest is the left side and the
    bottom (Gamma_2 = v_2 u h_2).
    """

    kind = "rectangle"

    def __init__(self, L, h):
        if L <= 0 or h <= 0:
            raise GeometryError("rectangle half-sides must be positive")
        self.L = float(L)
        self.h = float(h)
        super().__init__([(L, -h), (L, h), (-L, h), (-L, -h)])

    def contains(self, p, tol=0.0):
        q = as_points(p)
        return (np.abs(q[..., 0]) <= self.L + tol) & (np.abs(q[..., 1]) <= self.h + tol)

    def locate(self, p):
        q = as_points(p)
        L, h = self.L, self.h
        x = np.clip(q[..., 0], -L, L)
        y = np.clip(q[..., 1], -h, h)
        # feet on the right, top, left and bottom sides with their parameters
        d = np.stack([np.abs(q[..., 0] - L), np.abs(q[..., 1] - h), np.abs(q[..., 0] + L), np.abs(q[..., 1] + h)])
        off = np.stack([np.abs(q[..., 1] - y), np.abs(q[..., 0] - x), np.abs(q[..., 1] - y), np.abs(q[..., 0] - x)])
        d = np.hypot(d, off)
        s = np.stack([y + h, 2 * h + (L - x), 2 * h + 2 * L + (h - y), 4 * h + 2 * L + (x + L)])
        s = np.mod(s, self.total_length)
        dmin = d.min(axis=0)
        return np.where(d <= dmin + 1e-12 * self.total_length, s, np.inf).min(axis=0)

    @property
    def gamma1(self):
        return BoundaryArc(self, 0.0, 2 * self.h + 2 * self.L)

    @property
    def gamma2(self):
        return BoundaryArc(self, 2 * self.h + 2 * self.L, 2 * self.h + 2 * self.L)

    @property
    def alpha(self):
        return math.atan2(self.h, self.L)

    def to_dict(self):
        return {"kind": "rectangle", "L": self.L, "h": self.h}


class Superellipse(ConvexBoundary):
    """``|x/a|^p + |y/a|^p = 1`` for ``p > 1``, built on the polar angle.

    Points are always exactly on the curve; the arclength table is inverted
    with a cubic spline.
    """

    kind = "superellipse"
    strictly_convex = True

    def __init__(self, p=4.0, a=1.0, n_table=8193):
        if p <= 1.0:
            raise GeometryError("superellipse exponent must exceed 1 for convexity")
        self.p = float(p)
        self.a = float(a)
        phi = np.linspace(0.0, 2.0 * math.pi, n_table)
        speed = np.hypot(self._r(phi), self._dr(phi))
        s = integrate.cumulative_simpson(speed, x=phi, initial=0.0)
        self.total_length = float(s[-1])
        self._phi_of_s = CubicSpline(s, phi)
        self._s_of_phi = CubicSpline(phi, s)
        self.diam = 2.0 * float(self._r(np.linspace(0, 2 * math.pi, 20001)).max())

    def _F(self, phi):
        return np.abs(np.cos(phi)) ** self.p + np.abs(np.sin(phi)) ** self.p

    def _r(self, phi):
        return self.a * self._F(phi) ** (-1.0 / self.p)

    def _dr(self, phi):
        c, s, p = np.cos(phi), np.sin(phi), self.p
        dF = p * np.abs(c) ** (p - 1) * np.sign(c) * (-s) + p * np.abs(s) ** (p - 1) * np.sign(s) * c
        return -self.a / p * self._F(phi) ** (-1.0 / p - 1.0) * dF

    def phi(self, s):
        return self._phi_of_s(np.mod(np.asarray(s, float), self.total_length))

    def param(self, s):
        ph = self.phi(s)
        r = self._r(ph)
        return np.stack([r * np.cos(ph), r * np.sin(ph)], axis=-1)

    def tangent(self, s):
        ph = self.phi(s)
        r, dr = self._r(ph), self._dr(ph)
        t = np.stack([dr * np.cos(ph) - r * np.sin(ph), dr * np.sin(ph) + r * np.cos(ph)], axis=-1)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    def contains(self, p, tol=0.0):
        q = as_points(p)
        ph = np.arctan2(q[..., 1], q[..., 0])
        return np.hypot(q[..., 0], q[..., 1]) <= self._r(ph) + tol

    def green(self, s0, s1):
        P = self.total_length
        turns0, r0 = divmod(s0, P)
        turns1, r1 = divmod(s1, P)
        phi0 = float(self._phi_of_s(r0)) + 2 * math.pi * turns0
        phi1 = float(self._phi_of_s(r1)) + 2 * math.pi * turns1
        # r is only finitely smooth on the axes when p is not an even integer
        k0, k1 = math.floor(phi0 / (0.5 * math.pi)) + 1, math.ceil(phi1 / (0.5 * math.pi)) - 1
        edges = [phi0] + [0.5 * math.pi * k for k in range(k0, k1 + 1)] + [phi1]
        val = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                val += integrate.quad(lambda t: self._r(t) ** 2, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        return 0.5 * val

    def to_dict(self):
        return {"kind": "superellipse", "p": self.p, "a": self.a}


def make_boundary(spec: dict) -> ConvexBoundary:
    kind = spec.get("kind")
    if kind == "circle":
        return Circle(spec.get("radius", 1.0), spec.get("center", (0.0, 0.0)))
    if kind == "rectangle":
        return Rectangle(spec["L"], spec["h"])
    if kind == "superellipse":
        return Superellipse(spec.get("p", 4.0), spec.get("a", 1.0))
    if kind == "polyline":
        return Polygon(spec["points"])
    raise GeometryError(f"unknown boundary kind {kind!r}")


# ---------------------------------------------------------------------------
# Arcs, chords, half planes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryArc:
    boundary: ConvexBoundary
    s_start: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise GeometryError("arc must have positive length")

    @property
    def s_end(self):
        return self.s_start + self.length

    @property
    def endpoint_a(self):
        return self.boundary.param(self.s_start)

    @property
    def endpoint_b(self):
        return self.boundary.param(self.s_end)

    @property
    def is_full(self):
        return abs(self.length - self.boundary.total_length) <= self.boundary.tol

    def local(self, s):
        """Offset from ``s_start`` in ``[0, total_length)``."""
        return np.mod(np.asarray(s, float) - self.s_start, self.boundary.total_length)

    def unwrap(self, s):
        return self.s_start + self.local(s)

    def contains(self, s, tol=None):
        tol = self.boundary.tol if tol is None else tol
        loc = self.local(s)
        P = self.boundary.total_length
        return (loc <= self.length + tol) | (loc >= P - tol)

    def interior_contains(self, s, tol=None):
        tol = self.boundary.tol if tol is None else tol
        loc = self.local(s)
        return (loc > tol) & (loc < self.length - tol)

    def complement(self) -> "BoundaryArc":
        P = self.boundary.total_length
        return BoundaryArc(self.boundary, float(np.mod(self.s_end, P)), P - self.length)

    def sample(self, n, endpoints=True):
        if endpoints:
            return self.s_start + np.linspace(0.0, self.length, n)
        return self.s_start + (np.arange(n) + 0.5) * self.length / n

    def points(self, n):
        return self.boundary.param(self.sample(n))


@dataclass(frozen=True)
class Chord:
    p: np.ndarray
    q: np.ndarray

    @property
    def length(self):
        return float(np.linalg.norm(np.asarray(self.q) - np.asarray(self.p)))

    @property
    def midpoint(self):
        return 0.5 * (np.asarray(self.p) + np.asarray(self.q))

    def as_list(self):
        return [np.asarray(self.p).tolist(), np.asarray(self.q).tolist()]


@dataclass(frozen=True)
class HalfPlane:
    """Closed half plane ``{x : normal . (x - anchor) >= 0}``."""

    anchor: np.ndarray
    normal: np.ndarray

    @classmethod
    def through(cls, p, q, keep=None, drop=None):
        """Half plane bounded by the line through p and q.

        Orientation is fixed by a reference point that must be inside
        (``keep``) or outside (``drop``).
        """
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        d = q - p
        nrm = np.linalg.norm(d)
        if nrm == 0.0:
            raise GeometryError("degenerate half plane: coincident points")
        n = rot_plus90(d / nrm)
        if keep is not None:
            if np.dot(np.asarray(keep, float) - p, n) < 0:
                n = -n
        elif drop is not None:
            if np.dot(np.asarray(drop, float) - p, n) > 0:
                n = -n
        return cls(p, n)

    @property
    def direction(self):
        """Unit direction of the boundary line with the half plane on its left."""
        return rot_minus90(self.normal)

    def signed(self, x):
        return (as_points(x) - self.anchor) @ self.normal

    def contains(self, x, tol=0.0):
        return self.signed(x) >= -tol

    def flipped(self):
        return HalfPlane(self.anchor, -self.normal)


def project_to_boundary(boundary: ConvexBoundary, p) -> float:
    """Arclength parameter of the nearest boundary point; ties go to the smallest s."""
    return float(boundary.locate(np.asarray(p, float)))


# ---------------------------------------------------------------------------
# Distance to an arc
# ---------------------------------------------------------------------------


class ArcDistance(NamedTuple):
    d: float
    minimizers: list
    params: list
    best: float


def _circle_candidates(boundary: Circle, x, arc: BoundaryArc):
    q = np.asarray(x, float) - boundary.center
    cand = [arc.s_start, arc.s_end]
    if np.hypot(*q) > 0:
        s = boundary.locate(x)
        if arc.contains(s, tol=0.0):
            cand.append(float(arc.unwrap(s)))
    return np.array(cand)


def _arc_local_minima(x, arc: BoundaryArc, n=2048):
    b = arc.boundary
    s = arc.sample(n)
    d = np.linalg.norm(b.param(s) - x, axis=-1)
    left = np.concatenate([[np.inf], d[:-1]])
    right = np.concatenate([d[1:], [np.inf]])
    idx = np.flatnonzero((d <= left) & (d <= right))
    lo = s[np.maximum(idx - 1, 0)]
    hi = s[np.minimum(idx + 1, n - 1)]
    sm, _ = golden_min(lambda t: np.linalg.norm(b.param(t) - x, axis=-1), lo, hi)
    cand = np.concatenate([[arc.s_start, arc.s_end], sm])
    return np.array(cand)


def distance_to_arc(x, upsilon: BoundaryArc, tol_min=None) -> ArcDistance:
    """Distance from ``x`` to the closed arc and every point attaining it."""
    if upsilon is None or not upsilon.length > 0:
        raise GeometryError("empty arc")
    b = upsilon.boundary
    x = np.asarray(x, float)
    tol_min = 1e-9 * b.diam if tol_min is None else tol_min
    if isinstance(b, Circle):
        cand = _circle_candidates(b, x, upsilon)
    else:
        cand = _arc_local_minima(x, upsilon)
    # snap numerically refined candidates onto the endpoints
    snap = 1e-10 * upsilon.length
    cand = np.where(np.abs(cand - upsilon.s_start) < snap, upsilon.s_start, cand)
    cand = np.where(np.abs(cand - upsilon.s_end) < snap, upsilon.s_end, cand)
    dist = np.linalg.norm(b.param(cand) - x, axis=-1)
    dmin = float(dist.min())
    best = float(cand[np.argmin(dist)])
    keep = np.sort(cand[dist <= dmin + tol_min])
    uniq = []
    for s in keep:
        if not uniq or s - uniq[-1] > 1e-7 * upsilon.length:
            uniq.append(float(s))
    return ArcDistance(dmin, [b.param(s) for s in uniq], uniq, best)


def nearest_on_arc(points, upsilon: BoundaryArc, n=1024):
    """Vectorized nearest point on the closed arc: ``(params, distances)``.

    Ties resolve to the smallest arc parameter; use :func:`distance_to_arc`
    when the full minimizer set matters.
    """
    pts = as_points(points).reshape(-1, 2)
    b = upsilon.boundary
    if isinstance(b, Circle):
        # candidates: both endpoints and the radial foot when it lies on the arc
        q = pts - b.center
        radial = upsilon.unwrap(b.locate(pts))
        ok = (np.hypot(q[:, 0], q[:, 1]) > 0) & upsilon.contains(radial, tol=0.0)
        cand = np.stack([np.full(len(pts), upsilon.s_start), np.full(len(pts), upsilon.s_end), radial], axis=1)
        d = np.linalg.norm(b.param(cand) - pts[:, None, :], axis=-1)
        d[:, 2] = np.where(ok, d[:, 2], np.inf)
        tie = d <= d.min(axis=1, keepdims=True) + 1e-12 * b.diam
        k = np.argmin(np.where(tie, cand, np.inf), axis=1)
        rows = np.arange(len(pts))
        return cand[rows, k], d[rows, k]
    s = upsilon.sample(n)
    B = b.param(s)
    k = np.empty(len(pts), dtype=int)
    for i in range(0, len(pts), 256):
        blk = pts[i : i + 256]
        k[i : i + 256] = np.argmin(((blk[:, None, :] - B[None]) ** 2).sum(-1), axis=1)
    lo = s[np.maximum(k - 1, 0)]
    hi = s[np.minimum(k + 1, n - 1)]
    sm, dm = golden_min(lambda t: np.linalg.norm(b.param(t) - pts, axis=-1), lo, hi)
    snap = 1e-10 * upsilon.length
    for end in (upsilon.s_start, upsilon.s_end):
        de = np.linalg.norm(b.param(np.full(len(pts), end)) - pts, axis=-1)
        better = (de <= dm) | (np.abs(sm - end) < snap)
        sm = np.where(better, end, sm)
        dm = np.where(better, de, dm)
    return sm, dm


# ---------------------------------------------------------------------------
# Classification of Gamma points by their nearest points on Upsilon
# ---------------------------------------------------------------------------


@dataclass
class DistanceClassification:
    """Sets S, U, D and the endpoint intervals B_a, B_b on Gamma.

    Parameters are unwrapped boundary parameters of Gamma.  ``D`` is taken
    with respect to the closed arc Upsilon; ``D_open`` keeps only the points
    whose minimizers meet the open arc (the stricter convention).
    """

    gamma: BoundaryArc
    upsilon: BoundaryArc
    samples: np.ndarray
    S: np.ndarray
    U: np.ndarray
    D: list
    D_open: list
    phi: dict
    B_a: tuple
    B_b: tuple
    s_a: float
    s_b: float
    inf_S: float | None
    sup_S: float | None
    corollary_residual: float | None = None
    feet: np.ndarray = field(default=None, repr=False)

    def minimizers(self, s):
        """Minimizer points on the closed Upsilon for the Gamma parameter ``s``."""
        return distance_to_arc(self.gamma.boundary.param(s), self.upsilon).minimizers


def _check_complementary(gamma: BoundaryArc, upsilon: BoundaryArc):
    b = gamma.boundary
    if upsilon.boundary is not b:
        raise GeometryError("arcs live on different boundaries")
    P = b.total_length
    ok = abs(gamma.length + upsilon.length - P) <= b.tol and (
        abs(np.mod(gamma.s_end - upsilon.s_start + P / 2, P) - P / 2) <= b.tol
    )
    if not ok:
        raise GeometryError("Gamma and Upsilon are not complementary arcs")


def classify_distance_structure(gamma: BoundaryArc, upsilon: BoundaryArc, n_samples=512) -> DistanceClassification:
    _check_complementary(gamma, upsilon)
    if n_samples < 16:
        raise GeometryError("n_samples must be at least 16")
    b = gamma.boundary
    tol_s = b.tol
    tol_d = 1e-9 * b.diam
    a_pt, b_pt = gamma.endpoint_a, gamma.endpoint_b
    gap = 1e-4 * b.total_length
    s = gamma.sample(n_samples, endpoints=False)

    def info(si):
        x = b.param(si)
        r = distance_to_arc(x, upsilon)
        foot = upsilon.local(r.best)
        in_open = any(upsilon.interior_contains(p, tol_s) for p in r.params)
        in_a = np.linalg.norm(x - a_pt) <= r.d + tol_d
        in_b = np.linalg.norm(x - b_pt) <= r.d + tol_d
        return r, float(foot), bool(in_open), bool(in_a), bool(in_b)

    rows = [info(si) for si in s]
    feet = np.array([r[1] for r in rows])
    in_S = np.array([r[2] for r in rows])
    in_Ba = np.array([r[3] for r in rows])
    in_Bb = np.array([r[4] for r in rows])
    multi = np.array([len(r[0].params) >= 2 for r in rows])

    D = [float(si) for si in s[multi]]
    for k in range(len(s) - 1):
        if abs(feet[k + 1] - feet[k]) <= gap:
            continue
        lo, hi = s[k], s[k + 1]
        f_lo, f_hi = feet[k], feet[k + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            f_mid = info(mid)[1]
            if abs(f_mid - f_lo) >= abs(f_hi - f_mid):
                hi, f_hi = mid, f_mid
            else:
                lo, f_lo = mid, f_mid
        if abs(f_hi - f_lo) > gap:
            D.append(0.5 * (lo + hi))
    D.sort()
    D_dedup = []
    for d in D:
        if not D_dedup or d - D_dedup[-1] > gap:
            D_dedup.append(d)

    phi = {}
    D_open = []
    for d in D_dedup:
        x = b.param(d)
        r = distance_to_arc(x, upsilon, tol_min=1e-7 * b.diam)
        phi[d] = r.minimizers
        if any(upsilon.interior_contains(p, tol_s) for p in r.params):
            D_open.append(d)

    # B_a grows from the start of Gamma, B_b from its end
    if in_Ba[0]:
        k = int(np.argmin(in_Ba)) if not in_Ba.all() else len(s)
        if k == len(s):
            s_a = gamma.s_end
        else:
            s_a = bisect_predicate(lambda t: info(t)[3], s[k - 1], s[k])[0]
    else:
        s_a = gamma.s_start
    if in_Bb[-1]:
        rev = in_Bb[::-1]
        k = int(np.argmin(rev)) if not rev.all() else len(s)
        if k == len(s):
            s_b = gamma.s_start
        else:
            j = len(s) - 1 - k
            s_b = bisect_predicate(lambda t: info(t)[4], s[j + 1], s[j])[0]
    else:
        s_b = gamma.s_end

    inf_S = sup_S = None
    residual = None
    if in_S.any():
        first = int(np.argmax(in_S))
        last = len(s) - 1 - int(np.argmax(in_S[::-1]))
        inf_S = s[first] if first == 0 else bisect_predicate(lambda t: info(t)[2], s[first], s[first - 1])[0]
        sup_S = s[last] if last == len(s) - 1 else bisect_predicate(lambda t: info(t)[2], s[last], s[last + 1])[0]
        residual = max(abs(s_a - inf_S), abs(s_b - sup_S))

    return DistanceClassification(
        gamma=gamma,
        upsilon=upsilon,
        samples=s,
        S=s[in_S],
        U=s[~multi],
        D=D_dedup,
        D_open=D_open,
        phi=phi,
        B_a=(gamma.s_start, float(s_a)),
        B_b=(float(s_b), gamma.s_end),
        s_a=float(s_a),
        s_b=float(s_b),
        inf_S=None if inf_S is None else float(inf_S),
        sup_S=None if sup_S is None else float(sup_S),
        corollary_residual=residual,
        feet=feet,
    )


# ---------------------------------------------------------------------------
# Regions cut out by half planes
# ---------------------------------------------------------------------------


@dataclass
class Region:
    """Convex region ``Omega n H_1 n ... n H_k``.

    Its boundary is stored as arcs of the domain boundary (unwrapped
    parameter pairs) plus straight pieces oriented counter-clockwise.
    """

    boundary: ConvexBoundary
    halfplanes: list
    arcs: list
    segments: list
    area: float

    def contains(self, pts, tol=None):
        tol = 1e-12 * self.boundary.diam if tol is None else tol
        pts = as_points(pts)
        ok = self.boundary.contains(pts, tol)
        for hp in self.halfplanes:
            ok &= hp.contains(pts, tol)
        return ok

    def polygon(self, n_arc=64):
        pts = []
        for s0, s1 in self.arcs:
            m = max(2, int(n_arc * (s1 - s0) / self.boundary.total_length) + 2)
            pts.append(self.boundary.param(np.linspace(s0, s1, m)))
        for p, q in self.segments:
            pts.append(np.array([p, q]))
        if not pts:
            return np.empty((0, 2))
        P = np.concatenate(pts)
        c = P.mean(axis=0)
        ang = np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0])
        P = P[np.argsort(ang)]
        keep = np.ones(len(P), bool)
        keep[1:] = np.linalg.norm(np.diff(P, axis=0), axis=1) > 1e-12
        return P[keep]

    def to_dict(self):
        return {
            "area": self.area,
            "halfplanes": [{"anchor": h.anchor.tolist(), "normal": h.normal.tolist()} for h in self.halfplanes],
            "arcs": [[float(a), float(b)] for a, b in self.arcs],
            "segments": [[np.asarray(p).tolist(), np.asarray(q).tolist()] for p, q in self.segments],
            "polygon": self.polygon().tolist(),
        }


def half_plane_region(halfplanes, domain: ConvexBoundary) -> Region:
    """Intersection of the domain with closed half planes, with its area.

    The area is evaluated by Green's theorem: exact line pieces plus the
    boundary's own arc integral, so no polygonal approximation of the
    curved parts is involved.
    """
    hps = list(halfplanes)
    P = domain.total_length
    crossings = [domain.line_crossings(h.anchor, h.normal) for h in hps]
    cuts = np.concatenate([c for c in crossings] + [domain.breakpoints, [0.0]])
    cuts = np.unique(np.mod(cuts, P))

    def inside(pt):
        return all(h.signed(pt) >= 0.0 for h in hps)

    arcs = []
    if len(cuts) == 1 and not hps:
        arcs = [(0.0, P)]
    else:
        ext = np.append(cuts, cuts[0] + P)
        pieces = []
        for s0, s1 in zip(ext[:-1], ext[1:]):
            if s1 - s0 <= 0:
                continue
            if inside(domain.param(0.5 * (s0 + s1))):
                pieces.append([s0, s1])
        # merge pieces that touch, including across the parameter origin
        merged = []
        for pc in pieces:
            if merged and abs(merged[-1][1] - pc[0]) <= 1e-14 * P:
                merged[-1][1] = pc[1]
            else:
                merged.append(list(pc))
        if len(merged) > 1 and abs(merged[-1][1] - (merged[0][0] + P)) <= 1e-14 * P:
            last = merged.pop()
            merged[0] = [last[0], merged[0][1] + P]
        arcs = [tuple(m) for m in merged]

    segments = []
    for i, h in enumerate(hps):
        cr = crossings[i]
        if len(cr) < 2:
            continue
        pts = domain.param(cr)
        d = h.direction
        proj = pts @ d
        p, q = pts[np.argmin(proj)], pts[np.argmax(proj)]
        lo, hi = 0.0, 1.0
        for j, g in enumerate(hps):
            if j == i:
                continue
            sp, sq = g.signed(p), g.signed(q)
            if sp < 0 and sq < 0:
                lo, hi = 1.0, 0.0
                break
            if sp < 0 or sq < 0:
                lam = sp / (sp - sq)
                if sp < 0:
                    lo = max(lo, lam)
                else:
                    hi = min(hi, lam)
        if hi - lo > 1e-14:
            segments.append((p + lo * (q - p), p + hi * (q - p)))

    area = sum(domain.green(s0, s1) for s0, s1 in arcs)
    for p, q in segments:
        area += 0.5 * (p[0] * q[1] - q[0] * p[1])
    area = max(area, 0.0)
    return Region(domain, hps, arcs, segments, float(area))
