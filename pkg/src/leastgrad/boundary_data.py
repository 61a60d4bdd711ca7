"""Dirichlet data on a boundary arc.

A :class:`BoundaryFunction` is an ordered list of pieces, each strictly
monotone or constant, covering an arc.  Pieces are functions of the
*unwrapped* boundary parameter, so that queries never need to reason about
the parameter origin.  Between pieces the datum may jump; the jump heights
become the atoms of the tangential derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ValidationError
from .geometry import BoundaryArc, ConvexBoundary, Rectangle, golden_min

INCREASING = "increasing"
DECREASING = "decreasing"
CONSTANT = "constant"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _scalar(x) -> float:
    return float(np.asarray(x).reshape(-1)[0])


@dataclass(frozen=True)
class Piece:
    """Restriction of the datum to ``[s0, s1]`` (unwrapped parameters)."""

    s0: float
    s1: float
    func: Callable
    kind: str
    deriv: Callable | None = None
    knots: np.ndarray | None = None

    def __call__(self, s):
        return self.func(np.asarray(s, float))

    @property
    def v0(self):
        return float(self.func(np.asarray(self.s0)))

    @property
    def v1(self):
        return float(self.func(np.asarray(self.s1)))

    def density(self, s):
        s = np.asarray(s, float)
        if self.kind == CONSTANT:
            return np.zeros_like(s)
        if self.deriv is not None:
            return self.deriv(s)
        h = 1e-6 * (self.s1 - self.s0)
        lo = np.clip(s - h, self.s0, self.s1)
        hi = np.clip(s + h, self.s0, self.s1)
        return (self.func(hi) - self.func(lo)) / (hi - lo)

    def inverse(self, t, iters=64):
        """Parameters where this monotone piece equals ``t`` (vectorized, t inside the range)."""
        t = np.asarray(t, float)
        lo = np.full(t.shape, self.s0)
        hi = np.full(t.shape, self.s1)
        sign = 1.0 if self.kind == INCREASING else -1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            below = sign * (self.func(mid) - t) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


@dataclass
class LevelPreimage:
    t: float
    params: list
    points: list
    flags: list = field(default_factory=list)

    @property
    def x(self):
        return self.points[0] if self.points else None

    @property
    def y(self):
        return self.points[1] if len(self.points) > 1 else None


@dataclass
class TraceMeasure:
    """The tangential derivative: point atoms plus an absolutely continuous part."""

    boundary: ConvexBoundary
    atoms: list
    pieces: list

    def density(self, s):
        s = np.atleast_1d(np.asarray(s, float))
        out = np.zeros_like(s)
        for pc in self.pieces:
            m = (s >= pc.s0) & (s <= pc.s1)
            if m.any():
                out[m] = pc.density(s[m])
        return out

    @property
    def total_mass(self):
        mass = sum(w for _, w in self.atoms)
        for pc in self.pieces:
            if pc.kind != CONSTANT:
                mass += pc.v1 - pc.v0
        return mass

    def pair(self, phi, epsrel=1e-10):
        """``sum w_i phi(x(s_i)) + integral of phi * density ds``.

        ``phi`` takes an ``(..., 2)`` array of points.
        """
        b = self.boundary
        val = 0.0
        for s, w in self.atoms:
            val += w * _scalar(phi(b.param(np.asarray(s))))
        corners = b.breakpoints
        P = b.total_length
        for pc in self.pieces:
            if pc.kind == CONSTANT:
                continue
            inner = []
            for c in corners:
                k0 = math.floor((pc.s0 - c) / P)
                for k in range(k0, k0 + 3):
                    x = c + k * P
                    if pc.s0 < x < pc.s1:
                        inner.append(x)
            if pc.knots is not None:
                # piecewise-linear data: the density jumps at every knot
                inner.extend(float(x) for x in pc.knots if pc.s0 < x < pc.s1)
            edges = [pc.s0] + sorted(set(inner)) + [pc.s1]
            if pc.knots is not None:
                # one Gauss-Legendre panel per knot interval, all at once
                e = np.asarray(edges)
                mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * (e[1:] - e[:-1])
                s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
                vals = np.asarray(phi(b.param(s.ravel())), float).reshape(s.shape) * pc.density(mid)[:, None]
                val += float(np.sum(half * (vals @ _GL_WEIGHTS)))
                continue
            for lo, hi in zip(edges[:-1], edges[1:]):
                res, _ = integrate.quad(
                    lambda s: _scalar(phi(b.param(np.asarray(s)))) * _scalar(pc.density(np.asarray(s))),
                    lo,
                    hi,
                    epsabs=1e-13,
                    epsrel=epsrel,
                    limit=200,
                )
                val += res
        return val

    def to_dict(self):
        return {
            "atoms": [{"s": float(s), "weight": float(w)} for s, w in self.atoms],
            "total_mass": float(self.total_mass),
        }


class BoundaryFunction:
    """Piecewise monotone / constant datum on an arc."""

    def __init__(self, arc: BoundaryArc, pieces, name="datum", modulus=None):
        if not pieces:
            raise ValidationError("datum needs at least one piece", clause="pieces")
        pieces = sorted(pieces, key=lambda p: p.s0)
        tol = arc.boundary.tol
        if abs(pieces[0].s0 - arc.s_start) > tol or abs(pieces[-1].s1 - arc.s_end) > tol:
            raise ValidationError("pieces do not cover the arc", clause="pieces")
        for p, q in zip(pieces[:-1], pieces[1:]):
            if abs(p.s1 - q.s0) > tol:
                raise ValidationError("pieces overlap or leave a gap", clause="pieces")
        self.arc = arc
        self.boundary = arc.boundary
        self.pieces = list(pieces)
        self.name = name
        self._starts = np.array([p.s0 for p in self.pieces])
        ends = [p.v0 for p in self.pieces] + [p.v1 for p in self.pieces]
        self.m = float(min(ends))
        self.M = float(max(ends))
        self.f_a = self.pieces[0].v0
        self.f_b = self.pieces[-1].v1
        self._modulus = modulus

    # -- evaluation ---------------------------------------------------------
    def _piece_index(self, s_unwrapped):
        idx = np.searchsorted(self._starts, s_unwrapped, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, s):
        s = np.asarray(s, float)
        u = self.arc.unwrap(s)
        # the arc end maps to local 0 for full loops; keep it at the start
        idx = self._piece_index(u)
        out = np.empty(u.shape)
        flat_u = np.atleast_1d(u)
        flat_i = np.atleast_1d(idx)
        res = np.empty(flat_u.shape)
        for k in np.unique(flat_i):
            m = flat_i == k
            res[m] = self.pieces[k](flat_u[m])
        out = res.reshape(u.shape) if u.shape else res[0]
        return out

    def at_unwrapped(self, s):
        """Evaluate at unwrapped parameters in ``[s_start, s_end]`` (end inclusive)."""
        s = np.atleast_1d(np.asarray(s, float))
        idx = self._piece_index(s)
        out = np.empty(s.shape)
        for k in np.unique(idx):
            m = idx == k
            out[m] = self.pieces[k](s[m])
        return out

    def at_point(self, p):
        return self(self.boundary.locate(p))

    @property
    def is_closed_loop(self):
        return self.arc.is_full

    @property
    def continuous(self):
        tol = 1e-12 * max(1.0, self.M - self.m)
        jumps = [abs(p.v1 - q.v0) for p, q in zip(self.pieces[:-1], self.pieces[1:])]
        if self.is_closed_loop:
            jumps.append(abs(self.f_b - self.f_a))
        return all(j <= tol for j in jumps)

    @property
    def tol_f(self):
        return 1e-10 * max(self.M - self.m, 1e-300)

    def max_slope(self):
        """Largest arclength slope over the monotone pieces."""
        best = 0.0
        for pc in self.pieces:
            if pc.kind == CONSTANT:
                continue
            s = np.linspace(pc.s0, pc.s1, 2049)
            v = pc(s)
            best = max(best, float(np.max(np.abs(np.diff(v)) / np.diff(s))))
            best = max(best, float(np.max(np.abs(pc.density(s)))))
        return best

    def modulus(self, r):
        """Modulus of continuity; linear with a slope taken from the pieces by default."""
        if self._modulus is not None:
            return self._modulus(r)
        kappa = math.sqrt(2.0) * self.max_slope() if isinstance(self.boundary, Rectangle) else self.max_slope()
        return kappa * np.asarray(r, float)

    # -- level sets ---------------------------------------------------------
    def preimage(self, t) -> LevelPreimage:
        t = float(t)
        params, flags = [], []
        tol = self.tol_f
        if t < self.m - tol or t > self.M + tol:
            return LevelPreimage(t, [], [], [])
        for pc in self.pieces:
            lo, hi = sorted((pc.v0, pc.v1))
            if pc.kind == CONSTANT:
                if abs(pc.v0 - t) <= tol:
                    params += [pc.s0, pc.s1]
                    flags += ["plateau", "plateau"]
                continue
            if lo - tol <= t <= hi + tol:
                s = float(pc.inverse(np.array(min(max(t, lo), hi))))
                params.append(s)
                flags.append("root")
        order = np.argsort(params)
        out_s, out_f = [], []
        gap = 1e-9 * self.boundary.total_length
        for k in order:
            if out_s and params[k] - out_s[-1] <= gap:
                if flags[k] == "plateau":
                    out_f[-1] = "plateau"
                continue
            out_s.append(float(params[k]))
            out_f.append(flags[k])
        if self.is_closed_loop and len(out_s) > 1 and out_s[-1] - out_s[0] >= self.arc.length - gap:
            out_s.pop()
            out_f.pop()
        pts = [self.boundary.param(s) for s in out_s]
        return LevelPreimage(t, out_s, pts, out_f)

    def monotone_preimages(self, t):
        """Vectorized per-piece roots: dict piece index -> array of params (NaN where absent)."""
        t = np.asarray(t, float)
        out = {}
        for k, pc in enumerate(self.pieces):
            if pc.kind == CONSTANT:
                continue
            lo, hi = sorted((pc.v0, pc.v1))
            inside = (t >= lo) & (t <= hi)
            s = pc.inverse(np.clip(t, lo, hi))
            out[k] = np.where(inside, s, np.nan)
        return out

    def superlevel_arcs(self, t, crossings=None):
        """Maximal arcs where ``f >= t``, as unwrapped ``(s0, s1)`` pairs.

        ``crossings`` may hold precomputed monotone-piece roots for ``t``.
        """
        if crossings is None:
            crossings = self.preimage(t).params
        cuts = sorted(set([self.arc.s_start, self.arc.s_end] + list(crossings)))
        for pc in self.pieces:
            cuts.append(pc.s0)
        cuts = np.unique(cuts)
        arcs = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo <= 1e-14:
                continue
            if float(self.at_unwrapped(0.5 * (lo + hi))[0]) >= t:
                if arcs and abs(arcs[-1][1] - lo) <= 1e-12:
                    arcs[-1][1] = hi
                else:
                    arcs.append([lo, hi])
        if self.is_closed_loop and len(arcs) > 1:
            if abs(arcs[0][0] - self.arc.s_start) <= 1e-12 and abs(arcs[-1][1] - self.arc.s_end) <= 1e-12:
                last = arcs.pop()
                arcs[0] = [last[0], arcs[0][1] + self.arc.length]
        return [tuple(a) for a in arcs]

    # -- derivative ---------------------------------------------------------
    def tangential_derivative(self) -> TraceMeasure:
        atoms = []
        tol = 1e-14 * max(1.0, abs(self.M), abs(self.m))
        for p, q in zip(self.pieces[:-1], self.pieces[1:]):
            jump = q.v0 - p.v1
            if abs(jump) > tol:
                atoms.append((float(np.mod(q.s0, self.boundary.total_length)), jump))
        if self.is_closed_loop:
            jump = self.f_a - self.f_b
            if abs(jump) > tol:
                atoms.append((float(np.mod(self.arc.s_start, self.boundary.total_length)), jump))
        return TraceMeasure(self.boundary, atoms, self.pieces)

    def to_dict(self):
        return {
            "name": self.name,
            "arc": [self.arc.s_start, self.arc.s_end],
            "pieces": [{"s0": p.s0, "s1": p.s1, "kind": p.kind} for p in self.pieces],
            "m": self.m,
            "M": self.M,
        }


def tangential_derivative(f: BoundaryFunction) -> TraceMeasure:
    return f.tangential_derivative()


def preimage(f: BoundaryFunction, t) -> LevelPreimage:
    return f.preimage(t)


def pair(g: TraceMeasure, phi) -> float:
    return g.pair(phi)


# ---------------------------------------------------------------------------
# Segmentation of generic data into monotone pieces
# ---------------------------------------------------------------------------


def _kind_of(sign):
    return {1: INCREASING, -1: DECREASING, 0: CONSTANT}[int(sign)]


def segment_callable(arc: BoundaryArc, func, n=4096, plateau_tol=1e-12, name="datum"):
    """Split ``func`` (of unwrapped parameter) at sign changes of its finite differences.

    Turning points between increasing and decreasing runs are refined by
    golden-section search so piece boundaries sit on the true extrema.
    """
    b = arc.boundary
    s = arc.sample(n)
    inner = [c + k * b.total_length for c in b.breakpoints for k in (-1, 0, 1, 2)]
    inner = [c for c in inner if arc.s_start < c < arc.s_end]
    s = np.unique(np.concatenate([s, inner]))
    v = func(s)
    scale = max(1.0, float(np.max(np.abs(v))))
    flat = np.abs(np.diff(v)) <= plateau_tol * scale
    if flat.any():
        # equal end values can straddle an extremum: only keep intervals flat at the midpoint too
        mids = 0.5 * (s[:-1] + s[1:])[flat]
        bumpy = np.abs(func(mids) - v[:-1][flat]) > plateau_tol * scale
        if bumpy.any():
            s = np.union1d(s, mids[bumpy])
            v = func(s)
    dv = np.diff(v)
    sign = np.where(np.abs(dv) <= plateau_tol * scale, 0, np.sign(dv)).astype(int)
    cuts = [s[0]]
    kinds = [sign[0]]
    for i in range(1, len(sign)):
        if sign[i] == sign[i - 1]:
            continue
        a, c = s[i - 1], s[i + 1]
        if sign[i - 1] != 0 and sign[i] != 0:
            mx = sign[i - 1] > 0
            target = (lambda x: -func(x)) if mx else func
            x, _ = golden_min(target, np.array([a]), np.array([c]))
            cut = float(x[0])
        else:
            cut = s[i]
        cuts.append(cut)
        kinds.append(sign[i])
    cuts.append(s[-1])
    pieces = []
    for (lo, hi), k in zip(zip(cuts[:-1], cuts[1:]), kinds):
        if hi - lo <= 0:
            continue
        if k == 0:
            val = float(func(np.array(0.5 * (lo + hi))))
            pieces.append(Piece(lo, hi, lambda x, val=val: np.full(np.shape(x), val), CONSTANT))
        else:
            pieces.append(Piece(lo, hi, func, _kind_of(k)))
    return BoundaryFunction(arc, pieces, name=name)


def from_samples(arc: BoundaryArc, values, plateau_tol=1e-12, name="samples"):
    """Piecewise-linear datum through equally spaced samples (endpoints included)."""
    values = np.asarray(values, float)
    if values.ndim != 1 or len(values) < 2:
        raise ValidationError("samples need at least two values", clause="values")
    if not np.all(np.isfinite(values)):
        raise ValidationError("samples must be finite", clause="values")
    knots = arc.s_start + np.linspace(0.0, arc.length, len(values))

    def func(s):
        return np.interp(s, knots, values)

    def deriv(s):
        k = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(knots) - 2)
        return (values[k + 1] - values[k]) / (knots[k + 1] - knots[k])

    scale = max(1.0, float(np.max(np.abs(values))))
    dv = np.diff(values)
    sign = np.where(np.abs(dv) <= plateau_tol * scale, 0, np.sign(dv)).astype(int)
    pieces = []
    start = 0
    for i in range(1, len(sign) + 1):
        if i == len(sign) or sign[i] != sign[start]:
            k = sign[start]
            lo, hi = knots[start], knots[i]
            if k == 0:
                val = float(values[start])
                pieces.append(Piece(lo, hi, lambda x, val=val: np.full(np.shape(x), val), CONSTANT))
            else:
                pieces.append(Piece(lo, hi, func, _kind_of(k), deriv, knots[start : i + 1]))
            start = i
    return BoundaryFunction(arc, pieces, name=name)


# ---------------------------------------------------------------------------
# Validation for the rectangle theorem
# ---------------------------------------------------------------------------


@dataclass
class MonotoneCheck:
    ok: bool
    gamma1: BoundaryArc
    gamma2: BoundaryArc
    direction1: int
    direction2: int
    corner_values: tuple
    message: str = ""
    interval: tuple | None = None


def validate_monotone_pair(f: BoundaryFunction, rect: Rectangle, n=4001, raise_on_fail=True) -> MonotoneCheck:
    """Strict monotonicity of ``f`` along Gamma_1 and Gamma_2 of the rectangle.

    Both arcs are traversed by arclength; the common corner values are
    returned as ``(f at (L,-h), f at (-L,h))``.
    """
    g1, g2 = rect.gamma1, rect.gamma2
    P = rect.total_length
    tol = 1e-12 * max(1.0, f.M - f.m)
    dirs = []
    for g in (g1, g2):
        s = g.sample(n)
        inner = [c + k * P for c in rect.breakpoints for k in (0, 1)]
        s = np.unique(np.concatenate([s, [c for c in inner if g.s_start < c < g.s_end]]))
        # stay off the arc ends, where the loop datum may be multivalued
        s = s[1:-1]
        v = f(np.mod(s, P))
        d = np.diff(v)
        if np.all(d > tol):
            dirs.append(1)
            continue
        if np.all(d < -tol):
            dirs.append(-1)
            continue
        main = 1 if np.sum(d > 0) >= np.sum(d < 0) else -1
        bad = np.flatnonzero(~(main * d > tol))
        k = int(bad[0])
        interval = (float(s[k]), float(s[k + 1]))
        kind = "plateau" if abs(d[k]) <= tol else "reversal"
        msg = f"datum is not strictly monotone on the arc starting at s={g.s_start:g}: {kind} on [{interval[0]:.6g}, {interval[1]:.6g}]"
        if raise_on_fail:
            raise ValidationError(msg, clause="strict-monotone", interval=interval)
        return MonotoneCheck(False, g1, g2, 0, 0, (float("nan"),) * 2, msg, interval)
    c0 = float(f(np.asarray(0.0)))
    c2 = float(f(np.asarray(g2.s_start)))
    return MonotoneCheck(True, g1, g2, dirs[0], dirs[1], (c0, c2))


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def _const(val):
    return lambda x: np.full(np.shape(x), float(val))


def _affine(s_ref, v_ref, slope):
    return lambda x: v_ref + slope * (np.asarray(x, float) - s_ref)


def _ramp_pieces(knots, values):
    """Pieces of the continuous piecewise-linear function through (knots, values)."""
    pieces = []
    for (s0, s1), (v0, v1) in zip(zip(knots[:-1], knots[1:]), zip(values[:-1], values[1:])):
        if s1 - s0 <= 0:
            continue
        if v1 == v0:
            pieces.append(Piece(s0, s1, _const(v0), CONSTANT))
        else:
            slope = (v1 - v0) / (s1 - s0)
            pieces.append(
                Piece(s0, s1, _affine(s0, v0, slope), INCREASING if slope > 0 else DECREASING, _const(slope))
            )
    return pieces


def _merge_monotone(pieces):
    """Fuse consecutive pieces of the same monotone kind into one callable piece."""
    out = []
    for pc in pieces:
        if out and out[-1][-1].kind == pc.kind and pc.kind != CONSTANT and abs(out[-1][-1].v1 - pc.v0) < 1e-15:
            out[-1].append(pc)
        else:
            out.append([pc])
    merged = []
    for grp in out:
        if len(grp) == 1:
            merged.append(grp[0])
            continue
        starts = np.array([g.s0 for g in grp])

        def func(x, grp=grp, starts=starts):
            x = np.asarray(x, float)
            k = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(grp) - 1)
            res = np.empty(np.shape(x))
            flat_x = np.atleast_1d(x)
            flat_k = np.atleast_1d(k)
            r = np.empty(flat_x.shape)
            for j in np.unique(flat_k):
                m = flat_k == j
                r[m] = grp[j](flat_x[m])
            res = r.reshape(np.shape(x)) if np.shape(x) else r[0]
            return res

        def deriv(x, grp=grp, starts=starts):
            x = np.atleast_1d(np.asarray(x, float))
            k = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(grp) - 1)
            r = np.empty(x.shape)
            for j in np.unique(k):
                m = k == j
                r[m] = grp[j].density(x[m])
            return r

        merged.append(Piece(grp[0].s0, grp[-1].s1, func, grp[0].kind, deriv))
    return merged


def angular_affine(arc: BoundaryArc, scale=1.0, offset=0.0):
    slope = scale / arc.length
    pc = Piece(arc.s_start, arc.s_end, _affine(arc.s_start, offset, slope), INCREASING if scale > 0 else DECREASING, _const(slope))
    return BoundaryFunction(arc, [pc], name="angular-affine")


def angular_tent(arc: BoundaryArc, peak=0.5, height=1.0):
    sp = arc.s_start + peak * arc.length
    knots = [arc.s_start, sp, arc.s_end]
    return BoundaryFunction(arc, _ramp_pieces(knots, [0.0, height, 0.0]), name="angular-tent")


def angular_sine(arc: BoundaryArc, amplitude=1.0):
    Lg = arc.length
    w = 2.0 * math.pi / Lg

    def func(x):
        return amplitude * np.sin(w * (np.asarray(x, float) - arc.s_start))

    def deriv(x):
        return amplitude * w * np.cos(w * (np.asarray(x, float) - arc.s_start))

    s0 = arc.s_start
    k = [s0, s0 + Lg / 4, s0 + 3 * Lg / 4, s0 + Lg]
    kinds = [INCREASING, DECREASING, INCREASING] if amplitude > 0 else [DECREASING, INCREASING, DECREASING]
    pieces = [Piece(a, b, func, kd, deriv) for a, b, kd in zip(k[:-1], k[1:], kinds)]
    return BoundaryFunction(arc, pieces, name="angular-sine")


def linear_datum(arc: BoundaryArc, c0=0.0, cx=0.0, cy=0.0):
    b = arc.boundary

    def func(s):
        p = b.param(s)
        return c0 + cx * p[..., 0] + cy * p[..., 1]

    if cx == 0.0 and cy == 0.0:
        return BoundaryFunction(arc, [Piece(arc.s_start, arc.s_end, _const(c0), CONSTANT)], name="linear")
    if isinstance(b, Rectangle) or type(b).__name__ == "Polygon":
        # exact: linear along every edge
        P = b.total_length
        knots = [arc.s_start]
        for c in b.breakpoints:
            for k in (-1, 0, 1, 2):
                x = c + k * P
                if arc.s_start < x < arc.s_end:
                    knots.append(x)
        knots = sorted(knots) + [arc.s_end]
        vals = [float(func(np.asarray(k))) for k in knots]
        f = BoundaryFunction(arc, _merge_monotone(_ramp_pieces(knots, vals)), name="linear")
        return f
    return segment_callable(arc, func, name="linear")


def rect_power(rect: Rectangle, exponent=2.0):
    """``1 - sigma/P1`` along Gamma_1 and ``(sigma/P2)**exponent`` along Gamma_2."""
    P = rect.total_length
    half = P / 2

    def f1(x):
        return 1.0 - np.asarray(x, float) / half

    def d1(x):
        return np.full(np.shape(x), -1.0 / half)

    def f2(x):
        return ((np.asarray(x, float) - half) / half) ** exponent

    def d2(x):
        return exponent / half * ((np.asarray(x, float) - half) / half) ** (exponent - 1)

    arc = rect.full_arc()
    return BoundaryFunction(arc, [Piece(0.0, half, f1, DECREASING, d1), Piece(half, P, f2, INCREASING, d2)], name="rect-power")


def fmd_load_datum(rect: Rectangle, b_half, t_half, l_B, eps=0.0):
    """Boundary potential of the self-equilibrated load, optionally plus the eps-correction.

    The potential vanishes on the left side, ramps with slope ``l_B`` along
    the bottom over ``[-b, b]`` and with slope ``l_T = b l_B / t`` along the
    top over ``[-t, t]``, and equals ``2 b l_B`` on the right side.  With
    ``eps > 0`` a correction ``k`` taking values in ``[0, eps]`` is added: it
    grows linearly from 0 to ``eps/2`` over the flat stretch where the datum
    is 0, stays at ``eps/2`` on the ramps and grows to ``eps`` over the flat
    stretch where the datum is maximal, on each of the two arcs.  The sum is
    then strictly monotone on both arcs.
    """
    L, h = rect.L, rect.h
    b, t = float(b_half), float(t_half)
    if not (0 < b <= L and 0 < t <= L):
        raise ValidationError("need 0 < b_half <= L and 0 < t_half <= L", clause="fmd-load")
    if l_B <= 0:
        raise ValidationError("l_B must be positive", clause="fmd-load")
    l_T = b * l_B / t
    top = 2 * b * l_B
    P = rect.total_length
    # parameters: right side [0, 2h], top [2h, 2h+2L] (x from L to -L),
    # left [2h+2L, 4h+2L], bottom [4h+2L, P] (x from -L to L)
    s_top0 = 2 * h
    s_left0 = 2 * h + 2 * L
    s_bot0 = 4 * h + 2 * L
    # Gamma_1 knots: C0 -> right side -> top, datum decreasing from `top` to 0
    k1 = [0.0, s_top0 + (L - t), s_top0 + (L + t), s_left0]
    v1 = [top, top, 0.0, 0.0]
    # Gamma_2 knots: C2 -> left side -> bottom, datum increasing from 0 to `top`
    k2 = [s_left0, s_bot0 + (L - b), s_bot0 + (L + b), P]
    v2 = [0.0, 0.0, top, top]
    if eps > 0:
        # add the correction on the flat stretches (arclength-proportional)
        kv1 = [eps, eps / 2, eps / 2, 0.0]
        kv2 = [0.0, eps / 2, eps / 2, eps]
        v1 = [a + c for a, c in zip(v1, kv1)]
        v2 = [a + c for a, c in zip(v2, kv2)]
    arc = rect.full_arc()
    pieces = _ramp_pieces(k1, v1) + _ramp_pieces(k2, v2)
    f = BoundaryFunction(arc, pieces, name="fmd-load" if eps == 0 else f"fmd-load-eps{eps:g}")
    f.l_T = l_T
    return f


def piecewise_constant(arc: BoundaryArc, breakpoints, values, ramp=0.0):
    """Piecewise-constant datum; ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])``.

    The last value wraps around to the first breakpoint on closed loops.
    With ``ramp > 0`` every jump is replaced by a linear ramp of that
    arclength width centred on the breakpoint, giving a continuous datum.
    """
    bps = [float(x) for x in breakpoints]
    vals = [float(v) for v in values]
    if len(bps) != len(vals) or len(bps) < 1:
        raise ValidationError("breakpoints and values must have equal, positive length", clause="values")
    P = arc.boundary.total_length
    loc = [float(arc.local(x)) for x in bps]
    if any(b2 <= b1 for b1, b2 in zip(loc[:-1], loc[1:])):
        raise ValidationError("breakpoints must increase along the arc", clause="breakpoints")
    if not arc.is_full:
        raise ValidationError("piecewise-constant data are supported on closed loops", clause="arc")
    # rotate the arc so that it starts at the first breakpoint
    start = float(np.mod(bps[0], P))
    arc = BoundaryArc(arc.boundary, start, P)
    loc = [start + float(np.mod(x - start, P)) for x in bps] + [start + P]
    if ramp <= 0:
        pieces = [Piece(a, b, _const(v), CONSTANT) for a, b, v in zip(loc[:-1], loc[1:], vals)]
        return BoundaryFunction(arc, pieces, name="piecewise-constant")
    half = ramp / 2
    if any(b - a <= ramp for a, b in zip(loc[:-1], loc[1:])):
        raise ValidationError("ramp width exceeds a constant stretch", clause="ramp")
    # knots of the continuous version; the first ramp straddles the arc start
    knots = [loc[0]]
    kv = [0.5 * (vals[-1] + vals[0])]
    for i in range(len(vals)):
        knots += [loc[i] + half, loc[i + 1] - half]
        kv += [vals[i], vals[i]]
    knots.append(loc[-1])
    kv.append(kv[0])
    pieces = _merge_monotone(_ramp_pieces(knots, kv))
    return BoundaryFunction(arc, pieces, name=f"piecewise-ramp{ramp:g}")


CATALOG = ("linear", "angular-affine", "angular-tent", "angular-sine", "rect-power", "fmd-load", "piecewise-constant")


def make_datum(spec: dict, arc: BoundaryArc) -> BoundaryFunction:
    """Build a datum from its scenario specification."""
    kind = spec.get("kind", "analytic")
    b = arc.boundary
    if kind == "samples":
        if "values" not in spec:
            raise ValidationError("samples datum needs 'values'", clause="datum.values")
        return from_samples(arc, spec["values"])
    if kind != "analytic":
        raise ValidationError(f"unknown datum kind {kind!r}", clause="datum.kind")
    eid = spec.get("expr_id")
    if eid is None:
        raise ValidationError("analytic datum needs 'expr_id'", clause="datum.expr_id")
    if eid == "linear":
        c = spec.get("coeffs", [0.0, 1.0, 0.0])
        return linear_datum(arc, *map(float, c))
    if eid == "angular-affine":
        return angular_affine(arc, spec.get("scale", 1.0), spec.get("offset", 0.0))
    if eid == "angular-tent":
        return angular_tent(arc, spec.get("peak", 0.5), spec.get("height", 1.0))
    if eid == "angular-sine":
        return angular_sine(arc, spec.get("amplitude", 1.0))
    if eid == "rect-power":
        if not isinstance(b, Rectangle):
            raise ValidationError("rect-power needs a rectangle", clause="datum.expr_id")
        return rect_power(b, spec.get("exponent", 2.0))
    if eid == "fmd-load":
        if not isinstance(b, Rectangle):
            raise ValidationError("fmd-load needs a rectangle", clause="datum.expr_id")
        return fmd_load_datum(b, spec["b_half"], spec["t_half"], spec.get("l_B", 1.0), spec.get("eps", 0.0))
    if eid == "piecewise-constant":
        if "alpha" in spec:
            a1, a2 = map(float, spec["alpha"])
            if a1 <= 0 or a2 <= 0:
                raise ValidationError("alpha_1, alpha_2 must be positive", clause="datum.alpha")
            vals = [0.0, a1 + a2, a1]
        else:
            vals = spec["values"]
        return piecewise_constant(arc, spec["breakpoints"], vals, spec.get("ramp", 0.0))
    raise ValidationError(f"unknown expr_id {eid!r}; known: {', '.join(CATALOG)}", clause="datum.expr_id")
