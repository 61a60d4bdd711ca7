"""Least gradient solutions on rectangles with data monotone on two arcs.

The rectangle ``(-L, L) x (-h, h)`` splits into Gamma_1 (right side and
top) and Gamma_2 (left side and bottom), both running between the corners
``(L, -h)`` and ``(-L, h)``.  When the datum is strictly monotone on each
arc, every value ``t`` is taken once on each arc and the level line is the
chord joining the two preimages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary_data import DECREASING, INCREASING, BoundaryFunction, Piece, fmd_load_datum, validate_monotone_pair
from .errors import GeometryError, ValidationError
from .geometry import Chord, HalfPlane, Rectangle, as_points, half_plane_region
from .levels import GAMMA_CHORD, FatRegion, LevelFamily, chord_line


def _arc_run(rect: Rectangle, f: BoundaryFunction, s0, s1, direction):
    P = rect.total_length
    return Piece(s0, s1, lambda s: f(np.mod(s, P)), INCREASING if direction > 0 else DECREASING)


def _exit_points(rect: Rectangle, x, z):
    """Second intersection with the boundary of the rays from ``x`` through ``z``."""
    d = z - x
    bounds = np.array([rect.L, rect.h])
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_pos = (bounds - x) / d
        lam_neg = (-bounds - x) / d
    lam = np.where(d > 0, lam_pos, np.where(d < 0, lam_neg, np.inf))
    lam = np.min(lam, axis=-1)
    y = x + lam[..., None] * d
    return np.clip(y, -bounds, bounds)


@dataclass
class ChordLookup:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def chord(self, i=0):
        return Chord(self.x[i], self.y[i])


def chord_for_point(rect: Rectangle, f: BoundaryFunction, z, check=None, iters=64, bracket=None) -> ChordLookup:
    """Level and chord through each interior point ``z`` (vectorized).

    The first point runs over the arc on the far side of the diagonal
    joining ``(L, -h)`` and ``(-L, h)``; the second is where the line
    through it and ``z`` leaves the rectangle.  The difference of the datum
    at the two points is monotone along the arc, so its root is found by
    bisection.  ``bracket`` optionally narrows the initial arc interval as
    fractions in ``[0, 1]``.
    """
    check = check or validate_monotone_pair(f, rect)
    z = as_points(z)
    flat = z.reshape(-1, 2)
    tol = 1e-12 * rect.diam
    if np.any((np.abs(flat[:, 0]) >= rect.L - tol) | (np.abs(flat[:, 1]) >= rect.h - tol)):
        raise GeometryError("chord lookup needs points in the open rectangle")
    P = rect.total_length
    half = P / 2
    c0 = np.array([rect.L, -rect.h])
    c2 = np.array([-rect.L, rect.h])
    diag = c2 - c0
    rel = flat - c0
    cross = diag[0] * rel[:, 1] - diag[1] * rel[:, 0]
    # cross > 0: z lies on the Gamma_2 side, so the far arc is Gamma_1
    base = np.where(cross > 0, 0.0, half)
    frac_lo, frac_hi = (0.0, 1.0) if bracket is None else bracket
    lo = base + frac_lo * half
    hi = base + frac_hi * half

    def diff(s):
        x = rect.param(s)
        y = _exit_points(rect, x, flat)
        return f(np.mod(s, P)) - f(rect.locate(y)), x, y

    d_lo = diff(lo)[0]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        d_mid = diff(mid)[0]
        same = np.sign(d_mid) == np.sign(d_lo)
        lo = np.where(same, mid, lo)
        d_lo = np.where(same, d_mid, d_lo)
        hi = np.where(same, hi, mid)
    s = 0.5 * (lo + hi)
    _, x, y = diff(s)
    t = 0.5 * (f(np.mod(s, P)) + f(rect.locate(y)))
    shape = z.shape[:-1]
    return ChordLookup(t.reshape(shape), x.reshape(shape + (2,)), y.reshape(shape + (2,)))


def evaluate_rect(rect: Rectangle, f: BoundaryFunction, z, check=None):
    """Solution value at interior points ``z``."""
    return chord_for_point(rect, f, z, check=check).t


def modulus_bound(rect: Rectangle, f: BoundaryFunction, x1, x2):
    """``omega(|dx| / sin(alpha)) + omega(sqrt(diam) sqrt(|dx|))`` for pairs of points."""
    delta = np.linalg.norm(as_points(x1) - as_points(x2), axis=-1)
    sa = math.sin(rect.alpha)
    return f.modulus(delta / sa) + f.modulus(math.sqrt(rect.diam) * np.sqrt(delta))


def solve_rectangle(rect: Rectangle, f: BoundaryFunction, n_t=2001) -> LevelFamily:
    """Level family of the chord solution for data monotone on Gamma_1 and Gamma_2."""
    check = validate_monotone_pair(f, rect)
    half = rect.total_length / 2
    run1 = _arc_run(rect, f, 0.0, half, check.direction1)
    run2 = _arc_run(rect, f, half, 2 * half, check.direction2)
    c0 = np.array([rect.L, -rect.h])
    c2 = np.array([-rect.L, rect.h])
    f_c0, f_c2 = check.corner_values
    top = c0 if f_c0 > f_c2 else c2

    def builder(ts):
        s1 = run1.inverse(ts)
        s2 = run2.inverse(ts)
        X = rect.param(s1)
        Y = rect.param(s2)
        return [chord_line(t, X[i], Y[i], GAMMA_CHORD, keep=top, gamma_params=[s1[i], s2[i]]) for i, t in enumerate(ts)]

    # chord lengths have kinks where an endpoint passes a corner; keep those levels on the grid
    corners = [float(f(c)) for c in rect.breakpoints]
    fam = LevelFamily(
        rect, builder, min(f_c0, f_c2), max(f_c0, f_c2), n_t=n_t, critical=corners, case_id="rectangle", datum=f
    )
    fam.check = check
    return fam


@dataclass
class FmdLoadSolution:
    rect: Rectangle
    datum: BoundaryFunction
    family: LevelFamily
    l_T: float
    b_half: float
    t_half: float
    l_B: float

    @property
    def top_value(self):
        return 2 * self.b_half * self.l_B

    def evaluate(self, z):
        """Closed-form evaluation: constants off the quadrilateral, chords inside it."""
        z = as_points(z)
        x, y = z[..., 0], z[..., 1]
        h = self.rect.h
        lam = (y + h) / (2 * h)
        # level v puts the chord through (xb(v), -h) and (xt(v), h); solve for v
        # x = (1 - lam)(-b + v / l_B) + lam(-t + v / l_T)
        denom = (1 - lam) / self.l_B + lam / self.l_T
        v = (x + (1 - lam) * self.b_half + lam * self.t_half) / denom
        return np.clip(v, 0.0, self.top_value)

    def perturbed(self, eps):
        return fmd_load_datum(self.rect, self.b_half, self.t_half, self.l_B, eps)

    @property
    def self_equilibration(self):
        return float(self.datum.tangential_derivative().total_mass)


def fmd_load_solution(L, h, t_half, b_half, l_B=1.0, n_t=2001) -> FmdLoadSolution:
    """Solution for the load spread over ``[-t, t]`` on top and ``[-b, b]`` at the bottom."""
    rect = Rectangle(L, h)
    if t_half <= 0 or b_half <= 0:
        raise ValidationError("degenerate quadrilateral: t_half and b_half must be positive", clause="fmd-load")
    f = fmd_load_datum(rect, b_half, t_half, l_B)
    l_T = f.l_T
    top_v = 2 * b_half * l_B
    left_ref = np.array([-L, 0.0])
    right_ref = np.array([L, 0.0])

    def builder(ts):
        xb = -b_half + ts / l_B
        xt = -t_half + ts / l_T
        return [chord_line(t, (xb[i], -h), (xt[i], h), GAMMA_CHORD, keep=right_ref) for i, t in enumerate(ts)]

    left = half_plane_region([HalfPlane.through((-b_half, -h), (-t_half, h), keep=left_ref)], rect)
    right = half_plane_region([HalfPlane.through((b_half, -h), (t_half, h), keep=right_ref)], rect)
    fat = [FatRegion(0.0, left, "left"), FatRegion(top_v, right, "right")]
    fam = LevelFamily(rect, builder, 0.0, top_v, n_t=n_t, case_id="fmd_load", fat_regions=fat, datum=f)
    return FmdLoadSolution(rect, f, fam, l_T, b_half, t_half, l_B)
