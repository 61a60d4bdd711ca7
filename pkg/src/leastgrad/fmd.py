"""Flux fields dual to least gradient solutions.

The flux is the rotated gradient ``q = R(-pi/2) Du`` with
``R(-pi/2)(x, y) = (y, -x)``.  For a level family it is a measure carried by
the level lines: each line contributes its unit direction times ``dt``,
oriented so that rotating the direction by ``-pi/2`` points to decreasing
values.  Its pairing with the gradient of a test function then reproduces
the pairing of the boundary datum's tangential derivative with that
function.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .boundary_data import CONSTANT, BoundaryFunction, Piece
from .errors import GeometryError
from .geometry import BoundaryArc, ConvexBoundary, HalfPlane, as_points, rot_minus90
from .levels import LevelFamily


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass
class Polynomial:
    """``phi(x, y) = sum c[i, j] x**i y**j`` with an optional cutoff factor.

    With ``cutoff`` set to a half plane, ``phi`` is multiplied by the
    positive part of the signed distance to its line, so it vanishes on the
    other side.
    """

    coeffs: np.ndarray
    cutoff: HalfPlane | None = None

    @classmethod
    def random(cls, rng, degree=4, cutoff=None):
        c = np.zeros((degree + 1, degree + 1))
        for i, j in itertools.product(range(degree + 1), repeat=2):
            if i + j <= degree:
                c[i, j] = rng.normal()
        return cls(c, cutoff)

    def _poly(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        out = np.zeros(x.shape)
        n = self.coeffs.shape[0]
        for i in range(n):
            for j in range(n - i):
                if self.coeffs[i, j]:
                    out = out + self.coeffs[i, j] * x**i * y**j
        return out

    def _poly_grad(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        gx = np.zeros(x.shape)
        gy = np.zeros(x.shape)
        n = self.coeffs.shape[0]
        for i in range(n):
            for j in range(n - i):
                c = self.coeffs[i, j]
                if not c:
                    continue
                if i:
                    gx = gx + c * i * x ** (i - 1) * y**j
                if j:
                    gy = gy + c * j * x**i * y ** (j - 1)
        return np.stack([gx, gy], axis=-1)

    def __call__(self, pts):
        pts = as_points(pts)
        val = self._poly(pts)
        if self.cutoff is not None:
            val = val * np.maximum(self.cutoff.signed(pts), 0.0)
        return val

    def grad(self, pts):
        pts = as_points(pts)
        g = self._poly_grad(pts)
        if self.cutoff is not None:
            s = self.cutoff.signed(pts)
            pos = np.maximum(s, 0.0)
            g = g * pos[..., None] + (s > 0)[..., None] * self._poly(pts)[..., None] * self.cutoff.normal
        return g

    def lipschitz(self, domain: ConvexBoundary, n=200):
        lo, hi = domain.bounding_box()
        xs = np.linspace(lo[0], hi[0], n)
        ys = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(xs, ys)
        pts = np.stack([X, Y], axis=-1)
        inside = domain.contains(pts)
        g = np.linalg.norm(self.grad(pts), axis=-1)
        return float(g[inside].max())


def vanishing_cutoff(gamma: BoundaryArc) -> HalfPlane:
    """Half plane bounded by the line through the arc ends that contains Gamma."""
    a, b = gamma.endpoint_a, gamma.endpoint_b
    mid = gamma.boundary.param(gamma.s_start + 0.5 * gamma.length)
    return HalfPlane.through(a, b, keep=mid)


# ---------------------------------------------------------------------------
# Chord-supported flux
# ---------------------------------------------------------------------------


@dataclass
class ChordFlux:
    """Weighted oriented segments; weight ``w`` means ``w`` times arclength measure."""

    p: np.ndarray
    q: np.ndarray
    weight: np.ndarray

    @property
    def direction(self):
        d = self.q - self.p
        n = np.linalg.norm(d, axis=1, keepdims=True)
        return np.divide(d, n, out=np.zeros_like(d), where=n > 0)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weight * np.linalg.norm(self.q - self.p, axis=1)))

    def __len__(self):
        return len(self.weight)

    def to_dict(self):
        dirs = self.direction
        return {
            "mass": self.mass,
            "segments": [
                {"p": self.p[i].tolist(), "q": self.q[i].tolist(), "dir": dirs[i].tolist(), "weight": float(self.weight[i])}
                for i in range(len(self.weight))
            ],
        }


def du_to_flux(family: LevelFamily) -> ChordFlux:
    """Flux measure of a level family, on the same slab quadrature as :func:`coarea_tv`."""
    if family is None or not hasattr(family, "t_grid"):
        raise GeometryError("flux needs a built level family")
    levels, weights, lines = family.quadrature_lines()
    P, Q, W = [], [], []
    for w, ln in zip(weights, lines):
        for seg, hp in zip(ln.segments, ln.halfplanes):
            p, q = np.asarray(seg.p, float), np.asarray(seg.q, float)
            if np.dot(q - p, hp.direction) < 0:
                p, q = q, p
            P.append(p)
            Q.append(q)
            W.append(w)
    if not W:
        return ChordFlux(np.empty((0, 2)), np.empty((0, 2)), np.empty(0))
    return ChordFlux(np.array(P), np.array(Q), np.array(W))


def pair_flux_gradient(q, phi) -> float:
    """Integral of ``grad(phi) . dq``.

    For chord flux each segment contributes ``w (phi(end) - phi(start))``;
    for a grid field the integral is a masked Riemann sum.
    """
    if isinstance(q, ChordFlux):
        if not len(q):
            return 0.0
        return float(np.sum(q.weight * (phi(q.q) - phi(q.p))))
    if isinstance(q, GridField):
        g = phi.grad(q.points)
        integrand = (g[..., 0] * q.qx + g[..., 1] * q.qy) * q.cell_weights
        return float(np.sum(integrand[q.mask]))
    raise TypeError("unsupported flux representation")


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------


@dataclass
class GridField:
    """Vector field sampled at the nodes of a uniform grid."""

    xs: np.ndarray
    ys: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    mask: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def spacing(self):
        return float(self.xs[1] - self.xs[0])

    @property
    def points(self):
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    @property
    def cell_weights(self):
        """Trapezoid weights: interior nodes own a full cell, boundary nodes a share of it."""
        h = self.spacing
        wx = np.ones(len(self.xs))
        wy = np.ones(len(self.ys))
        w = np.outer(wy, wx) * h * h
        m = self.mask.astype(float)
        # nodes with masked-out neighbours own half a cell per missing direction
        pad = np.pad(m, 1)
        fx = 0.5 * (pad[1:-1, :-2] + pad[1:-1, 2:])
        fy = 0.5 * (pad[:-2, 1:-1] + pad[2:, 1:-1])
        return w * np.where(self.mask, 0.5 * (1 + fx) * 0.5 * (1 + fy), 0.0)

    @property
    def mass(self):
        return float(np.sum((np.hypot(self.qx, self.qy) * self.cell_weights)[self.mask]))

    def interpolator(self):
        return (
            RegularGridInterpolator((self.ys, self.xs), self.qx, bounds_error=False, fill_value=None),
            RegularGridInterpolator((self.ys, self.xs), self.qy, bounds_error=False, fill_value=None),
        )

    def to_csv(self, path):
        X, Y = np.meshgrid(self.xs, self.ys)
        rows = np.column_stack([X.ravel(), Y.ravel(), self.qx.ravel(), self.qy.ravel(), self.mask.ravel().astype(int)])
        header = f"nx={len(self.xs)},ny={len(self.ys)},spacing={self.spacing!r}\nx,y,qx,qy,inside"
        np.savetxt(path, rows, delimiter=",", header=header, comments="")


def _fill_outside(values, mask):
    """Copy the nearest inside value to every outside node so differences stay finite."""
    from scipy import ndimage

    if mask.all():
        return values
    idx = ndimage.distance_transform_edt(~mask, return_distances=False, return_indices=True)
    return values[tuple(idx)]


def grid_flux(u: np.ndarray, xs, ys, mask) -> GridField:
    """``q = (du/dy, -du/dx)`` by central differences on the node grid."""
    filled = _fill_outside(np.where(mask, u, 0.0), mask)
    h = float(xs[1] - xs[0])
    gy, gx = np.gradient(filled, h, h)
    return GridField(np.asarray(xs), np.asarray(ys), gy, -gx, mask.copy())


def field_from_function(func, xs, ys, mask) -> GridField:
    X, Y = np.meshgrid(xs, ys)
    v = func(np.stack([X, Y], axis=-1))
    return GridField(np.asarray(xs), np.asarray(ys), v[..., 0], v[..., 1], mask.copy())


def bump(center, radius):
    """Smooth bump of unit height supported in the disc of the given radius."""
    c = np.asarray(center, float)

    def psi(pts):
        r2 = np.sum((pts - c) ** 2, axis=-1) / radius**2
        out = np.zeros(r2.shape)
        m = r2 < 1
        out[m] = np.exp(1.0 - 1.0 / (1.0 - r2[m]))
        return out

    def grad(pts):
        d = pts - c
        r2 = np.sum(d**2, axis=-1) / radius**2
        out = np.zeros(pts.shape)
        m = r2 < 1
        e = np.exp(1.0 - 1.0 / (1.0 - r2[m]))
        factor = -e / (1.0 - r2[m]) ** 2 * 2.0 / radius**2
        out[m] = factor[:, None] * d[m]
        return out

    return psi, grad


def divergence_residual(q: GridField, domain: ConvexBoundary = None, n_bumps=32, radius=None, seed=0) -> float:
    """Largest ``|integral q . grad(psi)|`` over unit-height bumps supported inside the mask."""
    rng = np.random.default_rng(seed)
    pts = q.points
    lo = np.array([q.xs[0], q.ys[0]])
    hi = np.array([q.xs[-1], q.ys[-1]])
    radius = 0.15 * float(np.min(hi - lo)) if radius is None else radius
    inside_pts = pts[q.mask]
    w = q.cell_weights
    worst = 0.0
    tries = 0
    found = 0
    while found < n_bumps and tries < 100 * n_bumps:
        tries += 1
        c = inside_pts[rng.integers(len(inside_pts))]
        # the whole support must stay inside the domain
        ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ring = c + 1.05 * radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        if domain is not None and not np.all(domain.contains(ring)):
            continue
        if domain is None and (np.any(ring < lo) or np.any(ring > hi)):
            continue
        found += 1
        _, g = bump(c, radius)
        gv = g(pts)
        val = np.sum(((gv[..., 0] * q.qx + gv[..., 1] * q.qy) * w)[q.mask])
        worst = max(worst, abs(float(val)))
    return worst


@dataclass
class Potential:
    xs: np.ndarray
    ys: np.ndarray
    u: np.ndarray
    mask: np.ndarray
    loop_max: float
    warnings: list


def _line_integral(interp, start, end, n):
    """Integral of ``q1 dy - q2 dx`` along straight segments (midpoint rule, vectorized)."""
    ix, iy = interp
    s = (np.arange(n) + 0.5) / n
    d = end - start
    pts = start[..., None, :] + s[:, None] * d[..., None, :]
    flat = pts.reshape(-1, 2)[:, ::-1]
    q1 = ix(flat).reshape(pts.shape[:-1])
    q2 = iy(flat).reshape(pts.shape[:-1])
    return np.mean(q1 * d[..., None, 1] - q2 * d[..., None, 0], axis=-1)


def loop_integrals(p: GridField, domain: ConvexBoundary, n_loops=100, seed=0, n_quad=None):
    """Integrals of the form ``q1 dy - q2 dx`` around random triangles in the domain."""
    rng = np.random.default_rng(seed)
    interp = p.interpolator()
    inside = p.points[p.mask]
    n_quad = n_quad or max(32, int(4 * (p.xs[-1] - p.xs[0]) / p.spacing))
    out = []
    while len(out) < n_loops:
        tri = inside[rng.integers(len(inside), size=3)]
        if domain is not None and not np.all(domain.contains(tri)):
            continue
        total = 0.0
        for k in range(3):
            total += float(_line_integral(interp, tri[k][None], tri[(k + 1) % 3][None], n_quad)[0])
        out.append(total)
    return np.array(out)


def reconstruct_potential(p: GridField, x0, domain: ConvexBoundary = None, n_loops=100, seed=0, tol_loop=None) -> Potential:
    """Potential ``u(x) = integral of q1 dy - q2 dx`` along ``[x0, x]``.

    Path independence is probed on random triangles; large loop integrals
    are reported as warnings on the result rather than raised.
    """
    x0 = np.asarray(x0, float)
    interp = p.interpolator()
    pts = p.points
    n = max(16, int(2 * (p.xs[-1] - p.xs[0]) / p.spacing))
    u = np.full(p.mask.shape, np.nan)
    idx = np.flatnonzero(p.mask.ravel())
    flat = pts.reshape(-1, 2)
    for chunk in np.array_split(idx, max(1, len(idx) // 4096)):
        end = flat[chunk]
        start = np.broadcast_to(x0, end.shape)
        u.ravel()[chunk] = _line_integral(interp, start, end, n)
    loops = loop_integrals(p, domain, n_loops=n_loops, seed=seed)
    loop_max = float(np.max(np.abs(loops))) if loops.size else 0.0
    tol_loop = 10 * p.spacing if tol_loop is None else tol_loop
    warns = []
    if loop_max > tol_loop:
        msg = f"field is not path independent: loop integral {loop_max:.3g} exceeds {tol_loop:.3g}"
        warns.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return Potential(p.xs, p.ys, u, p.mask, loop_max, warns)


# ---------------------------------------------------------------------------
# Boundary datum seen by the flux
# ---------------------------------------------------------------------------


def extended_datum(family: LevelFamily, n=513) -> BoundaryFunction:
    """Datum on the whole boundary: ``f`` on Gamma plus the solution's trace on the free arc.

    Families built from closed-loop data return their datum unchanged.  On
    the free arc the trace is sampled with the family's evaluator; a
    constant trace (the usual case when a fat region covers the free arc)
    yields a single constant piece.
    """
    f = family.datum
    if f.is_closed_loop:
        return f
    gamma = family.gamma
    dom = family.domain
    up = gamma.complement()
    s = gamma.s_end + np.linspace(0.0, up.length, n)
    inner = dom.param(s[1:-1])
    vals = family.evaluate_many(inner)
    spread = float(np.max(vals) - np.min(vals))
    pieces = list(f.pieces)
    if spread <= 1e-12 * max(1.0, f.M - f.m):
        val = float(vals[0])
        pieces.append(Piece(gamma.s_end, gamma.s_end + up.length, lambda x, v=val: np.full(np.shape(x), v), CONSTANT))
    else:
        values = np.concatenate([[vals[0]], vals, [vals[-1]]])
        from .boundary_data import from_samples

        tmp = from_samples(BoundaryArc(dom, float(np.mod(gamma.s_end, dom.total_length)), up.length), values)
        shift = gamma.s_end - tmp.arc.s_start
        for pc in tmp.pieces:
            pieces.append(
                Piece(
                    pc.s0 + shift,
                    pc.s1 + shift,
                    lambda x, pc=pc: pc(np.asarray(x) - shift),
                    pc.kind,
                    lambda x, pc=pc: pc.density(np.asarray(x) - shift),
                    None if pc.knots is None else pc.knots + shift,
                )
            )
    arc = BoundaryArc(dom, gamma.s_start, dom.total_length)
    return BoundaryFunction(arc, pieces, name=f"{f.name}+trace")


def trace_identity_residual(family: LevelFamily, phi, flux: ChordFlux = None, datum: BoundaryFunction = None) -> float:
    """``|pair_flux_gradient(q, phi) - pair(g, phi)|`` for one test function."""
    flux = du_to_flux(family) if flux is None else flux
    datum = extended_datum(family) if datum is None else datum
    g = datum.tangential_derivative()
    return abs(pair_flux_gradient(flux, phi) - g.pair(phi))


def partial_trace_residual(family: LevelFamily, phi, flux: ChordFlux = None) -> float:
    """Same identity for test functions vanishing off Gamma, pairing only the datum on Gamma."""
    flux = du_to_flux(family) if flux is None else flux
    g = family.datum.tangential_derivative()
    return abs(pair_flux_gradient(flux, phi) - g.pair(phi))


__all__ = [
    "ChordFlux",
    "GridField",
    "Polynomial",
    "Potential",
    "bump",
    "divergence_residual",
    "du_to_flux",
    "extended_datum",
    "field_from_function",
    "grid_flux",
    "loop_integrals",
    "pair_flux_gradient",
    "partial_trace_residual",
    "reconstruct_potential",
    "trace_identity_residual",
    "vanishing_cutoff",
]
