"""Discrete total variation minimization used as an independent check.

Unknowns live at the nodes of a uniform grid.  Nodes strictly inside the
domain are free; nodes on the boundary, or outside it but 4-adjacent to a
free node, form the Dirichlet band and carry the datum at their nearest
boundary point.  On a free arc the band is left out, which imposes nothing
there.

The energy is the isotropic forward-difference total variation scaled by
the cell area, and it is minimized with the Chambolle-Pock primal-dual
iteration with fixed steps ``tau = sigma = 0.99 / sqrt(8)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree

from .boundary_data import BoundaryFunction
from .geometry import BoundaryArc, ConvexBoundary


@dataclass
class RasterGrid:
    domain: ConvexBoundary
    xs: np.ndarray
    ys: np.ndarray
    interior: np.ndarray
    band: np.ndarray
    band_values: np.ndarray
    n: int
    datum: BoundaryFunction = None
    free_arc: BoundaryArc | None = None

    def refined(self, n: int) -> "RasterGrid":
        """Same domain and boundary rule at another resolution."""
        return make_grid(self.domain, self.datum, n, self.free_arc)

    @property
    def spacing(self):
        return float(self.xs[1] - self.xs[0])

    @property
    def shape(self):
        return self.interior.shape

    @property
    def points(self):
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X, Y], axis=-1)

    @property
    def active(self):
        return self.interior | self.band


def make_grid(domain: ConvexBoundary, datum: BoundaryFunction, n: int, free_arc: BoundaryArc | None = None) -> RasterGrid:
    """Node grid with ``n`` nodes across the longer side of the bounding box, padded by one node."""
    lo, hi = domain.bounding_box()
    if hasattr(domain, "L"):
        lo, hi = np.array([-domain.L, -domain.h]), np.array([domain.L, domain.h])
    ext = hi - lo
    h = float(ext.max()) / (n - 1)
    nx = int(round(ext[0] / h)) + 1
    ny = int(round(ext[1] / h)) + 1
    cx, cy = 0.5 * (lo + hi)
    xs = cx + (np.arange(nx + 2) - (nx + 1) / 2) * h
    ys = cy + (np.arange(ny + 2) - (ny + 1) / 2) * h
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1)
    tol = 1e-9 * h
    interior = domain.contains(pts, -tol)
    closed = domain.contains(pts, tol)
    pad = np.pad(interior, 1)
    adj = pad[1:-1, :-2] | pad[1:-1, 2:] | pad[:-2, 1:-1] | pad[2:, 1:-1]
    band = (~interior) & (adj | closed)
    s = domain.locate(pts[band])
    if free_arc is not None:
        keep = ~free_arc.interior_contains(s, tol=0.0)
        idx = np.argwhere(band)
        band[tuple(idx[~keep].T)] = False
        s = s[keep]
    values = np.full(interior.shape, np.nan)
    values[band] = datum(s)
    return RasterGrid(domain, xs, ys, interior, band, values, n, datum, free_arc)


@dataclass
class ScalarField:
    grid: RasterGrid
    values: np.ndarray
    energy: float = float("nan")
    iterations: int = 0
    converged: bool = True
    history: list = field(default_factory=list)

    @property
    def flag(self):
        return "converged" if self.converged else "unconverged"

    def to_csv(self, path):
        g = self.grid
        v = np.where(g.active, self.values, np.nan)
        header = f"nx={len(g.xs)},ny={len(g.ys)},spacing={g.spacing!r},x0={g.xs[0]!r},y0={g.ys[0]!r}"
        np.savetxt(path, v, delimiter=",", header=header, comments="", fmt="%.12g")


def _term_masks(grid: RasterGrid):
    V = grid.active
    I = grid.interior
    vx = np.zeros_like(V)
    vy = np.zeros_like(V)
    vx[:, :-1] = V[:, :-1] & V[:, 1:]
    vy[:-1, :] = V[:-1, :] & V[1:, :]
    full = vx & vy
    tx = np.zeros_like(V)
    ty = np.zeros_like(V)
    tx[:, :-1] = I[:, :-1] | I[:, 1:]
    ty[:-1, :] = I[:-1, :] | I[1:, :]
    mx = full | (vx & ~vy & tx)
    my = full | (vy & ~vx & ty)
    return mx, my


def _grad(u, mx, my):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return np.where(mx, gx, 0.0), np.where(my, gy, 0.0)


def discrete_tv(field_or_values, grid: RasterGrid = None) -> float:
    """``sum over nodes of |forward difference| * spacing``; one-sided where a neighbour is missing."""
    if isinstance(field_or_values, ScalarField):
        grid = field_or_values.grid
        u = field_or_values.values
    else:
        u = field_or_values
    mx, my = _term_masks(grid)
    u = np.where(grid.active, u, 0.0)
    gx, gy = _grad(u, mx, my)
    return float(np.sum(np.hypot(gx, gy)) * grid.spacing)


def rasterize(evaluator, grid: RasterGrid) -> ScalarField:
    """Evaluate at interior nodes; band nodes keep their Dirichlet values."""
    vals = np.array(grid.band_values, copy=True)
    pts = grid.points[grid.interior]
    vals[grid.interior] = evaluator(pts)
    f = ScalarField(grid, vals)
    f.energy = discrete_tv(f)
    return f


def _interp_array(g0: RasterGrid, v, grid: RasterGrid, fill=None):
    if fill is None:
        # inactive nodes take the nearest active value so interpolation stays finite
        idx = ndimage.distance_transform_edt(~g0.active, return_distances=False, return_indices=True)
        v = v[tuple(idx)]
    else:
        v = np.where(g0.active, v, fill)
    it = RegularGridInterpolator((g0.ys, g0.xs), v, bounds_error=False, fill_value=None)
    return it(grid.points[..., ::-1].reshape(-1, 2)).reshape(grid.shape)


def _interp_field(field_: ScalarField, grid: RasterGrid):
    return _interp_array(field_.grid, np.where(field_.grid.active, field_.values, np.nan), grid)


@numba.njit(cache=True)
def _pd_sweep(u, ubar, px, py, mx, my, free, lo, hi, tau, sigma, n_iter):
    ny, nx = u.shape
    for _ in range(n_iter):
        for j in range(ny):
            for i in range(nx):
                ax = px[j, i]
                ay = py[j, i]
                if mx[j, i]:
                    ax += sigma * (ubar[j, i + 1] - ubar[j, i])
                if my[j, i]:
                    ay += sigma * (ubar[j + 1, i] - ubar[j, i])
                nrm = math.sqrt(ax * ax + ay * ay)
                if nrm > 1.0:
                    ax /= nrm
                    ay /= nrm
                px[j, i] = ax
                py[j, i] = ay
        for j in range(ny):
            for i in range(nx):
                if not free[j, i]:
                    continue
                div = px[j, i] + py[j, i]
                if i > 0:
                    div -= px[j, i - 1]
                if j > 0:
                    div -= py[j - 1, i]
                v = u[j, i] + tau * div
                v = min(max(v, lo), hi)
                ubar[j, i] = 2.0 * v - u[j, i]
                u[j, i] = v


def minimize_tv_dirichlet(
    grid: RasterGrid,
    init: np.ndarray | None = None,
    max_iter=50000,
    tol=1e-8,
    window=200,
    multilevel=True,
    ratio=0.05,
    dual=None,
) -> ScalarField:
    """Minimize the discrete total variation with the band values held fixed.

    Iterates are kept inside ``[min band, max band]``; this box contains
    every minimizer, so it only speeds things up.  The energy is sampled
    every ``window`` iterations and the lowest sampled iterate is returned.
    The run stops once the energy changes by less than ``tol`` (relative)
    over one window; reaching ``max_iter`` first flags the result.
    """
    band_vals = grid.band_values[grid.band]
    lo, hi = float(band_vals.min()), float(band_vals.max())
    free = grid.interior
    if hi - lo <= 1e-14 * max(1.0, abs(hi)):
        u = np.where(grid.active, grid.band_values, np.nan)
        u[free] = lo
        return ScalarField(grid, u, 0.0, 0, True, [0.0])
    if init is None and multilevel and grid.n > 48:
        coarse = grid.refined(max(24, grid.n // 2))
        cf = minimize_tv_dirichlet(coarse, max_iter=max_iter, tol=tol, window=window, multilevel=True, ratio=ratio)
        init = _interp_field(cf, grid)
        dual = tuple(_interp_array(cf.grid, d, grid, fill=0.0) for d in cf.dual)
    u = np.where(grid.band, grid.band_values, 0.0)
    if init is not None:
        u[free] = np.clip(init[free], lo, hi)
    else:
        u[free] = 0.5 * (lo + hi)
    mx, my = _term_masks(grid)
    tau = 0.99 / math.sqrt(8.0) * ratio
    sigma = 0.99 / math.sqrt(8.0) / ratio
    if dual is not None:
        px, py = (np.where(m, d, 0.0) for m, d in zip((mx, my), dual))
        nrm = np.maximum(1.0, np.hypot(px, py))
        px, py = px / nrm, py / nrm
    else:
        px = np.zeros_like(u)
        py = np.zeros_like(u)
    ubar = u.copy()
    h = grid.spacing

    def energy(v):
        gx, gy = _grad(v, mx, my)
        return float(np.sum(np.hypot(gx, gy))) * h

    best_u = u.copy()
    best_e = energy(u)
    history = [best_e]
    last_e = best_e
    converged = False
    it = 0
    while it < max_iter:
        n = min(window, max_iter - it)
        _pd_sweep(u, ubar, px, py, mx, my, free, lo, hi, tau, sigma, n)
        it += n
        e = energy(u)
        history.append(e)
        if e < best_e:
            best_e = e
            best_u = u.copy()
        if abs(last_e - e) < tol * e:
            converged = True
            break
        last_e = e
    e = energy(u)
    if e < best_e:
        best_e, best_u = e, u.copy()
    vals = np.where(grid.active, best_u, np.nan)
    out = ScalarField(grid, vals, best_e, it, converged, history)
    out.dual = (px, py)
    return out


def level_crossings(field_: ScalarField, t: float, interior_only=True):
    """Points where the piecewise-linear field crosses ``t`` along grid edges.

    An edge crosses when exactly one endpoint lies in ``{u >= t}``.
    """
    g = field_.grid
    u = field_.values
    V = g.active
    I = g.interior
    X, Y = np.meshgrid(g.xs, g.ys)
    pts = []
    for axis in (0, 1):
        if axis == 1:
            a, b = u[:, :-1], u[:, 1:]
            va, vb = V[:, :-1] & V[:, 1:], I[:, :-1] | I[:, 1:]
            xa, ya, xb, yb = X[:, :-1], Y[:, :-1], X[:, 1:], Y[:, 1:]
        else:
            a, b = u[:-1, :], u[1:, :]
            va, vb = V[:-1, :] & V[1:, :], I[:-1, :] | I[1:, :]
            xa, ya, xb, yb = X[:-1, :], Y[:-1, :], X[1:, :], Y[1:, :]
        ok = va & (vb if interior_only else True)
        with np.errstate(invalid="ignore"):
            cross = ok & ((a >= t) != (b >= t))
        lam = np.clip((t - a[cross]) / (b[cross] - a[cross]), 0.0, 1.0)
        pts.append(np.column_stack([xa[cross] + lam * (xb[cross] - xa[cross]), ya[cross] + lam * (yb[cross] - ya[cross])]))
    return np.concatenate(pts) if pts else np.empty((0, 2))


def hausdorff_points(a, b) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


@dataclass
class Comparison:
    l1: float
    linf: float
    energy_gap: float
    hausdorff: dict

    def to_dict(self):
        return {"l1": self.l1, "linf": self.linf, "energy_gap": self.energy_gap, "hausdorff": {str(k): v for k, v in self.hausdorff.items()}}


def compare(a: ScalarField, b: ScalarField, levels=()) -> Comparison:
    """L1 (averaged over interior nodes), Linf, energy gap and level-set Hausdorff distances."""
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid.interior, b.grid.interior):
        raise ValueError("fields live on different grids")
    m = a.grid.interior
    d = np.abs(a.values[m] - b.values[m])
    ea = a.energy if np.isfinite(a.energy) else discrete_tv(a)
    eb = b.energy if np.isfinite(b.energy) else discrete_tv(b)
    haus = {float(t): hausdorff_points(level_crossings(a, t), level_crossings(b, t)) for t in levels}
    return Comparison(float(d.mean()), float(d.max()), float(abs(ea - eb)), haus)
