"""Level families: the t-indexed chords of a constructed solution.

A family knows how to produce the level line for any ``t`` (``line_at``) and
keeps the lines at the nodes of a ``t`` grid.  The superlevel set at ``t`` is
``Omega`` intersected with the closed half planes carried by the line, which
makes evaluation a monotone search over ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import Chord, ConvexBoundary, HalfPlane, Region, as_points

GAMMA_CHORD = "GammaChord"
UPSILON_PAIR = "UpsilonPair"
SINGLE_TO_UPSILON = "SingleToUpsilon"
CHORD = "Chord"
FULL = "Full"
EMPTY = "Empty"

_GAUSS_NODES = np.array([-1.0, 1.0]) / math.sqrt(3.0)
_GAUSS_WEIGHTS = np.array([1.0, 1.0])


@dataclass
class LevelLine:
    """Boundary of the superlevel set at ``t`` inside the domain.

    ``halfplanes`` carries one closed half plane per segment; the superlevel
    set is the domain intersected with all of them.  ``kind`` FULL means the
    superlevel set is the whole domain, EMPTY that it has no interior.
    """

    t: float
    segments: list
    kind: str
    halfplanes: list = field(default_factory=list)
    gamma_params: list = field(default_factory=list)
    upsilon_params: list = field(default_factory=list)

    @property
    def length(self) -> float:
        return float(sum(c.length for c in self.segments))

    def vertices(self):
        if not self.segments:
            return np.empty((0, 2))
        return np.array([p for c in self.segments for p in (c.p, c.q)], dtype=float)

    def contains(self, pts, boundary: ConvexBoundary, tol=0.0):
        pts = as_points(pts)
        if self.kind == EMPTY:
            return np.zeros(pts.shape[:-1], bool)
        ok = boundary.contains(pts, tol)
        for hp in self.halfplanes:
            ok &= hp.contains(pts, tol)
        return ok

    def margin(self, pts):
        pts = as_points(pts)
        if self.kind == EMPTY:
            return np.full(pts.shape[:-1], -np.inf)
        if not self.halfplanes:
            return np.full(pts.shape[:-1], np.inf)
        return np.min([hp.signed(pts) for hp in self.halfplanes], axis=0)

    def to_dict(self):
        return {
            "t": float(self.t),
            "kind": self.kind,
            "segments": [c.as_list() for c in self.segments],
        }


def chord_line(t, p, q, kind, keep=None, drop=None, gamma_params=(), upsilon_params=()):
    """Level line made of the single segment ``[p, q]``."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if np.linalg.norm(q - p) == 0.0:
        return LevelLine(t, [], EMPTY)
    hp = HalfPlane.through(p, q, keep=keep, drop=drop)
    return LevelLine(t, [Chord(p, q)], kind, [hp], list(gamma_params), list(upsilon_params))


@dataclass
class FatRegion:
    value: float
    region: Region
    label: str = ""

    @property
    def area(self):
        return self.region.area

    def to_dict(self):
        d = self.region.to_dict()
        d.update({"value": float(self.value), "label": self.label})
        return d


class LevelFamily:
    """A constructed least gradient solution described by its level lines."""

    def __init__(
        self,
        domain: ConvexBoundary,
        builder,
        m: float,
        M: float,
        n_t=2001,
        critical=(),
        case_id=None,
        fat_regions=(),
        gamma=None,
        datum=None,
        tau=None,
        meta=None,
    ):
        self.domain = domain
        self.builder = builder
        self.m = float(m)
        self.M = float(M)
        self.case_id = case_id
        self.fat_regions = list(fat_regions)
        self.gamma = gamma
        self.datum = datum
        self.tau = tau
        self.meta = dict(meta or {})
        grid = np.linspace(self.m, self.M, int(n_t)) if self.M > self.m else np.array([self.m])
        crit = [c for c in critical if c is not None and self.m < c < self.M]
        grid = np.union1d(grid, crit)
        # drop nodes that would make nearly empty slabs next to inserted values
        if len(grid) > 2:
            spacing = (self.M - self.m) / max(int(n_t) - 1, 1)
            keep = np.ones(len(grid), bool)
            crit_arr = np.array(crit) if crit else np.empty(0)
            for i in range(1, len(grid) - 1):
                if crit_arr.size and np.min(np.abs(crit_arr - grid[i])) == 0.0:
                    continue
                near = crit_arr.size and np.min(np.abs(crit_arr - grid[i])) < 1e-6 * spacing
                if near:
                    keep[i] = False
            grid = grid[keep]
        self.t_grid = grid
        self.lines = self.lines_at(grid) if len(grid) > 0 else []
        self._pack_nodes()

    # -- construction helpers ------------------------------------------------
    def lines_at(self, ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        out = [None] * len(ts)
        inner = (ts > self.m) & (ts < self.M)
        idx = np.flatnonzero(inner)
        if idx.size:
            built = self.builder(ts[idx])
            for k, ln in zip(idx, built):
                out[k] = ln
        for k in np.flatnonzero(~inner):
            t = ts[k]
            out[k] = LevelLine(float(t), [], FULL if t <= self.m else EMPTY)
        return out

    def line_at(self, t) -> LevelLine:
        return self.lines_at([t])[0]

    def _pack_nodes(self):
        n = len(self.lines)
        k = max([len(ln.halfplanes) for ln in self.lines] + [1])
        self._anchors = np.zeros((n, k, 2))
        self._normals = np.zeros((n, k, 2))
        self._hp_valid = np.zeros((n, k), bool)
        self._empty = np.zeros(n, bool)
        for i, ln in enumerate(self.lines):
            self._empty[i] = ln.kind == EMPTY
            for j, hp in enumerate(ln.halfplanes):
                self._anchors[i, j] = hp.anchor
                self._normals[i, j] = hp.normal
                self._hp_valid[i, j] = True

    def _node_margin(self, pts, idx):
        """Signed margin of ``pts[i]`` against the node line ``idx[i]``."""
        a = self._anchors[idx]
        nrm = self._normals[idx]
        s = np.einsum("nkd,nkd->nk", pts[:, None, :] - a, nrm)
        s = np.where(self._hp_valid[idx], s, np.inf)
        marg = s.min(axis=1)
        return np.where(self._empty[idx], -np.inf, marg)

    # -- queries --------------------------------------------------------------
    @property
    def diam(self):
        return self.domain.diam

    def fat_value_at(self, pts, tol=None):
        pts = as_points(pts)
        out = np.full(pts.shape[:-1], np.nan)
        for fr in self.fat_regions:
            inside = fr.region.contains(pts, tol)
            out = np.where(np.isnan(out) & inside, fr.value, out)
        return out

    def evaluate(self, p, iters=80) -> float:
        """Value at a point of the closed domain: the largest ``t`` whose superlevel set holds ``p``."""
        p = np.asarray(p, float)
        if not bool(self.domain.contains(p, 1e-12 * self.diam)):
            raise GeometryError(f"point {p.tolist()} lies outside the domain")
        fat = self.fat_value_at(p)
        if not np.isnan(fat):
            return float(fat)
        if len(self.t_grid) == 1:
            return self.m
        tol = 1e-12 * self.diam
        lo, hi = 0, len(self.t_grid) - 1
        if self.lines[hi].contains(p, self.domain, tol):
            return float(self.t_grid[hi])
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.lines[mid].contains(p, self.domain, tol):
                lo = mid
            else:
                hi = mid
        a, b = float(self.t_grid[lo]), float(self.t_grid[hi])
        for _ in range(iters):
            c = 0.5 * (a + b)
            if c in (a, b):
                break
            if self.line_at(c).contains(p, self.domain, tol):
                a = c
            else:
                b = c
        return a

    def evaluate_many(self, pts, tol=None):
        """Vectorized evaluation: node search plus linear interpolation of margins.

        Exact at grid levels and inside fat regions; between two grid levels
        the value is interpolated from the signed distances to the two node
        lines, so it always stays inside the slab.
        """
        pts = as_points(pts)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        tol = 1e-12 * self.diam if tol is None else tol
        n = len(self.t_grid)
        if n == 1:
            return np.full(shape, self.m)
        lo = np.zeros(len(flat), int)
        hi = np.full(len(flat), n - 1)
        top = self._node_margin(flat, hi) >= -tol
        while True:
            active = hi - lo > 1
            if not active.any():
                break
            mid = (lo + hi) // 2
            ok = self._node_margin(flat, mid) >= -tol
            lo = np.where(active & ok, mid, lo)
            hi = np.where(active & ~ok, mid, hi)
        m_lo = self._node_margin(flat, lo)
        m_hi = self._node_margin(flat, hi)
        t_lo = self.t_grid[lo]
        t_hi = self.t_grid[hi]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(
                np.isinf(m_lo) & np.isinf(m_hi),
                0.0,
                np.where(np.isinf(m_lo), 0.5, np.where(np.isinf(m_hi), 0.0, m_lo / (m_lo - m_hi))),
            )
        frac = np.clip(np.nan_to_num(frac), 0.0, 1.0)
        val = t_lo + frac * (t_hi - t_lo)
        val = np.where(top, self.t_grid[-1], val)
        fat = self.fat_value_at(flat)
        val = np.where(np.isnan(fat), val, fat)
        return val.reshape(shape)

    # -- integrals -------------------------------------------------------------
    def slab_quadrature(self):
        """Levels and weights of the per-slab two-point Gauss rule."""
        t = self.t_grid
        if len(t) < 2:
            return np.empty(0), np.empty(0)
        mid = 0.5 * (t[:-1] + t[1:])
        half = 0.5 * np.diff(t)
        levels = (mid[:, None] + half[:, None] * _GAUSS_NODES[None]).ravel()
        weights = (half[:, None] * _GAUSS_WEIGHTS[None]).ravel()
        return levels, weights

    def quadrature_lines(self):
        if not hasattr(self, "_qlines"):
            levels, weights = self.slab_quadrature()
            self._qlines = (levels, weights, self.lines_at(levels) if len(levels) else [])
        return self._qlines

    def to_dict(self, every=1):
        return {
            "case": self.case_id,
            "m": self.m,
            "M": self.M,
            "tau": None if self.tau is None else float(self.tau),
            "lines": [ln.to_dict() for ln in self.lines[::every] if ln.segments],
            "fat_regions": [fr.to_dict() for fr in self.fat_regions],
        }


# ---------------------------------------------------------------------------
# Family-level operations
# ---------------------------------------------------------------------------


@dataclass
class CoareaResult:
    value: float
    error_estimate: float

    def __float__(self):
        return self.value


def coarea_tv(family: LevelFamily) -> CoareaResult:
    """Total variation as the integral over t of the level-line length.

    Each slab between consecutive grid levels uses the two-point Gauss rule;
    the error estimate compares against the same rule on merged slabs.
    """
    levels, weights, lines = family.quadrature_lines()
    if not len(levels):
        return CoareaResult(0.0, 0.0)
    lengths = np.array([ln.length for ln in lines])
    fine = float(np.sum(weights * lengths))
    t = family.t_grid
    if len(t) >= 5:
        coarse_t = t[::2] if (len(t) - 1) % 2 == 0 else np.append(t[:-1:2], t[-1])
        mid = 0.5 * (coarse_t[:-1] + coarse_t[1:])
        half = 0.5 * np.diff(coarse_t)
        lv = (mid[:, None] + half[:, None] * _GAUSS_NODES[None]).ravel()
        wt = (half[:, None] * _GAUSS_WEIGHTS[None]).ravel()
        coarse = float(np.sum(wt * np.array([ln.length for ln in family.lines_at(lv)])))
        err = abs(fine - coarse) / 15.0
    else:
        err = float("nan")
    return CoareaResult(fine, err)


def nesting_violations(family: LevelFamily, tol=None, max_levels=None):
    """Count pairs ``s < t`` of grid levels where a vertex of the t-superlevel set leaves the s one."""
    tol = 1e-9 * family.diam if tol is None else tol
    lines = family.lines
    idx = np.arange(len(lines))
    if max_levels is not None and len(lines) > max_levels:
        idx = np.unique(np.linspace(0, len(lines) - 1, max_levels).astype(int))
    verts, owner = [], []
    for i in idx:
        v = lines[i].vertices()
        verts.append(v)
        owner += [i] * len(v)
    if not owner:
        return 0
    V = np.concatenate(verts)
    owner = np.array(owner)
    bad = 0
    for j in idx:
        sel = owner > j
        if not sel.any():
            continue
        marg = family._node_margin(V[sel], np.full(int(sel.sum()), j))
        bad += int(np.sum(marg < -tol))
    return bad


def segment_distance(p, a, b):
    """Distance from points ``p`` (n,2) to the segment [a, b]."""
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(p - a, axis=-1)
    lam = np.clip(((p - a) @ ab) / L2, 0.0, 1.0)
    return np.linalg.norm(p - (a + lam[:, None] * ab), axis=-1)


def hausdorff_segments(segs_a, segs_b, n=200):
    """Hausdorff distance between two finite unions of segments (sampled on each side)."""
    if not segs_a and not segs_b:
        return 0.0
    if not segs_a or not segs_b:
        return float("inf")

    def ends(segs):
        return sorted(tuple(sorted([tuple(map(float, c.p)), tuple(map(float, c.q))])) for c in segs)

    # identical unions are at distance zero exactly, not up to projection round-off
    if ends(segs_a) == ends(segs_b):
        return 0.0

    def sample(segs):
        lam = np.linspace(0.0, 1.0, n)[:, None]
        return np.concatenate([np.asarray(c.p) + lam * (np.asarray(c.q) - np.asarray(c.p)) for c in segs])

    def directed(src, dst):
        pts = sample(src)
        d = np.min([segment_distance(pts, np.asarray(c.p, float), np.asarray(c.q, float)) for c in dst], axis=0)
        return float(d.max())

    return max(directed(segs_a, segs_b), directed(segs_b, segs_a))


@dataclass
class ProbeResult:
    max_distance: float
    levels: np.ndarray
    distances: np.ndarray


def uniqueness_probe(family_a: LevelFamily, family_b: LevelFamily, levels=None, n=200) -> ProbeResult:
    """Per-level Hausdorff distance between the level boundaries of two families.

    Without explicit ``levels`` the slab midpoints of ``family_a`` inside the
    common range are used, so critical values themselves are never probed.
    """
    if levels is None:
        t = family_a.t_grid
        levels = 0.5 * (t[:-1] + t[1:])
    levels = np.asarray(levels, float)
    lo = max(family_a.m, family_b.m)
    hi = min(family_a.M, family_b.M)
    levels = levels[(levels > lo) & (levels < hi)]
    la = family_a.lines_at(levels)
    lb = family_b.lines_at(levels)
    d = np.array([hausdorff_segments(x.segments, y.segments, n) for x, y in zip(la, lb)])
    return ProbeResult(float(d.max()) if d.size else 0.0, levels, d)


def export_lines(family: LevelFamily, every=1):
    return family.to_dict(every)
