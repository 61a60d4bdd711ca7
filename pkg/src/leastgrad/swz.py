"""Chord constructions of least gradient solutions on strictly convex domains.

The solvers here never optimize over sets: each returns a
:class:`~leastgrad.levels.LevelFamily` whose level lines are the segments
prescribed for its class of boundary data.

``solve_case1``
    datum on an arc, minimal at both arc ends with a single interior
    maximum; below the critical level the level lines run to the free arc.
``solve_case2``
    strictly monotone datum on an arc; every level line joins the preimage
    to its nearest point on the free arc.
``solve_case3``
    datum with one interior minimum and maximum and equal end values,
    under the equidistance condition on the zero crossing.
``solve_piecewise_constant``
    three-valued datum on a closed curve.
``solve_single_arc``
    data on a closed curve whose superlevel sets are single arcs.
"""

from __future__ import annotations

import numpy as np

from .boundary_data import CONSTANT, DECREASING, INCREASING, BoundaryFunction, _merge_monotone
from .errors import ValidationError
from .geometry import (
    BoundaryArc,
    Chord,
    ConvexBoundary,
    HalfPlane,
    classify_distance_structure,
    distance_to_arc,
    half_plane_region,
    nearest_on_arc,
)
from .levels import (
    CHORD,
    EMPTY,
    FULL,
    GAMMA_CHORD,
    SINGLE_TO_UPSILON,
    UPSILON_PAIR,
    FatRegion,
    LevelFamily,
    LevelLine,
    chord_line,
)


def _runs(f: BoundaryFunction):
    return _merge_monotone(f.pieces)


def _require(cond, message, clause):
    if not cond:
        raise ValidationError(message, clause=clause)


def _check_arc(domain: ConvexBoundary, gamma: BoundaryArc, f: BoundaryFunction):
    _require(gamma.boundary is domain, "Gamma must lie on the domain boundary", "gamma")
    _require(not gamma.is_full, "a free arc is required (Gamma must be a proper arc)", "gamma")
    _require(f.arc.boundary is domain and abs(f.arc.s_start - gamma.s_start) <= domain.tol
             and abs(f.arc.length - gamma.length) <= domain.tol, "datum is not defined on Gamma", "datum")
    _require(f.continuous, "datum must be continuous on Gamma", "continuity")


# ---------------------------------------------------------------------------
# Case 1
# ---------------------------------------------------------------------------


def h_function(domain, gamma, f):
    """``h(t) = d(x^t, Upsilon) + d(y^t, Upsilon) - |x^t - y^t|`` (vectorized in t).

    On the circle the Upsilon distances are the distances to ``a`` and ``b``.
    """
    up, down = _runs(f)
    upsilon = gamma.complement()

    def h(t):
        t = np.atleast_1d(np.asarray(t, float))
        x = domain.param(up.inverse(t))
        y = domain.param(down.inverse(t))
        _, dx = nearest_on_arc(x, upsilon)
        _, dy = nearest_on_arc(y, upsilon)
        return dx + dy - np.linalg.norm(x - y, axis=-1)

    return h


def solve_case1(domain: ConvexBoundary, gamma: BoundaryArc, f: BoundaryFunction, n_t=2001) -> LevelFamily:
    _check_arc(domain, gamma, f)
    runs = _runs(f)
    _require(
        len(runs) == 2 and runs[0].kind == INCREASING and runs[1].kind == DECREASING,
        "datum must increase to a single strict maximum and then decrease",
        "strict-maximum",
    )
    tol = f.tol_f
    _require(abs(f.f_a - f.f_b) <= tol and abs(f.f_a - f.m) <= tol, "need f(a) = f(b) = inf f", "endpoint-minimum")
    up, down = runs
    s_M = up.s1
    x_M = domain.param(s_M)
    m, M = f.m, f.M
    upsilon = gamma.complement()
    # every intermediate value is attained exactly twice
    probe = np.linspace(m, M, 257)[1:-1]
    counts = sum(np.isfinite(v).astype(int) for v in f.monotone_preimages(probe).values())
    _require(np.all(counts == 2), "some value is not attained exactly twice", "two-preimages")

    h = h_function(domain, gamma, f)
    lo, hi = m, M
    h_lo, h_hi = float(h(m + 1e-12 * (M - m))[0]), float(h(M - 1e-12 * (M - m))[0])
    _require(h_lo < 0 < h_hi, "h does not change sign on (inf f, max f)", "h-sign")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid)[0] < 0:
            lo = mid
        else:
            hi = mid
    tau = lo if abs(h(lo)[0]) <= abs(h(hi)[0]) else hi

    def builder(ts):
        x_s = up.inverse(ts)
        y_s = down.inverse(ts)
        X = domain.param(x_s)
        Y = domain.param(y_s)
        p_s, _ = nearest_on_arc(X, upsilon)
        q_s, _ = nearest_on_arc(Y, upsilon)
        Pp = domain.param(p_s)
        Qq = domain.param(q_s)
        out = []
        for i, t in enumerate(ts):
            if t > tau:
                out.append(chord_line(t, X[i], Y[i], GAMMA_CHORD, keep=x_M, gamma_params=[x_s[i], y_s[i]]))
                continue
            segs, hps = [], []
            for a_pt, b_pt in ((X[i], Pp[i]), (Y[i], Qq[i])):
                if np.linalg.norm(a_pt - b_pt) > 0:
                    segs.append(Chord(a_pt, b_pt))
                    hps.append(HalfPlane.through(a_pt, b_pt, keep=x_M))
            out.append(LevelLine(t, segs, UPSILON_PAIR, hps, [x_s[i], y_s[i]], [p_s[i], q_s[i]]))
        return out

    xt = domain.param(up.inverse(np.array(tau)))
    yt = domain.param(down.inverse(np.array(tau)))
    pt = domain.param(nearest_on_arc(xt, upsilon)[0][0])
    qt = domain.param(nearest_on_arc(yt, upsilon)[0][0])
    region = half_plane_region(
        [
            HalfPlane.through(xt, pt, keep=x_M),
            HalfPlane.through(yt, qt, keep=x_M),
            HalfPlane.through(xt, yt, drop=x_M),
        ],
        domain,
    )
    fam = LevelFamily(
        domain,
        builder,
        m,
        M,
        n_t=n_t,
        critical=[tau],
        case_id=1,
        fat_regions=[FatRegion(tau, region, "tau")],
        gamma=gamma,
        datum=f,
        tau=tau,
        meta={"h": h, "x_M": x_M, "h_tau": float(h(tau)[0])},
    )
    fam.T_upsilon = fam.t_grid[(fam.t_grid > m) & (fam.t_grid <= tau)]
    fam.T_gamma = fam.t_grid[(fam.t_grid > tau) & (fam.t_grid < M)]
    return fam


# ---------------------------------------------------------------------------
# Case 2
# ---------------------------------------------------------------------------


def solve_case2(domain: ConvexBoundary, gamma: BoundaryArc, f: BoundaryFunction, n_t=2001, n_samples=512) -> LevelFamily:
    _check_arc(domain, gamma, f)
    runs = _runs(f)
    _require(len(runs) == 1 and runs[0].kind != CONSTANT, "datum must be strictly monotone on Gamma", "monotone")
    run = runs[0]
    increasing = run.kind == INCREASING
    upsilon = gamma.complement()
    cls = classify_distance_structure(gamma, upsilon, n_samples=n_samples)
    m, M = f.m, f.M

    fat, crit, tie_feet = [], [], {}
    for x0_s in cls.D:
        x0 = domain.param(x0_s)
        res = distance_to_arc(x0, upsilon, tol_min=1e-7 * domain.diam)
        if len(res.params) < 2:
            continue
        y1 = domain.param(res.params[0])
        y2 = domain.param(res.params[-1])
        region = half_plane_region([HalfPlane.through(x0, y1, keep=y2), HalfPlane.through(x0, y2, keep=y1)], domain)
        val = float(run(np.asarray(x0_s)))
        fat.append(FatRegion(val, region, f"D@{x0_s:.12g}"))
        crit.append(val)
        # the level line at the fat value itself is the limit from below
        tie_feet[val] = res.params[-1] if increasing else res.params[0]

    end = gamma.s_end if increasing else gamma.s_start

    def builder(ts):
        x_s = run.inverse(ts)
        X = domain.param(x_s)
        p_s, _ = nearest_on_arc(X, upsilon)
        for i, t in enumerate(ts):
            if float(t) in tie_feet:
                p_s[i] = tie_feet[float(t)]
        Pp = domain.param(p_s)
        refs = domain.param(0.5 * (x_s + end))
        return [
            chord_line(t, X[i], Pp[i], SINGLE_TO_UPSILON, keep=refs[i], gamma_params=[x_s[i]], upsilon_params=[p_s[i]])
            for i, t in enumerate(ts)
        ]

    fam = LevelFamily(domain, builder, m, M, n_t=n_t, critical=crit, case_id=2, fat_regions=fat, gamma=gamma, datum=f)
    fam.classification = cls
    return fam


# ---------------------------------------------------------------------------
# Case 3
# ---------------------------------------------------------------------------


def solve_case3(domain: ConvexBoundary, gamma: BoundaryArc, f: BoundaryFunction, n_t=2001, tol_A=1e-8) -> LevelFamily:
    _check_arc(domain, gamma, f)
    runs = _runs(f)
    kinds = [r.kind for r in runs]
    _require(
        kinds in ([INCREASING, DECREASING, INCREASING], [DECREASING, INCREASING, DECREASING]),
        "datum must have one interior local maximum and one interior local minimum",
        "extrema",
    )
    _require(abs(f.f_a - f.f_b) <= f.tol_f, "need f(a) = f(b)", "endpoint-values")
    fa = f.f_a
    r0, r1, r2 = runs
    if kinds[0] == INCREASING:
        s_M, s_m = r0.s1, r1.s1
        upper, lower = (r0, r1), (r1, r2)
    else:
        s_m, s_M = r0.s1, r1.s1
        upper, lower = (r1, r2), (r0, r1)
    x_M, x_m = domain.param(s_M), domain.param(s_m)
    _require(min(r1.v0, r1.v1) < fa < max(r1.v0, r1.v1), "the middle arc must cross f(a)", "x0")
    s0 = float(r1.inverse(np.array(fa)))
    x0 = domain.param(s0)
    a, b = gamma.endpoint_a, gamma.endpoint_b
    upsilon = gamma.complement()
    res = distance_to_arc(x0, upsilon)
    da, db = np.linalg.norm(x0 - a), np.linalg.norm(x0 - b)
    resid = max(abs(res.d - da), abs(res.d - db)) / domain.diam
    _require(resid <= tol_A, f"condition (A) fails at x0: relative residual {resid:.3g}", "condition-A")

    def builder(ts):
        ts = np.asarray(ts, float)
        hi_mask = ts > fa
        out = [None] * len(ts)
        for mask, (pa, pb), is_upper in ((hi_mask, upper, True), (~hi_mask, lower, False)):
            idx = np.flatnonzero(mask)
            if not idx.size:
                continue
            sa = pa.inverse(ts[idx])
            sb = pb.inverse(ts[idx])
            A = domain.param(sa)
            B = domain.param(sb)
            for j, i in enumerate(idx):
                if is_upper:
                    out[i] = chord_line(ts[i], A[j], B[j], GAMMA_CHORD, keep=x_M, gamma_params=[sa[j], sb[j]])
                else:
                    out[i] = chord_line(ts[i], A[j], B[j], GAMMA_CHORD, drop=x_m, gamma_params=[sa[j], sb[j]])
        return out

    # the fat region is cut off by the limit chords [a, x0] and [x0, b]
    first, last = (x_M, x_m) if kinds[0] == INCREASING else (x_m, x_M)
    region = half_plane_region([HalfPlane.through(a, x0, drop=first), HalfPlane.through(x0, b, drop=last)], domain)
    fam = LevelFamily(
        domain,
        builder,
        f.m,
        f.M,
        n_t=n_t,
        critical=[fa],
        case_id=3,
        fat_regions=[FatRegion(fa, region, "f(a)")],
        gamma=gamma,
        datum=f,
        meta={"x0": x0, "x0_param": s0, "condition_A_residual": resid},
    )
    tri = np.array([x0, a, b])
    u, v = tri[1] - tri[0], tri[2] - tri[0]
    fam.meta["triangle_area"] = 0.5 * abs(float(u[0] * v[1] - u[1] * v[0]))
    return fam


# ---------------------------------------------------------------------------
# Closed-curve data
# ---------------------------------------------------------------------------


def solve_piecewise_constant(domain: ConvexBoundary, f: BoundaryFunction, n_t=2001) -> LevelFamily:
    """Three-valued datum ``v0 < v2 < v1`` on consecutive arcs starting at x0, x1, x2."""
    _require(f.is_closed_loop, "piecewise-constant data live on the whole boundary", "arc")
    _require(len(f.pieces) == 3 and all(p.kind == CONSTANT for p in f.pieces), "need exactly three constant pieces", "pieces")
    v0, v1, v2 = (p.v0 for p in f.pieces)
    a1, a2 = v2 - v0, v1 - v2
    _require(a1 > 0 and a2 > 0, "need alpha_1 > 0 and alpha_2 > 0 (values v0 < v2 < v1)", "alpha")
    s0, s1, s2 = (p.s0 for p in f.pieces)
    x0, x1, x2 = (domain.param(s) for s in (s0, s1, s2))
    mid01 = domain.param(0.5 * (s0 + s1))
    mid12 = domain.param(0.5 * (s1 + s2))
    for p, q in ((x0, x1), (x1, x2), (x0, x2)):
        _require(np.linalg.norm(p - q) > domain.tol, "x0, x1, x2 must be distinct", "points")

    def builder(ts):
        out = []
        for t in ts:
            if t <= v2:
                out.append(chord_line(t, x0, x1, CHORD, drop=mid01, gamma_params=[s0, s1]))
            else:
                out.append(chord_line(t, x1, x2, CHORD, keep=mid12, gamma_params=[s1, s2]))
        return out

    h01 = HalfPlane.through(x0, x1, keep=mid01)
    h12 = HalfPlane.through(x1, x2, keep=mid12)
    fat = [
        FatRegion(v0, half_plane_region([h01], domain), "v0"),
        FatRegion(v1, half_plane_region([h12], domain), "v1"),
        FatRegion(v2, half_plane_region([h01.flipped(), h12.flipped()], domain), "v2"),
    ]
    fam = LevelFamily(domain, builder, v0, v1, n_t=n_t, critical=[v2], case_id="piecewise", fat_regions=fat, datum=f)
    fam.meta.update({"alpha": (a1, a2), "points": (x0, x1, x2)})
    return fam


def solve_single_arc(domain: ConvexBoundary, f: BoundaryFunction, n_t=2001) -> LevelFamily:
    """Closed-curve datum whose superlevel sets on the boundary are single arcs.

    The level line at ``t`` is the chord joining the two ends of the arc
    ``{f >= t}``; this covers the continuous approximations of
    piecewise-constant data.
    """
    _require(f.is_closed_loop, "datum must cover the whole boundary", "arc")

    def builder(ts):
        pre = f.monotone_preimages(ts)
        out = []
        for i, t in enumerate(ts):
            cr = [v[i] for v in pre.values() if np.isfinite(v[i])]
            arcs = f.superlevel_arcs(t, cr)
            if not arcs:
                out.append(LevelLine(float(t), [], EMPTY))
                continue
            _require(len(arcs) == 1, f"superlevel set at t={t:g} has {len(arcs)} arcs", "single-arc")
            lo, hi = arcs[0]
            if hi - lo >= domain.total_length - domain.tol:
                out.append(LevelLine(float(t), [], FULL))
                continue
            p, q = domain.param(lo), domain.param(hi)
            out.append(chord_line(t, p, q, CHORD, keep=domain.param(0.5 * (lo + hi)), gamma_params=[lo, hi]))
        return out

    return LevelFamily(domain, builder, f.m, f.M, n_t=n_t, case_id="single-arc", datum=f)
