"""Run a scenario: build the solution, check invariants, write artifacts.

Every check is recorded as an :class:`Invariant` with its measured value
and threshold; the exit status is 0 when all pass and 2 otherwise.
Precondition failures surface as :class:`~leastgrad.errors.ValidationError`
before any artifact is written (exit status 3 in the CLI).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fmd, levels, rect, swz, tv_oracle
from .boundary_data import piecewise_constant
from .geometry import ConvexBoundary
from .scenarios import Built, Scenario, build
from .svg import emit_svg

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INVARIANT, EXIT_PRECONDITION = 0, 2, 3


@dataclass
class Invariant:
    name: str
    value: float
    threshold: float
    relation: str = "<="
    passed: bool = False
    note: str = ""

    def __post_init__(self):
        v, t = float(self.value), float(self.threshold)
        self.passed = bool(
            {"<=": v <= t, ">=": v >= t, "<": v < t, ">": v > t, "==": v == t}[self.relation] and math.isfinite(v)
        )


@dataclass
class RunReport:
    scenario: dict
    results: dict = field(default_factory=dict)
    invariants: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(inv.passed for inv in self.invariants)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_INVARIANT

    def invariant(self, name) -> Invariant:
        for inv in self.invariants:
            if inv.name == name:
                return inv
        raise KeyError(name)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "results": _jsonable(self.results),
            "invariants": [_jsonable(asdict(inv)) for inv in self.invariants],
            "passed": self.passed,
            "exit_code": self.exit_code,
            "timings": self.timings,
            "artifacts": self.artifacts,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------


def random_points(domain: ConvexBoundary, n, rng, margin=1e-9):
    """Uniform points in the open domain (rejection from the bounding box)."""
    lo, hi = domain.bounding_box()
    out = []
    got = 0
    while got < n:
        P = lo + (hi - lo) * rng.random((2 * (n - got) + 16, 2))
        P = P[domain.contains(P, -margin * domain.diam)]
        out.append(P)
        got += len(P)
    return np.concatenate(out)[:n]


# ---------------------------------------------------------------------------
# Invariant groups
# ---------------------------------------------------------------------------


def _common(b: Built, rep: RunReport, rng, ctx, n_range=100_000):
    fam, f = b.family, b.datum
    ev = b.evaluator()
    pts = random_points(b.domain, n_range, rng)
    vals = ev(pts)
    ctx["range"] = (pts, vals)
    tol = 1e-12 * max(1.0, abs(f.M), abs(f.m))
    bad = int(np.sum((vals < f.m - tol) | (vals > f.M + tol) | ~np.isfinite(vals)))
    rep.invariants.append(Invariant("range", bad, 0, "<=", note=f"{n_range} points, [{f.m:.6g}, {f.M:.6g}]"))
    rep.invariants.append(Invariant("nesting", levels.nesting_violations(fam), 0, "<=", note="all grid level pairs"))

    co = levels.coarea_tv(fam)
    q = fmd.du_to_flux(fam)
    rep.results["coarea_tv"] = co.value
    rep.results["coarea_error_estimate"] = co.error_estimate
    rep.results["flux_mass"] = q.mass
    rep.invariants.append(
        Invariant("duality_energy", abs(q.mass - co.value), 1e-12 * max(1.0, co.value), note="mass(flux) vs coarea")
    )
    ext = fmd.extended_datum(fam)
    worst = 0.0
    for _ in range(20):
        phi = fmd.Polynomial.random(rng)
        worst = max(worst, fmd.trace_identity_residual(fam, phi, q, ext) / (1.0 + phi.lipschitz(b.domain)))
    rep.invariants.append(Invariant("trace_identity", worst, 1e-6, note="20 random polynomials, scaled by 1+Lip"))
    if b.partial:
        cut = fmd.vanishing_cutoff(b.arc)
        worst = 0.0
        for _ in range(10):
            phi = fmd.Polynomial.random(rng, cutoff=cut)
            worst = max(worst, fmd.partial_trace_residual(fam, phi, q) / (1.0 + phi.lipschitz(b.domain)))
        rep.invariants.append(Invariant("partial_trace_identity", worst, 1e-6, note="10 test functions vanishing off Gamma"))
    else:
        rep.invariants.append(
            Invariant("self_equilibrated", abs(f.tangential_derivative().total_mass), 1e-12, note="total boundary load")
        )
    rep.results["fat_regions"] = [{"label": fr.label, "value": fr.value, "area": fr.region.area} for fr in fam.fat_regions]
    if fam.tau is not None:
        rep.results["tau"] = fam.tau
    return q


def _rectangle(b: Built, rep: RunReport, rng, ctx, n_pairs=100_000):
    R, f = b.domain, b.datum
    ev = b.evaluator()
    half = n_pairs // 2
    x1, w1 = ctx["range"]
    x1, w1 = x1[:n_pairs], w1[:n_pairs]
    x2 = np.concatenate([random_points(R, half, rng), x1[half:] + 1e-3 * rng.standard_normal((n_pairs - half, 2))])
    x2[half:] = np.clip(x2[half:], [-R.L * (1 - 1e-9), -R.h * (1 - 1e-9)], [R.L * (1 - 1e-9), R.h * (1 - 1e-9)])
    dw = np.abs(w1 - ev(x2))
    bound = rect.modulus_bound(R, f, x1, x2)
    viol = int(np.sum(dw > bound + 1e-12))
    rep.invariants.append(Invariant("modulus_bound", viol, 0, "<=", note=f"{n_pairs} pairs, half of them close"))
    d = b.scenario.datum
    if d.get("expr_id") == "linear":
        c0, cx, cy = map(float, d.get("coeffs", [0.0, 1.0, 0.0]))
        pts = random_points(R, 10_000, rng)
        err = float(np.max(np.abs(ev(pts) - (c0 + cx * pts[:, 0] + cy * pts[:, 1]))))
        rep.results["affine_max_error"] = err
        rep.invariants.append(Invariant("affine_exact", err, 1e-10, note="10^4 random points"))


def _case1(b: Built, rep: RunReport, rng, ctx, n_scan=1_000_000, n_mc=1_000_000):
    fam = b.family
    h = fam.meta["h"]
    tau = fam.tau
    rep.invariants.append(Invariant("h_tau", abs(fam.meta["h_tau"]), 1e-10, note="|h(tau)|"))
    ts = np.linspace(fam.m, fam.M, n_scan)[1:-1]
    hv = np.concatenate([h(c) for c in np.array_split(ts, 20)])
    k = int(np.flatnonzero(np.diff(np.sign(hv)) != 0)[0])
    t0, t1, h0, h1 = ts[k], ts[k + 1], hv[k], hv[k + 1]
    tau_scan = t0 - h0 * (t1 - t0) / (h1 - h0)
    rep.results["tau_dense_scan"] = tau_scan
    rep.invariants.append(Invariant("tau_vs_dense_scan", abs(tau - tau_scan), 1e-6, note=f"{n_scan} levels"))
    bad = sum(1 for ln in fam.lines if (ln.kind == levels.GAMMA_CHORD and ln.t <= tau) or (ln.kind == levels.UPSILON_PAIR and ln.t > tau))
    rep.invariants.append(Invariant("tau_split", bad, 0, note="GammaChord only above tau, UpsilonPair only below"))
    _fat_monte_carlo(b, rep, rng, n_mc)


def _fat_monte_carlo(b: Built, rep: RunReport, rng, n_mc):
    lo, hi = b.domain.bounding_box()
    P = lo + (hi - lo) * rng.random((n_mc, 2))
    box = float(np.prod(hi - lo))
    for i, fr in enumerate(b.family.fat_regions):
        est = box * float(np.mean(fr.region.contains(P)))
        rep.results["fat_regions"][i]["area_monte_carlo"] = est
        rep.invariants.append(Invariant(f"fat_area_positive[{fr.label}]", est, 0.0, ">", note=f"Monte Carlo, {n_mc} samples"))


def _case2(b: Built, rep: RunReport, rng, ctx, n_mc=1_000_000):
    fam = b.family
    cls = fam.classification
    rep.results["D"] = list(cls.D)
    rep.results["B_a"] = list(cls.B_a)
    rep.results["B_b"] = list(cls.B_b)
    a, bb = b.arc.endpoint_a, b.arc.endpoint_b
    tol_s = 1e-6 * b.domain.total_length
    tol_p = 1e-7 * b.domain.diam
    bad = 0
    worst_angle = 0.0
    n_open = 0
    up = b.upsilon
    for ln in fam.lines:
        if ln.kind != levels.SINGLE_TO_UPSILON:
            continue
        s = ln.gamma_params[0]
        foot = np.asarray(ln.segments[0].q, float)
        if s < cls.s_a - tol_s and np.linalg.norm(foot - a) > tol_p:
            bad += 1
        if s > cls.s_b + tol_s and np.linalg.norm(foot - bb) > tol_p:
            bad += 1
        u = ln.upsilon_params[0]
        if up.interior_contains(np.asarray(u), tol=tol_s):
            d = foot - np.asarray(ln.segments[0].p, float)
            tan = b.domain.tangent(u)
            ang = math.asin(min(1.0, abs(float(d @ tan)) / float(np.linalg.norm(d))))
            worst_angle = max(worst_angle, ang)
            n_open += 1
    rep.invariants.append(Invariant("endpoint_classification", bad, 0, note="chords from B_a / B_b end at a / b"))
    rep.invariants.append(Invariant("orthogonality", worst_angle, 1e-3, note=f"{n_open} endpoints in the open free arc (rad)"))
    _fat_monte_carlo(b, rep, rng, n_mc)


def _case3(b: Built, rep: RunReport, rng, ctx, n_mc=1_000_000):
    fam = b.family
    rep.invariants.append(Invariant("condition_A", fam.meta["condition_A_residual"], 1e-8, note="relative residual at x0"))
    rep.results["triangle_area"] = fam.meta["triangle_area"]
    _fat_monte_carlo(b, rep, rng, n_mc)


def _distinct_chords(fam, ndigits=9):
    seen = {}
    for ln in fam.lines:
        for c in ln.segments:
            key = tuple(sorted([tuple(np.round(c.p, ndigits)), tuple(np.round(c.q, ndigits))]))
            seen.setdefault(key, c)
    return list(seen.values())


def _forms_triangle(chords, ndigits=9):
    ends = [{tuple(np.round(c.p, ndigits)), tuple(np.round(c.q, ndigits))} for c in chords]
    n = len(ends)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                pts = ends[i] | ends[j] | ends[k]
                if len(pts) == 3 and all(len(e) == 2 for e in (ends[i], ends[j], ends[k])):
                    return True
    return False


def mollified_probe(b: Built, eps_list):
    """Hausdorff distance between level boundaries of ramped data and the direct construction."""
    f = b.datum
    bps = [p.s0 for p in f.pieces]
    vals = [p.v0 for p in f.pieces]
    out = []
    for eps in eps_list:
        fe = piecewise_constant(b.domain.full_arc(), bps, vals, ramp=eps)
        fam_e = swz.solve_single_arc(b.domain, fe, n_t=len(b.family.t_grid))
        out.append(levels.uniqueness_probe(b.family, fam_e).max_distance)
    return np.array(out)


def fit_linear_rate(eps, dist):
    """Constant ``C`` of ``dist ~ C eps`` (geometric mean of ratios) and the worst factor off linear decay."""
    eps, dist = np.asarray(eps, float), np.asarray(dist, float)
    C = float(np.exp(np.mean(np.log(dist / eps))))
    off = float(np.max(np.maximum(dist / (C * eps), C * eps / dist)))
    return C, off


def _piecewise(b: Built, rep: RunReport, rng, ctx):
    fam = b.family
    chords = _distinct_chords(fam)
    rep.results["chords"] = [c.as_list() for c in chords]
    rep.invariants.append(Invariant("chord_count", len(chords), 2, "==", note="distinct level boundaries"))
    rep.invariants.append(Invariant("no_triangle", int(_forms_triangle(chords)), 0, "==", note="emitted boundaries never close a triangle"))
    eps_list = b.scenario.params.get("mollify")
    if eps_list:
        d = mollified_probe(b, eps_list)
        C, off = fit_linear_rate(eps_list, d)
        rep.results["mollified"] = {"eps": list(eps_list), "hausdorff": d.tolist(), "C": C, "factor_off_linear": off}
        rep.invariants.append(Invariant("mollified_linear_rate", off, 3.0, note=f"fitted C = {C:.4g}"))


def _fmd_load(b: Built, rep: RunReport, rng, ctx, n=20_000):
    sol = b.solution
    R = sol.rect
    u00 = float(sol.evaluate(np.array([[0.0, 0.0]]))[0])
    u00_fam = float(sol.family.evaluate(np.array([0.0, 0.0])))
    rep.results["u00"] = u00
    rep.invariants.append(Invariant("u00", max(abs(u00 - 0.5), abs(u00_fam - 0.5)), 1e-10, note="closed form and level family"))
    pts = random_points(R, n, rng)
    left, right = (fr.region for fr in sol.family.fat_regions)
    u = sol.evaluate(pts)
    in_l = left.contains(pts, 0.0)
    in_r = right.contains(pts, 0.0)
    bad = int(np.sum(u[in_l] != 0.0) + np.sum(u[in_r] != sol.top_value))
    rep.invariants.append(Invariant("constant_outside_Q", bad, 0, note=f"{int(in_l.sum())} left, {int(in_r.sum())} right points"))
    rep.invariants.append(Invariant("self_equilibration", abs(sol.self_equilibration), 1e-12, note="total load"))
    eps = float(b.scenario.params.get("eps", 1e-3))
    fe = sol.perturbed(eps)
    ue = rect.evaluate_rect(R, fe, pts)
    diff = ue - u
    rep.results["perturbed"] = {"eps": eps, "min_diff": float(diff.min()), "max_diff": float(diff.max())}
    viol = int(np.sum((diff < -1e-12) | (diff > eps + 1e-12)))
    rep.invariants.append(Invariant("perturbed_bracket", viol, 0, note=f"0 <= u_eps - u <= eps at {n} points"))


_SPECIFIC = {
    "rectangle": _rectangle,
    "case1": _case1,
    "case2": _case2,
    "case3": _case3,
    "piecewise": _piecewise,
    "fmd_load": _fmd_load,
}


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


def oracle_levels(b: Built):
    fam = b.family
    if b.scenario.solver == "piecewise":
        v0, v1, v2 = (p.v0 for p in b.datum.pieces)
        return [0.5 * (v0 + v2), 0.5 * (v2 + v1)]
    return [fam.m + q * (fam.M - fam.m) for q in (0.25, 0.5, 0.75)]


def run_oracle(b: Built, n: int):
    """Rasterized construction and discrete minimizer on an ``n``-node grid."""
    grid = tv_oracle.make_grid(b.domain, b.datum, n, b.upsilon)
    geo = tv_oracle.rasterize(b.evaluator(), grid)
    orc = tv_oracle.minimize_tv_dirichlet(grid)
    cmp = tv_oracle.compare(geo, orc, oracle_levels(b))
    return grid, geo, orc, cmp


def _oracle(b: Built, rep: RunReport, grids, coarea):
    rows = []
    fields = None
    for n in grids:
        t0 = time.perf_counter()
        grid, geo, orc, cmp = run_oracle(b, n)
        rng_f = b.datum.M - b.datum.m
        row = {
            "n": n,
            "spacing": grid.spacing,
            "oracle_energy": orc.energy,
            "geometric_discrete_tv": geo.energy,
            "gap_to_coarea": abs(orc.energy - coarea),
            "iterations": orc.iterations,
            "status": orc.flag,
            "l1": cmp.l1,
            "l1_over_range": cmp.l1 / rng_f if rng_f > 0 else 0.0,
            "linf": cmp.linf,
            "energy_gap": cmp.energy_gap,
            "hausdorff": {f"{t:.6g}": d for t, d in cmp.hausdorff.items()},
        }
        rep.timings[f"oracle_{n}"] = time.perf_counter() - t0
        rows.append(row)
        rep.invariants.append(
            Invariant(
                f"oracle_below_rasterized[{n}]",
                orc.energy - geo.energy,
                1e-8 * max(1.0, geo.energy),
                note="the rasterized construction is feasible for the discrete problem",
            )
        )
        vals = orc.values[grid.interior]
        out = int(np.sum((vals < b.datum.m - 1e-12) | (vals > b.datum.M + 1e-12)))
        rep.invariants.append(Invariant(f"oracle_max_principle[{n}]", out, 0))
        if b.scenario.solver == "piecewise":
            worst = 0.0
            x0, x1, x2 = b.family.meta["points"]
            for t, (p, q) in zip(oracle_levels(b), ((x0, x1), (x1, x2))):
                pts = tv_oracle.level_crossings(orc, t)
                if len(pts):
                    worst = max(worst, float(levels.segment_distance(pts, p, q).max()) / grid.spacing)
            row["level_distance_cells"] = worst
            rep.invariants.append(Invariant(f"oracle_near_chords[{n}]", worst, 2.0, note="cells"))
        fields = (geo, orc)
    for prev, cur in zip(rows[:-1], rows[1:]):
        rep.invariants.append(
            Invariant(
                f"oracle_refinement[{prev['n']}->{cur['n']}]",
                cur["gap_to_coarea"] - prev["gap_to_coarea"],
                1e-8 * max(1.0, coarea),
                note="|oracle energy - coarea TV| non-increasing",
            )
        )
    rep.results["oracle"] = rows
    return fields


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _levels_json(fam, max_lines=201):
    d = fam.to_dict()
    lines = d["lines"]
    if len(lines) > max_lines:
        idx = np.unique(np.linspace(0, len(lines) - 1, max_lines).round().astype(int))
        d["lines"] = [lines[i] for i in idx]
    d["chords"] = [c.as_list() for c in _distinct_chords(fam)]
    return d


def run_scenario(s: Scenario, out_dir=None, grids=None, t_grid=None, seed=None, oracle=True) -> RunReport:
    """Build, verify and (when ``out_dir`` is given) write the artifacts of one scenario."""
    if grids is not None:
        s.oracle_grids = sorted(grids)
    if t_grid is not None:
        s.t_grid = int(t_grid)
    if seed is not None:
        s.seed = int(seed)
    rep = RunReport(scenario=s.echo())
    rng = np.random.default_rng(s.seed)
    t0 = time.perf_counter()
    b = build(s)
    rep.timings["build"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    ctx = {}
    q = _common(b, rep, rng, ctx)
    _SPECIFIC[s.solver](b, rep, rng, ctx)
    rep.timings["invariants"] = time.perf_counter() - t1

    fields = None
    if oracle and s.oracle_grids:
        fields = _oracle(b, rep, s.oracle_grids, rep.results["coarea_tv"])
    rep.timings["total"] = time.perf_counter() - t0

    out = out_dir or s.out_dir
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "levels.json").write_text(json.dumps(_jsonable(_levels_json(b.family)), indent=1))
        (out / "flux.json").write_text(json.dumps(_jsonable(q.to_dict())))
        emit_svg(b.family, b.domain, out / "plot.svg")
        rep.artifacts = ["levels.json", "flux.json", "plot.svg"]
        if fields is not None:
            fields[0].to_csv(out / "field.csv")
            fields[1].to_csv(out / "oracle.csv")
            rep.artifacts += ["field.csv", "oracle.csv"]
        rep.artifacts.append("report.json")
        (out / "report.json").write_text(json.dumps(rep.to_dict(), indent=1))
    return rep


def numeric_diff(a, b, skip=("timings", "artifacts")):
    """Largest relative difference between numeric leaves of two reports, and structural mismatches."""
    worst = 0.0
    mismatches = []

    def walk(x, y, path):
        nonlocal worst
        if isinstance(x, dict) and isinstance(y, dict):
            for k in set(x) | set(y):
                if k in skip and path == "":
                    continue
                if k not in x or k not in y:
                    mismatches.append(f"{path}/{k}")
                    continue
                walk(x[k], y[k], f"{path}/{k}")
        elif isinstance(x, list) and isinstance(y, list):
            if len(x) != len(y):
                mismatches.append(path)
                return
            for i, (u, v) in enumerate(zip(x, y)):
                walk(u, v, f"{path}[{i}]")
        elif isinstance(x, (int, float)) and isinstance(y, (int, float)) and not isinstance(x, bool):
            worst = max(worst, abs(x - y) / max(1.0, abs(x), abs(y)))
        elif x != y:
            mismatches.append(path)

    walk(a, b, "")
    return worst, mismatches
