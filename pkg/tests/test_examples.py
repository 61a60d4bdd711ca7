"""Worked input/output examples for the public operations, frozen as regression values."""

import math

import numpy as np
import pytest
from scipy import integrate

from conftest import built
from leastgrad import fmd, levels, rect, swz, tv_oracle
from leastgrad.boundary_data import linear_datum, piecewise_constant, preimage, segment_callable, validate_monotone_pair
from leastgrad.errors import ValidationError
from leastgrad.geometry import (
    BoundaryArc,
    Circle,
    HalfPlane,
    Rectangle,
    Superellipse,
    classify_distance_structure,
    distance_to_arc,
    half_plane_region,
    project_to_boundary,
)
from leastgrad.runner import run_scenario
from leastgrad.scenarios import bundled_names, load_scenario


def _angle(p):
    return float(np.mod(math.atan2(p[1], p[0]), 2 * math.pi))


def _unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


@pytest.fixture(scope="module")
def square():
    R = Rectangle(1.0, 1.0)
    return R, linear_datum(R.full_arc(), 0.5, 0.25, -0.25)


def _section5_datum():
    c = Circle()
    return c, piecewise_constant(c.full_arc(), [0.0, 0.5 * math.pi, math.pi], [0.0, 2.0, 1.0])


# --- geometry ----------------------------------------------------------------------


def test_projection_to_boundary():
    c = Circle()
    assert project_to_boundary(c, (0.0, 0.0)) == 0.0
    assert project_to_boundary(c, (2.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    R = Rectangle(1.0, 1.0)
    assert np.allclose(R.param(project_to_boundary(R, (0.5, 2.0))), [0.5, 1.0], atol=1e-12)


def test_distance_to_quarter_arc():
    c = Circle()
    up = c.arc(-0.25 * math.pi, 0.25 * math.pi)
    res = distance_to_arc(np.array([-1.0, 0.0]), up)
    assert res.d == pytest.approx(2 * math.sin(3 * math.pi / 8), abs=1e-12)
    assert res.d == pytest.approx(1.847759, abs=1e-6)
    assert len(res.minimizers) == 2
    assert sorted(_angle(p) for p in res.minimizers) == pytest.approx([0.25 * math.pi, 1.75 * math.pi])

    res = distance_to_arc(_unit(0.5 * math.pi), up)
    assert res.d == pytest.approx(2 * math.sin(math.pi / 8), abs=1e-12)
    assert len(res.minimizers) == 1
    assert np.allclose(res.minimizers[0], _unit(0.25 * math.pi))

    res = distance_to_arc(up.endpoint_a, up)
    assert res.d == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.minimizers[0], up.endpoint_a)


def test_classification_intervals_on_symmetric_disc():
    c = Circle()
    up = c.arc(-0.25 * math.pi, 0.25 * math.pi)
    cls = classify_distance_structure(up.complement(), up)
    assert len(cls.S) == 0
    assert cls.D == pytest.approx([math.pi], abs=1e-9)
    assert cls.B_a == pytest.approx((0.25 * math.pi, math.pi), abs=1e-7)
    assert cls.B_b == pytest.approx((math.pi, 1.75 * math.pi), abs=1e-7)


def test_half_disc_free_arc_gives_the_midpoint():
    c = Circle()
    up = c.arc(math.pi, 2 * math.pi)
    cls = classify_distance_structure(up.complement(), up)
    assert cls.D == pytest.approx([0.5 * math.pi], abs=1e-9)


def test_superellipse_has_interior_feet():
    b = Superellipse(4.0)
    y = -((1 - 0.5**4) ** 0.25)
    s0 = project_to_boundary(b, (-0.5, y))
    s1 = project_to_boundary(b, (0.5, y))
    up = BoundaryArc(b, s0, np.mod(s1 - s0, b.total_length))
    assert abs(up.endpoint_a[0] + 0.5) < 1e-6 and abs(up.endpoint_b[0] - 0.5) < 1e-6
    cls = classify_distance_structure(up.complement(), up)
    assert len(cls.S) > 0


def test_half_plane_region_special_cases():
    c = Circle()
    assert half_plane_region([HalfPlane(np.zeros(2), np.array([0.0, 1.0]))], c).area == pytest.approx(math.pi / 2, rel=1e-12)
    assert half_plane_region([HalfPlane(np.array([0.0, 1.0]), np.array([0.0, 1.0]))], c).area == pytest.approx(0.0, abs=1e-12)
    assert half_plane_region([HalfPlane(np.array([0.0, 2.0]), np.array([0.0, 1.0]))], c).area == 0.0


# --- boundary data -----------------------------------------------------------------


def test_preimage_of_linear_rectangle_datum(square):
    R, f = square
    pre = preimage(f, 0.25)
    pts = sorted(tuple(np.round(R.param(s), 12)) for s in pre.params)
    assert pts == [(-1.0, 0.0), (0.0, 1.0)]


def test_preimage_of_tent_datum():
    f = built("d2_case1").datum
    pre = preimage(f, 0.5)
    assert sorted(np.mod(pre.params, 2 * math.pi)) == pytest.approx([math.pi / 8, 7 * math.pi / 8], abs=1e-10)
    assert len(preimage(f, 1.0).params) == 1


def test_rectangle_monotonicity_examples(square):
    R, f = square
    assert validate_monotone_pair(f, R).ok
    with pytest.raises(ValidationError):
        validate_monotone_pair(linear_datum(R.full_arc(), 0.0, 1.0, 0.0), R)
    wavy = segment_callable(
        R.full_arc(), lambda s: f(s) + 0.3 * np.sin(4 * math.pi * R.param(s)[..., 0])
    )
    assert not validate_monotone_pair(wavy, R, raise_on_fail=False).ok


def test_three_atom_datum_derivative():
    c, f = _section5_datum()
    g = f.tangential_derivative()
    atoms = {round(s, 12): w for s, w in g.atoms}
    assert atoms == {0.0: -1.0, round(0.5 * math.pi, 12): 2.0, round(math.pi, 12): -1.0}
    assert g.pair(lambda p: p[..., 0]) == pytest.approx(0.0, abs=1e-14)
    assert g.pair(lambda p: np.ones(np.shape(p)[:-1])) == pytest.approx(0.0, abs=1e-14)


def test_constant_datum_has_zero_derivative():
    g = linear_datum(Circle().full_arc(), 3.0).tangential_derivative()
    assert g.total_mass == 0.0
    assert g.pair(lambda p: p[..., 0] + p[..., 1] ** 2) == pytest.approx(0.0, abs=1e-14)


# --- chord constructions -----------------------------------------------------------


def test_tent_case_h_closed_form():
    fam = built("d2_case1").family
    t = np.linspace(0.02, 0.98, 49)
    ref = 4 * np.sin(3 * math.pi * t / 8) - 2 * np.sin(3 * math.pi * (1 - t) / 4)
    assert np.max(np.abs(fam.meta["h"](t) - ref)) < 1e-10


def test_tent_case_upper_level_is_a_gamma_chord():
    ln = built("d2_case1").family.line_at(0.9)
    assert ln.kind == levels.GAMMA_CHORD
    (c,) = ln.segments
    assert sorted([_angle(c.p), _angle(c.q)]) == pytest.approx([0.425 * math.pi, 0.575 * math.pi], abs=1e-10)


def test_monotone_case_quarter_level():
    b = built("d1_monotone")
    ln = b.family.line_at(0.25)
    (c,) = ln.segments
    ends = sorted([_angle(c.p), _angle(c.q)])
    assert ends == pytest.approx([0.25 * math.pi, 0.25 * math.pi + 3 * math.pi / 8], abs=1e-9)


def test_pointwise_values():
    d1 = built("d1_monotone").family
    assert d1.evaluate(np.array([-0.5, 0.0])) == 0.5
    d2 = built("d2_case1").family
    # the chord joining the two boundary points where the datum equals tau
    x, y = d2.domain.param(np.array(preimage(d2.datum, d2.tau).params))
    for lam in (0.25, 0.5, 0.75):
        assert d2.evaluate((1 - lam) * x + lam * y) == pytest.approx(d2.tau, abs=1e-9)
    # approaching the boundary point at theta = pi/3, where the datum is 7/9
    err = [abs(d2.evaluate((1 - delta) * _unit(math.pi / 3)) - 7 / 9) for delta in (1e-2, 1e-3, 1e-5)]
    assert err[0] > err[1] > err[2] and err[2] < 1e-4


def _vertical_chord_family(n_t):
    c = Circle()

    def builder(ts):
        out = []
        for t in ts:
            y = math.sqrt(max(1 - t * t, 0.0))
            out.append(levels.chord_line(t, (t, -y), (t, y), levels.GAMMA_CHORD, keep=(2.0, 0.0)))
        return out

    return levels.LevelFamily(c, builder, -1.0, 1.0, n_t=n_t)


def test_coarea_of_vertical_chords_is_pi():
    assert levels.coarea_tv(_vertical_chord_family(2001)).value == pytest.approx(math.pi, abs=1e-4)


def test_constant_family_has_no_variation_and_no_flux():
    c = Circle()
    fam = levels.LevelFamily(c, lambda ts: [levels.LevelLine(t, [], levels.EMPTY) for t in ts], 1.0, 1.0)
    assert levels.coarea_tv(fam).value == 0.0
    assert len(fmd.du_to_flux(fam)) == 0


def test_monotone_case_coarea_matches_fine_oracle():
    b = built("d1_monotone")
    res = tv_oracle.minimize_tv_dirichlet(tv_oracle.make_grid(b.domain, b.datum, 256, b.upsilon))
    assert levels.coarea_tv(b.family).value == pytest.approx(res.energy, rel=0.01)


def test_probe_of_identical_families_is_zero():
    fam = built("d2_case1").family
    assert levels.uniqueness_probe(fam, fam).max_distance == 0.0


def test_probe_under_t_grid_refinement():
    coarse = built("d2_case1", 1001).family
    fine = built("d2_case1", 4001).family
    spacing = (coarse.M - coarse.m) / 1000
    assert levels.uniqueness_probe(coarse, fine).max_distance <= spacing


def test_rectangle_chord_lookup(square):
    R, f = square
    look = rect.chord_for_point(R, f, np.array([[0.0, 0.0], [0.3, 0.3]]))
    assert look.t == pytest.approx([0.5, 0.5], abs=1e-12)
    for i in range(2):
        c = look.chord(i)
        assert abs(c.p[0] - c.p[1]) < 1e-12 and abs(c.q[0] - c.q[1]) < 1e-12
    # corner limits: f(-1, 1) = 0 and f(1, -1) = 1
    for corner, value in (((-1.0, 1.0), 0.0), ((1.0, -1.0), 1.0)):
        z = np.array([[(1 - d) * corner[0], (1 - d) * corner[1]] for d in (1e-2, 1e-4, 1e-6)])
        err = np.abs(rect.evaluate_rect(R, f, z) - value)
        assert np.all(np.diff(err) < 0) and err[-1] < 1e-6


def test_modulus_bound_of_coincident_points(square):
    R, f = square
    z = np.array([[0.2, -0.4]])
    assert rect.modulus_bound(R, f, z, z) == pytest.approx(0.0, abs=0.0)


# --- dual flux ---------------------------------------------------------------------


def test_three_atom_flux_pairings(rng):
    fam = built("p1_piecewise").family
    q = fmd.du_to_flux(fam)
    assert fmd.pair_flux_gradient(q, lambda p: np.ones(np.shape(p)[:-1])) == 0.0
    g = fam.datum.tangential_derivative()
    for _ in range(5):
        phi = fmd.Polynomial.random(rng)
        assert fmd.pair_flux_gradient(q, phi) == pytest.approx(g.pair(phi), abs=1e-8)


def test_linear_rectangle_flux_against_xy():
    fam = built("rect_linear").family
    R, f = fam.domain, fam.datum
    phi = fmd.Polynomial(np.array([[0.0, 0.0], [0.0, 1.0]]))

    def integrand(s):
        return float(f(s)) * float(phi.grad(R.param(s)) @ R.tangent(s))

    edges = np.append(R.breakpoints, R.total_length)
    ref = -sum(integrate.quad(integrand, a, b, epsabs=1e-13)[0] for a, b in zip(edges[:-1], edges[1:]))
    assert fmd.pair_flux_gradient(fmd.du_to_flux(fam), phi) == pytest.approx(ref, abs=1e-10)


def _disc_grid(n):
    c = Circle()
    xs = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(xs, xs)
    return c, xs, xs, c.contains(np.stack([X, Y], axis=-1))


def test_constant_field_is_divergence_free():
    c, xs, ys, mask = _disc_grid(129)
    q = fmd.field_from_function(lambda P: np.broadcast_to([0.0, -1.0], P.shape), xs, ys, mask)
    assert fmd.divergence_residual(q, c) < 1e-8


def test_rasterized_tent_flux_residual_decreases():
    fam = built("d2_case1").family
    res = []
    for n in (64, 128, 256):
        c, xs, ys, mask = _disc_grid(n)
        X, Y = np.meshgrid(xs, ys)
        u = np.full(mask.shape, np.nan)
        u[mask] = fam.evaluate_many(np.stack([X[mask], Y[mask]], axis=-1))
        res.append(fmd.divergence_residual(fmd.grid_flux(u, xs, ys, mask), c))
    assert res[0] > res[1] > res[2]
    assert res[2] <= 10 * (xs[1] - xs[0])


def test_potential_of_constant_field():
    c, xs, ys, mask = _disc_grid(65)
    q = fmd.field_from_function(lambda P: np.broadcast_to([0.0, -1.0], P.shape), xs, ys, mask)
    x0 = np.array([0.2, -0.1])
    pot = fmd.reconstruct_potential(q, x0, c, n_loops=20)
    X, _ = np.meshgrid(xs, ys)
    assert np.max(np.abs(pot.u - (X - x0[0]))[mask]) < 1e-12


# --- discrete oracle ---------------------------------------------------------------


def test_rasterize_affine_is_exact(square):
    R, f = square
    g = tv_oracle.make_grid(R, f, 64)
    fld = tv_oracle.rasterize(lambda p: 0.5 + 0.25 * p[:, 0] - 0.25 * p[:, 1], g)
    P = g.points[g.interior]
    assert np.max(np.abs(fld.values[g.interior] - (0.5 + 0.25 * P[:, 0] - 0.25 * P[:, 1]))) == pytest.approx(0.0, abs=1e-15)


def test_rasterized_fat_region_is_a_plateau():
    b = built("d1_monotone")
    g = tv_oracle.make_grid(b.domain, b.datum, 96, b.upsilon)
    fld = tv_oracle.rasterize(b.family.evaluate_many, g)
    (fr,) = b.family.fat_regions
    inside = fr.region.contains(g.points[g.interior])
    assert inside.sum() > 100
    assert np.all(fld.values[g.interior][inside] == 0.5)


def test_rasterized_three_atom_solution_is_three_valued():
    b = built("p1_piecewise")
    g = tv_oracle.make_grid(b.domain, b.datum, 64)
    fld = tv_oracle.rasterize(b.family.evaluate_many, g)
    assert set(np.unique(fld.values[g.interior])) == {0.0, 1.0, 2.0}


def test_discrete_tv_of_exact_affine_field(square):
    R, f = square
    g = tv_oracle.make_grid(R, f, 64)
    X, Y = g.points[..., 0], g.points[..., 1]
    u = np.where(g.active, 0.5 + 0.25 * X - 0.25 * Y, np.nan)
    # every node of the closed square carries the same gradient |grad u| = sqrt(2)/4
    assert tv_oracle.discrete_tv(u, g) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert tv_oracle.discrete_tv(np.where(g.active, 1.0, np.nan), g) == 0.0


@pytest.mark.parametrize("sign", [1.0, -1.0], ids=["anti-diagonal", "diagonal"])
def test_discrete_tv_of_diagonal_step(square, sign):
    R, f = square
    g = tv_oracle.make_grid(R, f, 129)
    X, Y = g.points[..., 0], g.points[..., 1]
    u = np.where(g.active, (X + sign * Y > 0).astype(float), np.nan)
    ratio = tv_oracle.discrete_tv(u, g) / (2 * math.sqrt(2))
    assert 1 - 2 * g.spacing <= ratio <= math.sqrt(2) + 2 * g.spacing


def test_oracle_on_affine_rectangle_data(square):
    R, f = square
    g = tv_oracle.make_grid(R, f, 128)
    res = tv_oracle.minimize_tv_dirichlet(g)
    assert res.energy == pytest.approx(math.sqrt(2), rel=0.01)
    P = g.points[g.interior]
    exact = 0.5 + 0.25 * P[:, 0] - 0.25 * P[:, 1]
    assert np.max(np.abs(res.values[g.interior] - exact)) <= 2 * g.spacing * 1.0


def test_compare_identical_and_shifted(square):
    R, f = square
    g = tv_oracle.make_grid(R, f, 33)
    a = tv_oracle.rasterize(lambda p: p[:, 0] * p[:, 1], g)
    cmp = tv_oracle.compare(a, a, levels=[0.1])
    assert cmp.l1 == 0.0 and cmp.linf == 0.0 and cmp.energy_gap == 0.0 and cmp.hausdorff[0.1] == 0.0
    b = tv_oracle.ScalarField(g, np.where(g.interior, a.values + 0.125, a.values))
    assert tv_oracle.compare(a, b).linf == pytest.approx(0.125, abs=1e-15)


def test_tent_case_oracle_distance_decreases():
    b = built("d2_case1")
    l1 = []
    for n in (128, 256):
        g = tv_oracle.make_grid(b.domain, b.datum, n, b.upsilon)
        geo = tv_oracle.rasterize(b.family.evaluate_many, g)
        l1.append(tv_oracle.compare(geo, tv_oracle.minimize_tv_dirichlet(g)).l1)
    assert l1[1] < l1[0]


@pytest.mark.parametrize("name", bundled_names())
def test_oracle_energy_gap_shrinks_under_refinement(name, tmp_path):
    rep = run_scenario(load_scenario(name), out_dir=tmp_path, grids=[64, 128, 256])
    checks = [inv for inv in rep.invariants if inv.name.startswith("oracle_refinement")]
    assert checks
    failed = [f"{inv.name}: {inv.value:.3g}" for inv in checks if not inv.passed]
    assert not failed, failed
