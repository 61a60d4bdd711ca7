import math

import numpy as np
import pytest

from conftest import built
from leastgrad import levels, swz
from leastgrad.boundary_data import angular_affine, angular_tent, from_samples, piecewise_constant
from leastgrad.errors import ValidationError
from leastgrad.geometry import BoundaryArc, Circle


def _interior_points(domain, n, seed=0, margin=1e-3):
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box()
    P = lo + (hi - lo) * rng.random((4 * n, 2))
    return P[domain.contains(P, -margin)][:n]


# --- case 2: monotone data -------------------------------------------------------


def test_case2_symmetric_disc_has_fat_level_one_half():
    fam = built("d1_monotone").family
    assert fam.classification.D == pytest.approx([math.pi], abs=1e-12)
    (fr,) = fam.fat_regions
    assert fr.value == 0.5
    # triangle (-1, 0), a, b plus the circular segment cut off by the chord ab
    assert fr.region.area == pytest.approx(math.sqrt(2) / 2 + math.pi / 4, rel=1e-12)


def test_case2_lines_end_on_free_arc():
    b = built("d1_monotone")
    up = b.upsilon
    for ln in b.family.lines:
        if ln.kind != levels.SINGLE_TO_UPSILON:
            continue
        u = ln.upsilon_params[0]
        assert up.contains(u, tol=1e-9)


def test_case2_rejects_non_monotone_data():
    c = Circle()
    gamma = BoundaryArc(c, 0.25 * math.pi, 1.5 * math.pi)
    with pytest.raises(ValidationError) as exc:
        swz.solve_case2(c, gamma, angular_tent(gamma), n_t=33)
    assert exc.value.clause == "monotone"


def test_full_boundary_is_not_a_partial_problem():
    c = Circle()
    arc = c.full_arc()
    with pytest.raises(ValidationError) as exc:
        swz.solve_case2(c, arc, angular_affine(arc), n_t=33)
    assert exc.value.clause == "gamma"


# --- case 1: tent data -----------------------------------------------------------


def test_case1_critical_level():
    fam = built("d2_case1").family
    assert abs(fam.meta["h_tau"]) <= 1e-10
    assert fam.tau == pytest.approx(0.43146072930339, abs=1e-12)
    h = fam.meta["h"]
    assert h(np.array([fam.tau - 1e-3]))[0] < 0 < h(np.array([fam.tau + 1e-3]))[0]
    below = [ln for ln in fam.lines if fam.m < ln.t < fam.tau]
    above = [ln for ln in fam.lines if fam.tau < ln.t < fam.M]
    assert below and all(ln.kind == levels.UPSILON_PAIR for ln in below)
    assert above and all(ln.kind == levels.GAMMA_CHORD for ln in above)


def test_case1_fat_region_takes_critical_value():
    fam = built("d2_case1").family
    (fr,) = fam.fat_regions
    assert fr.value == fam.tau
    assert fr.region.area > 0


def test_case1_requires_minimum_at_both_ends():
    c = Circle()
    gamma = BoundaryArc(c, -0.25 * math.pi, 1.5 * math.pi)
    with pytest.raises(ValidationError) as exc:
        swz.solve_case1(c, gamma, from_samples(gamma, [0.0, 1.0, 0.3]), n_t=33)
    assert exc.value.clause == "endpoint-minimum"


# --- case 3: sine data -----------------------------------------------------------


def test_case3_regions_have_closed_form_areas():
    fam = built("c3_case3").family
    assert fam.meta["condition_A_residual"] <= 1e-8
    (fr,) = fam.fat_regions
    assert fr.value == 0.0
    assert fr.region.area == pytest.approx(0.5 + math.pi / 6, rel=1e-10)
    assert fam.meta["triangle_area"] == pytest.approx(0.5 + math.sqrt(3) / 4, rel=1e-10)


def test_case3_condition_fails_off_symmetry():
    c = Circle()
    gamma = BoundaryArc(c, math.pi / 6, 5 * math.pi / 3)
    # the rising and falling stretches have unequal lengths
    f = from_samples(gamma, [0.0, 1.0, 0.5, -1.0, 0.0])
    with pytest.raises(ValidationError) as exc:
        swz.solve_case3(c, gamma, f, n_t=33)
    assert exc.value.clause == "condition-A"


# --- piecewise constant data -------------------------------------------------------


def test_piecewise_constant_level_boundaries_are_the_two_chords():
    fam = built("p1_piecewise").family
    x0, x1, x2 = fam.meta["points"]
    for ln in fam.lines:
        if not ln.segments:
            continue
        (c,) = ln.segments
        want = (x0, x1) if ln.t <= 1.0 else (x1, x2)
        ends = sorted([tuple(np.round(c.p, 12)), tuple(np.round(c.q, 12))])
        assert ends == sorted([tuple(np.round(want[0], 12)), tuple(np.round(want[1], 12))])
    areas = sorted(fr.region.area for fr in fam.fat_regions)
    assert areas == pytest.approx([math.pi / 4 - 0.5, math.pi / 4 - 0.5, math.pi / 2 + 1])


def test_piecewise_constant_needs_ordered_values():
    c = Circle()
    f = piecewise_constant(c.full_arc(), [0.0, 0.5 * math.pi, math.pi], [0.0, 1.0, 2.0])
    with pytest.raises(ValidationError) as exc:
        swz.solve_piecewise_constant(c, f, n_t=33)
    assert exc.value.clause == "alpha"


def test_single_arc_rejects_multiple_superlevel_arcs():
    c = Circle()
    from leastgrad.boundary_data import segment_callable

    f = segment_callable(c.full_arc(), lambda s: np.cos(2 * s))
    with pytest.raises(ValidationError) as exc:
        swz.solve_single_arc(c, f, n_t=33)
    assert exc.value.clause == "single-arc"


# --- evaluation ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["d1_monotone", "d2_case1", "c3_case3", "e1_superellipse"])
def test_vectorized_evaluation_matches_bisection(name):
    b = built(name)
    fam = b.family
    pts = _interior_points(b.domain, 40)
    fast = fam.evaluate_many(pts)
    slow = np.array([fam.evaluate(p) for p in pts])
    # both are exact at grid levels; between them the fast path interpolates
    step = float(np.max(np.diff(fam.t_grid)))
    assert np.max(np.abs(fast - slow)) <= step


def test_evaluate_outside_domain_raises():
    from leastgrad.errors import GeometryError

    fam = built("d1_monotone").family
    with pytest.raises(GeometryError):
        fam.evaluate(np.array([2.0, 0.0]))


def test_boundary_trace_is_the_datum_on_gamma():
    b = built("d1_monotone")
    s = b.arc.sample(41)[1:-1]
    inner = b.domain.param(s) * (1 - 1e-9)
    vals = b.family.evaluate_many(inner)
    assert np.max(np.abs(vals - b.datum(s))) < 1e-6
