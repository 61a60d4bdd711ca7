import math

import numpy as np
import pytest

from leastgrad.boundary_data import (
    CONSTANT,
    angular_affine,
    angular_sine,
    angular_tent,
    fmd_load_datum,
    from_samples,
    linear_datum,
    make_datum,
    pair,
    piecewise_constant,
    preimage,
    rect_power,
    segment_callable,
    tangential_derivative,
    validate_monotone_pair,
)
from leastgrad.errors import ValidationError
from leastgrad.geometry import BoundaryArc, Circle, Rectangle


@pytest.fixture
def disc():
    return Circle()


def test_angular_affine_values_and_preimage(disc):
    arc = BoundaryArc(disc, 0.25 * math.pi, 1.5 * math.pi)
    f = angular_affine(arc)
    assert f.m == 0.0 and f.M == pytest.approx(1.0)
    pre = preimage(f, 0.5)
    assert len(pre.params) == 1
    assert pre.params[0] == pytest.approx(math.pi)
    assert preimage(f, 1.5).params == []


def test_tent_preimage_has_two_points(disc):
    arc = BoundaryArc(disc, -0.25 * math.pi, 1.5 * math.pi)
    f = angular_tent(arc, peak=0.5, height=1.0)
    pre = f.preimage(0.5)
    assert len(pre.params) == 2
    assert np.allclose(f(np.array(pre.params)), 0.5)
    top = f.preimage(1.0)
    assert len(top.params) == 1


def test_superlevel_arcs_of_sine(disc):
    arc = BoundaryArc(disc, 0.0, 2 * math.pi)
    f = angular_sine(arc)
    arcs = f.superlevel_arcs(0.5)
    assert len(arcs) == 1
    s0, s1 = arcs[0]
    assert s0 == pytest.approx(math.pi / 6) and s1 == pytest.approx(5 * math.pi / 6)


def test_linear_datum_on_rectangle_is_exact():
    r = Rectangle(1.0, 1.0)
    f = linear_datum(r.full_arc(), 0.5, 0.25, -0.25)
    s = np.linspace(0, r.total_length, 1001)
    P = r.param(s)
    assert np.max(np.abs(f(s) - (0.5 + 0.25 * P[:, 0] - 0.25 * P[:, 1]))) < 1e-14


def test_tangential_derivative_of_continuous_loop_has_zero_mass():
    r = Rectangle(1.0, 0.5)
    g = tangential_derivative(rect_power(r))
    assert g.atoms == []
    assert abs(g.total_mass) < 1e-14


def test_jumps_become_atoms(disc):
    f = piecewise_constant(disc.full_arc(), [0.0, 0.5 * math.pi, math.pi], [0.0, 2.0, 1.0])
    g = f.tangential_derivative()
    weights = sorted(w for _, w in g.atoms)
    assert weights == pytest.approx([-1.0, -1.0, 2.0])
    assert g.total_mass == pytest.approx(0.0)


def test_pair_with_linear_test_function_matches_integration_by_parts(disc):
    # for phi = x, pair(g, phi) = -integral of f d(phi)/ds
    arc = disc.full_arc()
    f = angular_sine(arc)
    g = f.tangential_derivative()
    val = pair(g, lambda p: np.asarray(p)[..., 0])
    s = np.linspace(0, 2 * math.pi, 200001)
    ref = -np.trapezoid(f(s) * (-np.sin(s)), s)
    assert val == pytest.approx(ref, abs=1e-8)


def test_from_samples_pieces_and_knots(disc):
    arc = BoundaryArc(disc, 0.0, math.pi)
    f = from_samples(arc, [0.0, 1.0, 1.0, 0.5])
    kinds = [p.kind for p in f.pieces]
    assert kinds == ["increasing", CONSTANT, "decreasing"]
    assert f.pieces[0].knots is not None
    with pytest.raises(ValidationError):
        from_samples(arc, [1.0])


def test_segment_callable_finds_extrema(disc):
    arc = disc.full_arc()
    f = segment_callable(arc, lambda s: np.cos(2 * s))
    turning = sorted(p.s0 for p in f.pieces)
    assert np.allclose(turning, [0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=1e-7)


def test_validate_monotone_pair_accepts_and_rejects():
    r = Rectangle(1.0, 0.5)
    chk = validate_monotone_pair(rect_power(r), r)
    assert chk.ok and chk.direction1 == -1 and chk.direction2 == 1
    bad = angular_sine(r.full_arc())
    with pytest.raises(ValidationError) as exc:
        validate_monotone_pair(bad, r)
    assert exc.value.clause == "strict-monotone"
    assert not validate_monotone_pair(bad, r, raise_on_fail=False).ok


def test_fmd_load_datum_shape():
    r = Rectangle(2.0, 1.0)
    f = fmd_load_datum(r, 0.5, 0.25, 1.0)
    assert f.m == 0.0 and f.M == pytest.approx(1.0)
    assert f.l_T == pytest.approx(2.0)
    assert f.at_point(np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert f.at_point(np.array([-2.0, 0.0])) == pytest.approx(0.0)
    assert f.at_point(np.array([0.0, -1.0])) == pytest.approx(0.5)
    fe = fmd_load_datum(r, 0.5, 0.25, 1.0, eps=1e-3)
    s = np.linspace(0, r.total_length, 5001)
    d = fe(s) - f(s)
    assert d.min() >= -1e-15 and d.max() <= 1e-3 + 1e-15
    assert validate_monotone_pair(fe, r).ok
    with pytest.raises(ValidationError):
        fmd_load_datum(r, 3.0, 0.25, 1.0)


def test_piecewise_constant_rejects_bad_input(disc):
    with pytest.raises(ValidationError):
        piecewise_constant(disc.full_arc(), [0.0, 1.0], [1.0])
    with pytest.raises(ValidationError):
        piecewise_constant(BoundaryArc(disc, 0.0, 3.0), [0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValidationError):
        piecewise_constant(disc.full_arc(), [0.0, 0.1, 3.0], [0.0, 1.0, 2.0], ramp=0.5)


def test_ramped_piecewise_constant_is_continuous(disc):
    f = piecewise_constant(disc.full_arc(), [0.0, 0.5 * math.pi, math.pi], [0.0, 2.0, 1.0], ramp=1e-2)
    assert f.continuous
    assert f.m == 0.0 and f.M == 2.0


@pytest.mark.parametrize(
    "spec, clause",
    [
        ({"kind": "table"}, "datum.kind"),
        ({"kind": "analytic"}, "datum.expr_id"),
        ({"kind": "analytic", "expr_id": "nope"}, "datum.expr_id"),
        ({"kind": "analytic", "expr_id": "rect-power"}, "datum.expr_id"),
        ({"kind": "samples"}, "datum.values"),
    ],
)
def test_make_datum_errors_name_the_field(disc, spec, clause):
    with pytest.raises(ValidationError) as exc:
        make_datum(spec, disc.full_arc())
    assert exc.value.clause == clause


def test_modulus_is_linear_with_piece_slope(disc):
    arc = BoundaryArc(disc, 0.0, math.pi)
    f = angular_affine(arc, scale=2.0)
    assert f.modulus(0.5) == pytest.approx(2.0 / math.pi * 0.5, rel=1e-6)
