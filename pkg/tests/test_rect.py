import math

import numpy as np
import pytest

from leastgrad import levels, rect
from leastgrad.boundary_data import angular_sine, linear_datum, rect_power
from leastgrad.errors import GeometryError, ValidationError
from leastgrad.geometry import Rectangle


def _inside(R, n, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.random((n, 2)) * 2 - 1) * 0.999 * np.array([R.L, R.h])


def test_affine_data_give_the_affine_solution():
    R = Rectangle(1.0, 1.0)
    f = linear_datum(R.full_arc(), 0.5, 0.25, -0.25)
    z = _inside(R, 2000)
    w = rect.evaluate_rect(R, f, z)
    assert np.max(np.abs(w - (0.5 + 0.25 * z[:, 0] - 0.25 * z[:, 1]))) <= 1e-10


def test_level_line_is_a_chord_through_the_point():
    R = Rectangle(1.0, 0.5)
    f = rect_power(R)
    z = _inside(R, 50, seed=3)
    look = rect.chord_for_point(R, f, z)
    P = R.total_length
    for i in range(len(z)):
        c = look.chord(i)
        # z lies on the segment and the datum agrees at both ends
        assert levels.segment_distance(z[i : i + 1], c.p, c.q)[0] < 1e-9
        assert f(R.locate(c.p)) == pytest.approx(look.t[i], abs=1e-9)
        assert f(np.mod(R.locate(c.q), P)) == pytest.approx(look.t[i], abs=1e-9)


def test_modulus_bound_holds_for_close_pairs():
    R = Rectangle(1.0, 0.5)
    f = rect_power(R, 3.0)
    z1 = _inside(R, 2000, seed=5)
    z2 = np.clip(z1 + 1e-3 * np.random.default_rng(6).standard_normal(z1.shape), -0.999 * np.array([R.L, R.h]), 0.999 * np.array([R.L, R.h]))
    w1 = rect.evaluate_rect(R, f, z1)
    w2 = rect.evaluate_rect(R, f, z2)
    assert np.all(np.abs(w1 - w2) <= rect.modulus_bound(R, f, z1, z2) + 1e-12)


def test_family_matches_pointwise_lookup():
    R = Rectangle(1.0, 0.5)
    f = rect_power(R)
    fam = rect.solve_rectangle(R, f, n_t=401)
    z = _inside(R, 300, seed=7)
    step = float(np.max(np.diff(fam.t_grid)))
    assert np.max(np.abs(fam.evaluate_many(z) - rect.evaluate_rect(R, f, z))) <= step
    assert levels.nesting_violations(fam) == 0


def test_non_monotone_datum_is_rejected():
    R = Rectangle(1.0, 1.0)
    with pytest.raises(ValidationError) as exc:
        rect.solve_rectangle(R, angular_sine(R.full_arc()))
    assert exc.value.clause == "strict-monotone"


def test_lookup_needs_open_rectangle():
    R = Rectangle(1.0, 1.0)
    f = linear_datum(R.full_arc(), 0.0, 1.0, -1.0)
    with pytest.raises(GeometryError):
        rect.chord_for_point(R, f, np.array([[1.0, 0.0]]))


@pytest.fixture(scope="module")
def sol():
    return rect.fmd_load_solution(2.0, 1.0, t_half=0.25, b_half=0.5, l_B=1.0, n_t=401)


class TestFmdLoad:
    def test_center_value(self, sol):
        assert sol.evaluate(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.5, abs=1e-12)
        assert sol.family.evaluate(np.array([0.0, 0.0])) == pytest.approx(0.5, abs=1e-10)

    def test_closed_form_matches_chord_lookup_inside_quadrilateral(self, sol):
        z = _inside(sol.rect, 400, seed=2)
        u = sol.evaluate(z)
        mid = (u > 1e-6) & (u < sol.top_value - 1e-6)
        # the closed form solves the unperturbed problem; a tiny perturbation makes the lookup applicable
        ref = rect.evaluate_rect(sol.rect, sol.perturbed(1e-7), z[mid])
        assert np.max(np.abs(u[mid] - ref)) <= 1e-7 + 1e-12

    def test_load_is_self_equilibrated(self, sol):
        assert abs(sol.self_equilibration) < 1e-14

    def test_degenerate_quadrilateral_rejected(self):
        with pytest.raises(ValidationError):
            rect.fmd_load_solution(2.0, 1.0, t_half=0.0, b_half=0.5)

    def test_perturbation_is_bracketed(self, sol):
        z = _inside(sol.rect, 3000, seed=4)
        d = rect.evaluate_rect(sol.rect, sol.perturbed(1e-3), z) - sol.evaluate(z)
        assert d.min() >= -1e-12 and d.max() <= 1e-3 + 1e-12


def test_alpha_is_the_diagonal_angle():
    R = Rectangle(2.0, 1.0)
    assert math.tan(R.alpha) == pytest.approx(0.5)
