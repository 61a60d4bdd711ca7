import math
import warnings

import numpy as np
import pytest

from conftest import built
from leastgrad import fmd, levels
from leastgrad.errors import GeometryError
from leastgrad.geometry import Circle, Rectangle


def _grid(domain, n):
    lo, hi = domain.bounding_box()
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys)
    return xs, ys, domain.contains(np.stack([X, Y], axis=-1))


def test_polynomial_gradient_matches_finite_differences(rng):
    phi = fmd.Polynomial.random(rng)
    pts = rng.uniform(-1, 1, (20, 2))
    h = 1e-6
    fd = np.stack(
        [(phi(pts + [h, 0]) - phi(pts - [h, 0])) / (2 * h), (phi(pts + [0, h]) - phi(pts - [0, h])) / (2 * h)], axis=-1
    )
    assert np.allclose(phi.grad(pts), fd, atol=1e-6)


def test_cutoff_vanishes_off_gamma(rng):
    b = built("d1_monotone")
    phi = fmd.Polynomial.random(rng, cutoff=fmd.vanishing_cutoff(b.arc))
    up = b.upsilon
    assert np.all(phi(up.points(200)) == 0.0)
    assert np.any(phi(b.arc.points(200)) != 0.0)


@pytest.mark.parametrize("name", ["rect_linear", "d1_monotone", "p1_piecewise"])
def test_flux_mass_equals_coarea(name):
    fam = built(name).family
    q = fmd.du_to_flux(fam)
    assert q.mass == pytest.approx(levels.coarea_tv(fam).value, rel=1e-13)


def test_flux_of_affine_solution_is_rotated_gradient():
    fam = built("rect_linear").family
    q = fmd.du_to_flux(fam)
    # Du = (1/4, -1/4), so q = R(-pi/2) Du = (-1/4, -1/4) / |.| along every chord
    d = q.direction
    assert np.allclose(d, np.array([-1.0, -1.0]) / math.sqrt(2), atol=1e-12)


def test_constant_test_function_pairs_to_zero():
    q = fmd.du_to_flux(built("c3_case3").family)
    assert fmd.pair_flux_gradient(q, lambda p: np.ones(np.shape(p)[:-1])) == 0.0


@pytest.mark.parametrize("name", ["rect_linear", "p1_piecewise", "d1_monotone"])
def test_trace_identity(name, rng):
    fam = built(name).family
    q = fmd.du_to_flux(fam)
    ext = fmd.extended_datum(fam)
    for _ in range(5):
        phi = fmd.Polynomial.random(rng)
        r = fmd.trace_identity_residual(fam, phi, q, ext)
        assert r <= 1e-6 * (1 + phi.lipschitz(fam.domain))


def test_extended_datum_of_symmetric_monotone_data_is_constant_on_free_arc():
    fam = built("d1_monotone").family
    ext = fmd.extended_datum(fam)
    assert ext.is_closed_loop
    free = [p for p in ext.pieces if p.s0 >= fam.gamma.s_end - 1e-12]
    assert len(free) == 1 and free[0].v0 == 0.5


def test_flux_requires_a_family():
    with pytest.raises(GeometryError):
        fmd.du_to_flux(None)


def test_grid_flux_roundtrip_on_affine_field():
    R = Rectangle(1.0, 1.0)
    xs, ys, mask = _grid(R, 65)
    X, Y = np.meshgrid(xs, ys)
    u = 0.5 + 0.25 * X - 0.25 * Y
    p = fmd.grid_flux(u, xs, ys, mask)
    assert np.allclose(p.qx, -0.25) and np.allclose(p.qy, -0.25)
    pot = fmd.reconstruct_potential(p, [0.0, 0.0], R)
    assert np.nanmax(np.abs(pot.u + 0.5 - u)[mask]) < 1e-12
    assert pot.loop_max < 1e-12 and pot.warnings == []


def test_rotational_field_is_flagged():
    c = Circle()
    xs, ys, mask = _grid(c, 65)
    # for q = (x, y) the form q1 dy - q2 dx integrates to twice the enclosed area
    p = fmd.field_from_function(lambda P: P, xs, ys, mask)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        pot = fmd.reconstruct_potential(p, [0.0, 0.0], c, n_loops=20)
    assert pot.loop_max > 10 * p.spacing
    assert pot.warnings and any(issubclass(x.category, RuntimeWarning) for x in w)


def test_divergence_residual_separates_free_and_source_fields():
    c = Circle()
    xs, ys, mask = _grid(c, 97)
    free = fmd.field_from_function(lambda P: np.stack([-P[..., 1], P[..., 0]], axis=-1), xs, ys, mask)
    source = fmd.field_from_function(lambda P: P, xs, ys, mask)
    r_free = fmd.divergence_residual(free, c)
    r_source = fmd.divergence_residual(source, c)
    assert r_free < 1e-3 * r_source


def test_grid_field_csv(tmp_path):
    R = Rectangle(1.0, 0.5)
    xs, ys, mask = _grid(R, 9)
    p = fmd.field_from_function(lambda P: P, xs, ys, mask)
    path = tmp_path / "flux.csv"
    p.to_csv(path)
    rows = np.loadtxt(path, delimiter=",", skiprows=2)
    assert rows.shape == (81, 5)
