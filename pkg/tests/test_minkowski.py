import math

import numpy as np
import pytest

from hyperlab.config import Tolerances
from hyperlab.minkowski import (
    GeometryError,
    GeodesicSubspaceSpec,
    HPoint,
    IdealPoint,
    base_point,
    bilinear_form,
    busemann,
    distance,
    geodesic_point,
    lift,
    minkowski_metric,
    pairwise_distance,
    project_to_subspace,
    quadratic_form,
    ray_point,
)


def random_hpoint(rng, n_spatial=3, scale=1.5):
    return HPoint(lift(rng.normal(0.0, scale, size=n_spatial)))


def test_form_on_basis_vectors():
    e0 = np.array([1.0, 0.0, 0.0])
    e1 = np.array([0.0, 1.0, 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    assert bilinear_form(e0, e0) == -1.0
    assert bilinear_form(e1, e2) == 0.0
    assert bilinear_form(e1, e1) == 1.0


def test_form_direct_evaluation():
    p = np.array([math.cosh(1.0), math.sinh(1.0), 0.0])
    o = np.array([1.0, 0.0, 0.0])
    assert bilinear_form(p, o) == pytest.approx(-math.cosh(1.0), abs=1e-15)


def test_form_broadcasts():
    pts = lift(np.arange(6.0).reshape(2, 3))
    vals = bilinear_form(pts, pts)
    assert vals.shape == (2,)
    assert np.allclose(vals, -1.0)


def test_metric_signature():
    j = minkowski_metric(4)
    assert j[0, 0] == -1.0
    assert np.array_equal(np.diagonal(j), [-1.0, 1.0, 1.0, 1.0])


def test_hpoint_renormalizes_inside_window():
    x = np.array([math.cosh(0.7), math.sinh(0.7), 0.0]) * (1.0 + 1e-7)
    p = HPoint(x)
    assert quadratic_form(p.coords) == pytest.approx(-1.0, abs=1e-12)


def test_hpoint_rejects_outside_window():
    x = np.array([math.cosh(0.7), math.sinh(0.7), 0.0]) * 1.001
    with pytest.raises(GeometryError, match="renormalization window"):
        HPoint(x)
    with pytest.raises(GeometryError, match="upper sheet"):
        HPoint(np.array([-1.0, 0.0, 0.0]))


def test_distance_identity_and_boost():
    p = base_point(2)
    assert distance(p, p) == 0.0
    q = HPoint(np.array([math.cosh(2.0), math.sinh(2.0), 0.0]))
    assert distance(p, q) == pytest.approx(2.0, abs=1e-12)


def test_distance_matches_polyline_length(rng):
    p = random_hpoint(rng)
    q = random_hpoint(rng)
    d = distance(p, q)
    samples = [geodesic_point(p, q, s) for s in np.linspace(0.0, 1.0, 1001)]
    arc = sum(
        distance(samples[i], samples[i + 1]) for i in range(len(samples) - 1)
    )
    assert arc == pytest.approx(d, abs=1e-6)


def test_geodesic_endpoints_and_midpoint(rng):
    p = random_hpoint(rng)
    q = random_hpoint(rng)
    assert np.allclose(geodesic_point(p, q, 0.0).coords, p.coords, atol=1e-10)
    assert np.allclose(geodesic_point(p, q, 1.0).coords, q.coords, atol=1e-10)
    m = geodesic_point(p, q, 0.5)
    half = distance(p, q) / 2.0
    assert distance(p, m) == pytest.approx(half, abs=1e-9)
    assert distance(m, q) == pytest.approx(half, abs=1e-9)


def test_geodesic_stays_on_sheet(rng):
    p = random_hpoint(rng)
    q = random_hpoint(rng)
    for s in np.linspace(0.0, 1.0, 17):
        x = geodesic_point(p, q, s)
        assert abs(quadratic_form(x.coords) + 1.0) <= 1e-10


def test_geodesic_rejects_coincident_endpoints():
    p = base_point(2)
    with pytest.raises(GeometryError, match="coincident"):
        geodesic_point(p, p, 0.5)


def test_projection_closed_form():
    r = 1.5
    x = HPoint(np.array([math.cosh(r), 0.0, math.sinh(r)]))
    proj, d = project_to_subspace(x, GeodesicSubspaceSpec(zero_set=frozenset({2})))
    assert d == pytest.approx(r, abs=1e-12)
    assert np.allclose(proj.coords, [1.0, 0.0, 0.0], atol=1e-12)


def test_projection_fixes_subspace_points(rng):
    y = HPoint(lift(np.array([0.8, 0.0, -0.3])))
    proj, d = project_to_subspace(y, GeodesicSubspaceSpec(zero_set=frozenset({2})))
    assert d <= 1e-12
    assert distance(proj, y) <= 1e-9


def test_projection_is_nearest_point(rng):
    sub = GeodesicSubspaceSpec(zero_set=frozenset({2}))
    for _ in range(5):
        x = random_hpoint(rng)
        proj, d = project_to_subspace(x, sub)
        for _ in range(100):
            u = rng.normal(0.0, 2.0, size=3)
            u[1] = 0.0  # spatial index 2 of the lifted vector
            w = HPoint(lift(u))
            assert d <= distance(x, w) + 1e-12


def test_projection_idempotent(rng):
    sub = GeodesicSubspaceSpec(zero_set=frozenset({1, 3}))
    x = random_hpoint(rng, n_spatial=4)
    proj, _ = project_to_subspace(x, sub)
    again, d = project_to_subspace(proj, sub)
    assert d <= 1e-9
    assert np.allclose(proj.coords, again.coords, atol=1e-9)


def test_projection_rejects_out_of_range_index():
    sub = GeodesicSubspaceSpec(zero_set=frozenset({5}))
    with pytest.raises(GeometryError, match="out of range"):
        project_to_subspace(base_point(2), sub)


def test_subspace_spec_rejects_time_index():
    with pytest.raises(GeometryError, match="spatial"):
        GeodesicSubspaceSpec(zero_set=frozenset({0}))


def test_busemann_normalization_and_ray_rates():
    o = base_point(2)
    xi = IdealPoint(np.array([1.0, 1.0, 0.0]))
    assert busemann(xi, o, o) == 0.0
    toward = ray_point(o, xi, 3.0)
    away = ray_point(o, xi, -3.0)
    assert busemann(xi, o, toward) == pytest.approx(-3.0, abs=1e-9)
    assert busemann(xi, o, away) == pytest.approx(3.0, abs=1e-9)


def test_busemann_matches_geodesic_limit(rng):
    o = base_point(2)
    xi = IdealPoint(np.array([1.0, 0.6, 0.8]))
    x = random_hpoint(rng, n_spatial=2)
    far = ray_point(o, xi, 30.0)
    limit = distance(x, far) - 30.0
    assert busemann(xi, o, x) == pytest.approx(limit, abs=1e-9)


def test_triangle_inequality_sweep(rng):
    for _ in range(200):
        p, q, r = (random_hpoint(rng) for _ in range(3))
        assert distance(p, q) >= 0.0
        assert distance(p, q) == pytest.approx(distance(q, p), abs=1e-12)
        assert distance(p, r) <= distance(p, q) + distance(q, r) + 1e-9


def test_pairwise_distance_agrees_with_scalar(rng):
    pts = lift(rng.normal(0.0, 1.0, size=(6, 3)))
    d = pairwise_distance(pts)
    assert np.allclose(np.diagonal(d), 0.0)
    # arccosh amplifies 1-ulp Gram noise to ~sqrt(eps) near zero distance
    for i in range(6):
        for j in range(6):
            assert d[i, j] == pytest.approx(
                float(distance(HPoint(pts[i]), HPoint(pts[j]))), abs=1e-7
            )


def test_dimension_mismatch_raises(rng):
    p = base_point(2)
    q = base_point(3)
    with pytest.raises(ValueError):
        distance(p, q)


def test_tolerances_override():
    tol = Tolerances().with_overrides(point=1e-8)
    assert tol.point == 1e-8
    with pytest.raises(TypeError):
        Tolerances().with_overrides(nonsense=1.0)
