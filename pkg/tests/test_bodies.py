"""Convex bodies: gauges, membership, sampling, radii."""

from __future__ import annotations

import math

import numpy as np
import pytest

import anisomag as am


def bodies_catalog():
    return [
        am.EuclideanBall(2),
        am.cube(2),
        am.Ellipsoid.from_semi_axes([2.0, 1.0]),
        am.SymmetricPolytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1]),
        am.regular_hexagon(),
        am.LqBall(2, 1.5),
        am.EuclideanBall(3),
        am.cube(3),
    ]


class TestGauge:
    def test_cube_max_norm(self):
        assert am.cube(2).gauge([3.0, 4.0]) == pytest.approx(4.0, abs=1e-14)

    def test_ball_euclidean(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 2))
        np.testing.assert_allclose(am.EuclideanBall(2).gauge(x),
                                   np.linalg.norm(x, axis=1), rtol=1e-14)

    def test_ellipsoid_boundary_point(self):
        e = am.Ellipsoid.from_semi_axes([2.0, 1.0])
        assert e.gauge([2.0, 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_polytope_matches_lq_cube(self):
        poly = am.SymmetricPolytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1])
        rng = np.random.default_rng(1)
        x = rng.standard_normal((200, 2)) * 3
        np.testing.assert_allclose(poly.gauge(x), am.cube(2).gauge(x), rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            am.EuclideanBall(2).gauge([1.0, 2.0, 3.0])


class TestContains:
    def test_origin(self):
        for body in bodies_catalog():
            assert body.contains(np.zeros(body.dim))

    def test_cube_boundary_inclusive(self):
        assert am.cube(2).contains([1.0, 1.0])
        assert not am.cube(2).contains([1.0001, 0.0])

    def test_agrees_with_gauge(self):
        rng = np.random.default_rng(7)
        for body in bodies_catalog():
            x = rng.standard_normal((10_000, body.dim)) * body.r_out
            np.testing.assert_array_equal(body.contains(x), body.gauge(x) <= 1.0 + 1e-12)


class TestBoundingRadii:
    @pytest.mark.parametrize(
        "body,expected",
        [
            (am.EuclideanBall(2), (1.0, 1.0)),
            (am.cube(2), (1.0, math.sqrt(2.0))),
            (am.Ellipsoid.from_semi_axes([2.0, 1.0]), (1.0, 2.0)),
            (am.SymmetricPolytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1]),
             (1.0, math.sqrt(2.0))),
        ],
    )
    def test_examples(self, body, expected):
        r_in, r_out = body.bounding_radii()
        assert r_in == pytest.approx(expected[0], rel=1e-12)
        assert r_out == pytest.approx(expected[1], rel=1e-12)

    def test_sandwich_bound(self):
        rng = np.random.default_rng(3)
        for body in bodies_catalog():
            x = rng.standard_normal((2000, body.dim)) * 2
            norms = np.linalg.norm(x, axis=1)
            g = body.gauge(x)
            assert np.all(g >= norms / body.r_out - 1e-12)
            assert np.all(g <= norms / body.r_in + 1e-12)


class TestNormProperties:
    def test_homogeneity_and_triangle(self):
        rng = np.random.default_rng(11)
        for body in bodies_catalog():
            x = rng.standard_normal((10_000, body.dim))
            y = rng.standard_normal((10_000, body.dim))
            t = rng.standard_normal(10_000)
            np.testing.assert_allclose(body.gauge(t[:, None] * x),
                                       np.abs(t) * body.gauge(x), rtol=1e-12, atol=1e-14)
            assert np.all(body.gauge(x + y) <= body.gauge(x) + body.gauge(y) + 1e-12)

    def test_origin_symmetry(self):
        rng = np.random.default_rng(12)
        for body in bodies_catalog():
            x = rng.standard_normal((500, body.dim))
            np.testing.assert_allclose(body.gauge(-x), body.gauge(x), rtol=1e-13)

    def test_zero_iff_origin(self):
        for body in bodies_catalog():
            assert body.gauge(np.zeros(body.dim)) == 0.0
            assert body.gauge(1e-8 * np.ones(body.dim)) > 0.0


class TestSampling:
    def test_ball_mean_centered(self):
        pts = am.EuclideanBall(2).sample_uniform(100_000, seed=5)
        # mean of each coordinate is 0; se = sqrt(E[x^2]/n), E[x1^2] = 1/4
        se = math.sqrt(0.25 / len(pts))
        assert np.all(np.abs(pts.mean(axis=0)) < 3 * se)

    def test_cube_second_moment(self):
        # E[x1^2] over [-1,1]^2 equals 1/3 (closed-form moment of the uniform law)
        pts = am.cube(2).sample_uniform(100_000, seed=6)
        m2 = (pts[:, 0] ** 2).mean()
        # var(x^2) = E x^4 - (E x^2)^2 = 1/5 - 1/9
        se = math.sqrt((1.0 / 5.0 - 1.0 / 9.0) / len(pts))
        assert abs(m2 - 1.0 / 3.0) < 3 * se

    def test_samples_inside(self):
        for body in bodies_catalog():
            pts = body.sample_uniform(20_000, seed=7)
            assert np.all(body.contains(pts))

    def test_deterministic(self):
        a = am.regular_hexagon().sample_uniform(100, seed=42)
        b = am.regular_hexagon().sample_uniform(100, seed=42)
        np.testing.assert_array_equal(a, b)

    def test_acceptance_rate(self):
        # acceptance ratio should be near vol(K) / vol(circumscribed ball)
        body = am.cube(2)
        n = 50_000
        rng_pts = body.sample_uniform(n, seed=8)
        assert len(rng_pts) == n  # completed without hitting the retry cap

    def test_count_validation(self):
        with pytest.raises(ValueError):
            am.EuclideanBall(2).sample_uniform(0, seed=1)


class TestPolytopeConstruction:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            am.SymmetricPolytope([[1, 0], [0, 1], [-1, 0]], [1, 1, 1])

    def test_rejects_nonpositive_offsets(self):
        with pytest.raises(ValueError):
            am.SymmetricPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, -1, 1, 1])

    def test_rejects_unbounded(self):
        with pytest.raises(ValueError):
            am.Polytope([[1, 0], [-1, 0]], [1, 1])  # a slab in 2-D

    def test_volumes(self):
        assert am.cube(2).volume() == pytest.approx(4.0)
        assert am.EuclideanBall(2).volume() == pytest.approx(math.pi)
        assert am.Ellipsoid.from_semi_axes([2.0, 1.0]).volume() == pytest.approx(2 * math.pi)
        # regular hexagon with inradius 1: area = 2*sqrt(3)
        assert am.regular_hexagon().volume() == pytest.approx(2 * math.sqrt(3.0), rel=1e-9)

    def test_ray_interval_against_membership(self):
        sq = am.unit_square()
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, size=(200, 2))
        d = rng.standard_normal((200, 2))
        t_lo, t_hi = sq.ray_interval(x, d)
        ts = np.linspace(-3, 3, 401)
        for i in range(200):
            pts = x[i] + ts[:, None] * d[i]
            inside = sq.contains(pts)
            if t_lo[i] > t_hi[i]:
                assert not inside.any()
            else:
                mid = 0.5 * (max(t_lo[i], -3) + min(t_hi[i], 3))
                if t_lo[i] <= mid <= t_hi[i]:
                    assert sq.contains(x[i] + mid * d[i])
                outside_mask = (ts < t_lo[i] - 1e-9) | (ts > t_hi[i] + 1e-9)
                assert not inside[outside_mask].any()

    def test_degenerate_region_measure_zero(self):
        flat = am.box_region([0.3, 0.0], [0.0, 0.5])
        assert flat.volume() == 0.0
