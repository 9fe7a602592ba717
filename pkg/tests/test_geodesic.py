import numpy as np
import pytest

from polydual.errors import InvalidConeMetric
from polydual.geodesic import closed_geodesic_search, trace_geodesic
from polydual.surface import (
    HYPERBOLIC,
    SPHERICAL,
    CombSurface,
    ConeMetric,
    octahedron_sphere,
    scale,
)


def k4_metric(length):
    surf = CombSurface(4, [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])
    return ConeMetric(surf, SPHERICAL, np.full(surf.n_edges, length))


CENTER = (1 / 3, 1 / 3, 1 / 3)


class TestTrace:
    def test_round_sphere_closes_after_full_circle(self):
        m = octahedron_sphere()
        tr = trace_geodesic(m, 0, CENTER, 0.83, 2 * np.pi + 1e-9)
        assert tr.status == "max_length"
        assert tr.end_triangle == 0
        assert np.allclose(tr.end_bary, CENTER, atol=1e-8)
        assert tr.length == pytest.approx(2 * np.pi, abs=1e-8)

    def test_single_crossing_is_collinear(self):
        m = octahedron_sphere()
        tr = trace_geodesic(m, 0, CENTER, 0.83, 1.4)
        assert len(tr.crossings) >= 1
        for q in tr.developed_points:
            assert abs(q @ tr.circle_normal) < 1e-9

    def test_developed_image_collinear_long(self):
        m = scale(octahedron_sphere(), -0.2)
        tr = trace_geodesic(m, 2, (0.2, 0.3, 0.5), 1.1, 5.0)
        for q in tr.developed_points:
            assert abs(q @ tr.circle_normal) < 1e-9

    def test_aimed_at_cone_point(self):
        # shrunken octahedron has genuine cone points at the six vertices;
        # aim straight at corner 0 of the start triangle (direction angle 0)
        m = scale(octahedron_sphere(), -0.3)
        tr = trace_geodesic(m, 0, CENTER, 0.0, 10.0)
        assert tr.status == "cone_point"
        assert tr.cone_vertex == m.surface.triangles[0][0]

    def test_hyperbolic_trace_collinear(self):
        surf = CombSurface(4, [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])
        m = ConeMetric(surf, HYPERBOLIC, np.full(6, 1.2))
        tr = trace_geodesic(m, 0, CENTER, 0.7, 3.0)
        assert len(tr.crossings) >= 2
        g = np.diag([-1.0, 1.0, 1.0])
        for q in tr.developed_points:
            assert abs(q @ g @ tr.circle_normal) < 1e-9

    def test_rejects_start_on_edge(self):
        m = octahedron_sphere()
        with pytest.raises(ValueError):
            trace_geodesic(m, 0, (0.5, 0.5, 0.0), 0.1, 1.0)


class TestSearch:
    def test_round_sphere_finds_two_pi(self):
        rep = closed_geodesic_search(octahedron_sphere(), depth=8)
        assert rep.min_length == pytest.approx(2 * np.pi, abs=1e-6)
        assert rep.found_within_cap

    def test_shrunken_sphere_short_geodesic(self):
        m = scale(octahedron_sphere(), -0.3)
        rep = closed_geodesic_search(m, depth=8)
        assert rep.min_length is not None
        assert rep.min_length < 2 * np.pi
        # closed form: six midlines of the equilateral triangles
        s = m.lengths[0]
        ang = np.arccos(np.cos(s) / (1 + np.cos(s)))
        mid = np.arccos(np.cos(s / 2) ** 2 + np.sin(s / 2) ** 2 * np.cos(ang))
        assert rep.min_length == pytest.approx(6 * mid, abs=1e-9)

    def test_concave_metric_nothing_short(self):
        rep = closed_geodesic_search(k4_metric(2.0), depth=8)
        assert not rep.found_within_cap
        if rep.min_length is not None:
            assert rep.min_length > 2 * np.pi

    def test_depth_exhaustion_reported(self):
        rep = closed_geodesic_search(k4_metric(2.0), depth=2)
        assert rep.exhausted
        assert rep.min_length is None or rep.min_length > 2 * np.pi

    def test_rejects_hyperbolic(self):
        surf = CombSurface(4, [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])
        m = ConeMetric(surf, HYPERBOLIC, np.full(6, 1.2))
        with pytest.raises(InvalidConeMetric):
            closed_geodesic_search(m)

    def test_search_invariant_under_flip(self):
        from polydual.surface import flip_edge

        m = scale(octahedron_sphere(), -0.1)
        rep = closed_geodesic_search(m, depth=6)
        flipped, _ = flip_edge(m, 0)
        rep2 = closed_geodesic_search(flipped, depth=6)
        assert rep.min_length == pytest.approx(rep2.min_length, abs=1e-8)
