import numpy as np
import pytest

from polydual.errors import HomotopyBlocked, InvalidConeMetric, SolverError
from polydual.minkowski import Isometry, J
from polydual.polyhedra import (
    dualize,
    hexahedron,
    regular_tetrahedron,
    triangular_bipyramid,
)
from polydual.solver import (
    SolverState,
    continuation,
    jacobian,
    match_dihedral_angles,
    newton_solve,
    perturbed_polyhedron,
    recovered_polyhedron,
    rigidity_report,
    validate_target,
)
from polydual.surface import ConeMetric, SPHERICAL, scale


def state_of(P, out=None):
    out = out or dualize(P)
    return SolverState(np.stack([p.v for p in P.planes]),
                       out.metric.surface, out.metric.lengths)


@pytest.fixture(scope="module")
def tetra():
    P = regular_tetrahedron(1.15)
    return P, dualize(P)


@pytest.fixture(scope="module")
def hexa():
    P = hexahedron(0.5)
    return P, dualize(P)


class TestState:
    def test_residual_zero_at_truth(self, tetra):
        P, out = tetra
        st = state_of(P, out)
        assert np.max(np.abs(st.residual())) < 1e-10

    def test_scaled_target_first_order(self, tetra):
        P, out = tetra
        st = SolverState(np.stack([p.v for p in P.planes]),
                         out.metric.surface,
                         scale(out.metric, 1e-3).lengths)
        r = st.residual()
        # log-scaling by 1e-3 shifts each length by about 1e-3 * length
        expect = out.metric.lengths * (1 - np.exp(1e-3))
        assert np.allclose(r, expect, rtol=1e-6)

    def test_tangent_perturbation_first_order(self, tetra):
        P, out = tetra
        st = state_of(P, out)
        frames = st.frames()
        gauge = st.gauge()
        rng = np.random.RandomState(4)
        v = rng.randn(gauge.n_free())
        v /= np.linalg.norm(v)
        moved = st.moved(1e-4 * v, gauge, frames)
        assert np.linalg.norm(moved.residual()) == pytest.approx(0, abs=1e-3)
        assert np.linalg.norm(moved.residual()) > 1e-6

    def test_gauge_dimension(self, tetra, hexa):
        for P, out in (tetra, hexa):
            st = state_of(P, out)
            gauge = st.gauge()
            n = st.surface.n_vertices
            assert gauge.n_free() == 3 * n - 6
            assert st.surface.n_edges == 3 * n - 6

    def test_rejects_duplicate_edge_pairs(self):
        # the double of a rhombus has two edges with identical endpoints
        from polydual.surface import CombSurface

        tris = [(0, 1, 2), (1, 0, 3), (0, 2, 1), (1, 3, 0)]
        gluing = {0: 3, 3: 0, 1: 7, 7: 1, 2: 6, 6: 2,
                  4: 10, 10: 4, 5: 9, 9: 5, 8: 11, 11: 8}
        surf = CombSurface(4, tris, gluing)
        pts = np.array([[0, 1.0, 0, 0], [0, 0, 1.0, 0],
                        [0, 0, 0, 1.0], [0.2, np.sqrt(1.04), 0, 0]])
        pts /= np.sqrt(np.einsum("ij,jk,ik->i", pts, J, pts))[:, None]
        with pytest.raises(SolverError):
            SolverState(pts, surf, np.full(surf.n_edges, 1.0))


class TestJacobian:
    def test_fd_consistency(self, tetra):
        P, out = tetra
        st = state_of(P, out)
        Jm = jacobian(st)
        frames, gauge = st.frames(), st.gauge()
        rng = np.random.RandomState(0)
        for _ in range(3):
            v = rng.randn(Jm.shape[1])
            v /= np.linalg.norm(v)
            h = 1e-4
            dd = (st.moved(h * v, gauge, frames).current_lengths()
                  - st.moved(-h * v, gauge, frames).current_lengths()) / (2 * h)
            rel = np.linalg.norm(dd - Jm @ v) / np.linalg.norm(Jm @ v)
            assert rel < 1e-5

    def test_square_after_gauge(self, tetra):
        P, out = tetra
        Jm = jacobian(state_of(P, out))
        assert Jm.shape == (6, 6)

    def test_rigidity_positive(self, tetra, hexa):
        for P, out in (tetra, hexa):
            rig = rigidity_report(state_of(P, out))
            assert rig.smallest_singular_value > 1e-8
            assert np.isfinite(rig.condition_number)

    def test_rigidity_with_fan_diagonals(self):
        # equatorial bipyramid vertices have four faces, so the dual chart
        # carries fan diagonals; rigidity must survive them
        P = triangular_bipyramid()
        rig = rigidity_report(state_of(P))
        assert rig.smallest_singular_value > 1e-8

    def test_gauge_invariance_under_isometry(self, hexa):
        P, out = hexa
        st = state_of(P, out)
        g = Isometry.boost(2, 0.7) @ Isometry.rotation(1, 3, 0.9)
        moved = np.array([g.m @ x for x in st.positions])
        moved /= np.sqrt(np.einsum("ij,jk,ik->i", moved, J, moved))[:, None]
        st2 = SolverState(moved, st.surface, st.target)
        assert np.max(np.abs(st2.residual() - st.residual())) < 1e-12
        r1, r2 = rigidity_report(st), rigidity_report(st2)
        assert abs(r1.smallest_singular_value
                   - r2.smallest_singular_value) < 1e-9


class TestNewton:
    def test_zero_iterations_at_truth(self, tetra):
        P, out = tetra
        st = state_of(P, out)
        sol = newton_solve(st)
        assert np.array_equal(sol.positions, st.positions)

    def test_converges_from_small_perturbations(self, tetra):
        P, out = tetra
        rng = np.random.RandomState(7)
        for _ in range(3):
            Q = perturbed_polyhedron(P, rng, 1e-3)
            st = SolverState(np.stack([p.v for p in Q.planes]),
                             out.metric.surface, out.metric.lengths)
            sol = newton_solve(st)
            assert np.max(np.abs(sol.residual())) < 1e-10

    def test_far_start_loses_feasibility(self, tetra):
        from polydual.errors import FeasibilityLost

        P, out = tetra
        # four dual points on one spacelike circle: the planes all pass
        # through a common axis, so the hull degenerates
        pts = np.array([[0, np.cos(a), np.sin(a), 0.0]
                        for a in (0.0, 1.3, 2.9, 4.4)])
        st = SolverState(pts, out.metric.surface, out.metric.lengths)
        with pytest.raises(FeasibilityLost):
            newton_solve(st)


class TestContinuation:
    def test_round_trip_identity(self, tetra):
        P, out = tetra
        rng = np.random.RandomState(3)
        start = perturbed_polyhedron(P, rng, 1e-2)
        final, rep = continuation(start, out.metric, steps=8)
        assert match_dihedral_angles(P, recovered_polyhedron(final))
        assert all(s.smallest_singular_value > 1e-8 for s in rep.steps)

    def test_hexahedron_round_trip(self, hexa):
        P, out = hexa
        start = perturbed_polyhedron(P, np.random.RandomState(5), 5e-3)
        final, _ = continuation(start, out.metric, steps=8)
        assert match_dihedral_angles(P, recovered_polyhedron(final))

    def test_scaled_target(self, tetra):
        P, out = tetra
        target = scale(out.metric, 0.05)
        final, _ = continuation(P, target, steps=10)
        assert np.max(np.abs(final.current_lengths() - target.lengths)) < 1e-9
        # the recovered polyhedron genuinely changed
        assert not match_dihedral_angles(P, recovered_polyhedron(final))

    def test_rejects_nonconcave_target(self, tetra):
        P, _ = tetra
        surf = dualize(P).metric.surface
        small = ConeMetric(surf, SPHERICAL, np.full(surf.n_edges, 0.4))
        with pytest.raises(InvalidConeMetric):
            continuation(P, small, steps=4)

    def test_rejects_triangle_violation_at_construction(self, tetra):
        P, out = tetra
        surf = out.metric.surface
        bad = out.metric.lengths.copy()
        # shrink two sides of triangle 0 far below the third
        bad[surf.edge_of(0, 0)] = 0.1
        bad[surf.edge_of(0, 1)] = 0.1
        with pytest.raises(InvalidConeMetric):
            ConeMetric(surf, SPHERICAL, bad)

    def test_blocked_on_wrong_chart(self, tetra, hexa):
        # a hexahedron target cannot be reached from a tetrahedron start
        P_t, _ = tetra
        _, out_h = hexa
        with pytest.raises((HomotopyBlocked, SolverError)):
            continuation(P_t, out_h.metric, steps=4)

    def test_flip_event_across_combinatorial_wall(self):
        # target: dual of a perturbed bipyramid whose equator vertex split the
        # opposite way from the start chart's diagonal; the solution path
        # crosses the wall and the chart must flip once
        from polydual.minkowski import minkowski_inner
        from polydual.polyhedra import hull_from_dual_points
        from polydual.solver import _tangent_frame
        from polydual.surface import flip_edge

        B = triangular_bipyramid()
        rng = np.random.RandomState(42)
        pts = np.stack([p.v for p in B.planes])
        for i in range(len(pts)):
            fr, _ = _tangent_frame(pts, i)
            v = pts[i] + fr @ (0.03 * rng.randn(3))
            pts[i] = v / np.sqrt(minkowski_inner(v, v))
        B3 = hull_from_dual_points(pts)
        assert B3.n_vertices == 8  # all three quad vertices split
        m3 = dualize(B3).metric
        e_conflict = next(e for e in range(m3.surface.n_edges)
                          if set(m3.surface.edge_endpoints(e)) == {2, 3})
        target, _ = flip_edge(m3, e_conflict)

        final, report = continuation(B, target, steps=10)
        assert len(report.flips) == 1
        assert report.flips[0].flipped_edge_pair == (0, 5)
        assert report.flips[0].new_edge_pair == (2, 3)
        assert np.max(np.abs(final.residual())) < 1e-10
        assert match_dihedral_angles(B3, recovered_polyhedron(final))

    def test_largeness_precondition(self, tetra):
        P, out = tetra
        validate_target(out.metric, largeness_depth=4)
        from polydual.surface import octahedron_sphere

        # geodesics of length exactly 2*pi violate largeness; the failure is
        # named alongside the concavity one
        round_sphere = octahedron_sphere()
        with pytest.raises(InvalidConeMetric, match="largeness"):
            validate_target(round_sphere, largeness_depth=6)
