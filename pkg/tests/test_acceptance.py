"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings alongside the pytest verdicts.
"""
import time

import numpy as np
import pytest

from polydual.fuchsian import fuchsian_dualize, fuchsian_octagon_group
from polydual.geodesic import closed_geodesic_search
from polydual.minkowski import (
    DSPoint,
    HPoint,
    minkowski_inner,
    plane_basis_points,
    plane_through,
)
from polydual.polyhedra import (
    EUCLIDEAN_TETRA_ANGLE,
    dihedral_angle,
    dualize,
    face_area,
    hexahedron,
    hull_from_dual_points,
    random_polyhedron,
    regular_tetrahedron,
    regular_tetrahedron_data,
    triangular_bipyramid,
)
from polydual.solver import (
    SolverState,
    continuation,
    jacobian,
    match_dihedral_angles,
    perturbed_polyhedron,
    recovered_polyhedron,
    rigidity_report,
)
from polydual.surface import ConeMetric, SPHERICAL, gauss_bonnet_residual, is_concave, scale

TETRA_THETAS = np.pi / 3 + (np.arange(10) + 0.5) / 10 * (
    EUCLIDEAN_TETRA_ANGLE - np.pi / 3)


def _verdict(name, budget, t0, failures):
    elapsed = time.time() - t0
    ok = not failures and elapsed < budget
    line = f"[{'PASS' if ok else 'FAIL'}] {name} ({elapsed:.1f}s / budget {budget:.0f}s)"
    if failures:
        line += f" -- {failures[0]}" + (f" (+{len(failures)-1} more)"
                                        if len(failures) > 1 else "")
    print(line)
    assert not failures, failures
    assert elapsed < budget, f"{name} exceeded its {budget}s budget ({elapsed:.1f}s)"


def state_of(P, out):
    return SolverState(np.stack([p.v for p in P.planes]),
                       out.metric.surface, out.metric.lengths)


def test_criterion_1_polarity_suite():
    t0 = time.time()
    failures = []
    rng = np.random.RandomState(10)
    for k in range(100):
        v = rng.randn(4)
        while minkowski_inner(v, v) <= 0.1:
            v = rng.randn(4)
        n = DSPoint.from_vector(v)
        pts = plane_basis_points(n)
        hint = HPoint.from_vector(pts[0].v + 0.5 * n.v)
        n2 = plane_through(*pts, positive_side_hint=hint)
        err = np.max(np.abs(n2.v - n.v))
        if err > 1e-9:
            failures.append(f"dual-of-dual {k}: error {err:.2e}")
    for k in range(20):
        P = random_polyhedron(rng, int(rng.randint(5, 8)))
        Q = hull_from_dual_points(P.planes)
        if Q.n_vertices != P.n_vertices:
            failures.append(f"hull round trip {k}: vertex count changed")
            continue
        got = sorted(tuple(np.round(v.v, 6)) for v in Q.vertices)
        want = sorted(tuple(np.round(v.v, 6)) for v in P.vertices)
        err = max(np.max(np.abs(np.array(a) - np.array(b)))
                  for a, b in zip(got, want))
        if err > 1e-9:
            failures.append(f"hull round trip {k}: vertex error {err:.2e}")
    _verdict("criterion 1: polarity suite", 10.0, t0, failures)


def test_criterion_2_duality_identities():
    t0 = time.time()
    failures = []
    for theta in TETRA_THETAS:
        data = regular_tetrahedron_data(theta)
        P = regular_tetrahedron(theta)
        out = dualize(P)
        m = out.metric
        if np.max(np.abs(m.lengths - (np.pi - theta))) > 1e-9:
            failures.append(f"theta={theta:.3f}: dual edge length off")
        want_angle = data["dual_cone_angle"]
        if np.max(np.abs(m.cone_angles() - want_angle)) > 1e-9:
            failures.append(f"theta={theta:.3f}: dual cone angle off")
        areas = np.array([face_area(P, f) for f in range(P.n_faces)])
        if np.max(np.abs(m.cone_angles() - 2 * np.pi - areas)) > 1e-9:
            failures.append(f"theta={theta:.3f}: cone angle vs face area off")
        if abs(gauss_bonnet_residual(m)) > 1e-8:
            failures.append(f"theta={theta:.3f}: Gauss-Bonnet residual")
    H = hexahedron(0.5)
    outH = dualize(H)
    for e in range(outH.metric.surface.n_edges):
        kind, info = outH.edge_provenance[e]
        if kind != "primal":
            continue
        k = H.edge_between(*info)
        if abs(outH.metric.lengths[e] - (np.pi - dihedral_angle(H, k))) > 1e-9:
            failures.append(f"hexahedron edge {e}: length != pi - theta")
    areasH = np.array([face_area(H, f) for f in range(H.n_faces)])
    if np.max(np.abs(outH.metric.cone_angles() - 2 * np.pi - areasH)) > 1e-9:
        failures.append("hexahedron: cone angle vs face area off")
    if abs(gauss_bonnet_residual(outH.metric)) > 1e-8:
        failures.append("hexahedron: Gauss-Bonnet residual")
    _verdict("criterion 2: duality identities", 10.0, t0, failures)


def test_criterion_3_concavity_and_largeness():
    t0 = time.time()
    failures = []
    fixtures = [("tetra %.3f" % th, regular_tetrahedron(th))
                for th in TETRA_THETAS]
    fixtures += [("hexahedron", hexahedron(0.5)),
                 ("bipyramid", triangular_bipyramid())]
    rng = np.random.RandomState(21)
    fixtures += [(f"random {k}", random_polyhedron(rng, 6)) for k in range(2)]
    for name, P in fixtures:
        m = dualize(P).metric
        rep = is_concave(m)
        if not rep.concave or rep.min_margin <= 0:
            failures.append(f"{name}: not concave (margin {rep.min_margin:.2e})")
        search = closed_geodesic_search(m, depth=8)
        if search.found_within_cap:
            failures.append(
                f"{name}: contractible geodesic of length {search.min_length:.4f}")
    _verdict("criterion 3: concavity and largeness of duals", 120.0, t0, failures)


def test_criterion_4_lambda_scaling():
    t0 = time.time()
    failures = []
    rng = np.random.RandomState(33)
    cap = np.pi * np.exp(-0.105)

    def scalable(m):
        # scaling by up to exp(0.1) must keep lengths below pi and triangle
        # perimeters below 2*pi
        if np.max(m.lengths) >= cap:
            return False
        perims = [m.surface.triangle_edge_lengths(t, m.lengths).sum()
                  for t in range(m.surface.n_triangles)]
        return max(perims) < 2 * np.pi * np.exp(-0.105)

    metrics = []
    while len(metrics) < 50:
        P = random_polyhedron(rng, int(rng.randint(5, 8)), max_dual_length=cap)
        m = dualize(P).metric
        if not scalable(m):
            continue
        metrics.append(m)
        # randomized concave variants: jitter lengths, keep chart and concavity
        for _ in range(2):
            if len(metrics) >= 50:
                break
            jitter = m.lengths * (1 + 1e-3 * rng.randn(len(m.lengths)))
            try:
                m2 = ConeMetric(m.surface, SPHERICAL, jitter)
            except Exception:
                continue
            if is_concave(m2).concave and scalable(m2):
                metrics.append(m2)
    for k, m in enumerate(metrics):
        lam = rng.uniform(1e-4, 0.1)
        scaled = scale(m, lam)
        rep = is_concave(scaled)
        if not rep.concave:
            failures.append(f"metric {k}: concavity lost after scale({lam:.3f})")
        if np.max(scaled.lengths) >= np.pi:
            failures.append(f"metric {k}: length reached pi")
        ident = scale(m, 0.0)
        if not np.array_equal(ident.lengths, m.lengths):
            failures.append(f"metric {k}: scale(., 0) not the identity")
    _verdict("criterion 4: lambda-scaling keeps concavity", 5.0, t0, failures)


def test_criterion_5_numerical_rigidity():
    t0 = time.time()
    failures = []
    fixtures = [("tetrahedron", regular_tetrahedron(1.15)),
                ("hexahedron", hexahedron(0.5)),
                ("bipyramid", triangular_bipyramid())]
    for name, P in fixtures:
        out = dualize(P)
        st = state_of(P, out)
        # dual vertices dual to quadrilateral faces have valence above three
        valences = np.bincount(st.edge_pairs.ravel())
        if name == "hexahedron" and valences.max() <= 3:
            failures.append("hexahedron dual has no vertex of valence > 3")
        rig = rigidity_report(st)
        if not rig.smallest_singular_value > 1e-8:
            failures.append(f"{name}: smallest singular value "
                            f"{rig.smallest_singular_value:.2e}")
        Jm = jacobian(st)
        frames, gauge = st.frames(), st.gauge()
        rng = np.random.RandomState(5)
        for _ in range(3):
            v = rng.randn(Jm.shape[1])
            v /= np.linalg.norm(v)
            h = 1e-4
            dd = (st.moved(h * v, gauge, frames).current_lengths()
                  - st.moved(-h * v, gauge, frames).current_lengths()) / (2 * h)
            rel = np.linalg.norm(dd - Jm @ v) / np.linalg.norm(Jm @ v)
            if rel > 1e-5:
                failures.append(f"{name}: FD consistency {rel:.2e}")
    _verdict("criterion 5: numerical infinitesimal rigidity", 30.0, t0, failures)


def test_criterion_6_realization_round_trip():
    t0 = time.time()
    failures = []
    rng = np.random.RandomState(77)
    for name, P, mag in [("tetrahedron", regular_tetrahedron(1.15), 1e-2),
                         ("hexahedron", hexahedron(0.5), 5e-3)]:
        target = dualize(P).metric
        for k in range(10):
            start = perturbed_polyhedron(P, rng, mag)
            try:
                final, _ = continuation(start, target, steps=8)
            except Exception as exc:
                failures.append(f"{name} start {k}: {exc}")
                continue
            if not match_dihedral_angles(P, recovered_polyhedron(final),
                                         tol=1e-8):
                failures.append(f"{name} start {k}: dihedral multisets differ")
    _verdict("criterion 6: realization round trip", 120.0, t0, failures)


def test_criterion_7_chart_dimension():
    t0 = time.time()
    failures = []
    genus0 = [dualize(regular_tetrahedron(th)).metric.surface
              for th in TETRA_THETAS[:3]]
    genus0 += [dualize(hexahedron(0.5)).metric.surface,
               dualize(triangular_bipyramid()).metric.surface,
               dualize(random_polyhedron(np.random.RandomState(8), 7)).metric.surface]
    for s in genus0:
        if s.n_edges != 3 * s.n_vertices - 6:
            failures.append(f"genus-0 chart: E={s.n_edges}, n={s.n_vertices}")
    data = fuchsian_octagon_group()
    s2 = fuchsian_dualize(data, 1.0).metric.surface
    if s2.euler_characteristic != -2:
        failures.append(f"fuchsian chart: chi={s2.euler_characteristic}")
    if s2.n_edges != 3 * (s2.n_vertices + 2):
        failures.append(f"fuchsian chart: E={s2.n_edges}, n={s2.n_vertices}")
    _verdict("criterion 7: chart dimension bookkeeping", 1.0, t0, failures)


def test_criterion_8_fuchsian_desk_case():
    t0 = time.time()
    failures = []
    data = fuchsian_octagon_group()
    if data.relation_residual() > 1e-8:
        failures.append("octagon relation residual above 1e-8")
    dists = {}
    for h in (0.5, 1.0, 2.0):
        out = fuchsian_dualize(data, h)
        gb = gauss_bonnet_residual(out.metric)
        if abs(gb) > 1e-8:
            failures.append(f"h={h}: Gauss-Bonnet residual {gb:.2e}")
        if out.metric.surface.euler_characteristic != -2:
            failures.append(f"h={h}: wrong Euler characteristic")
        if not out.core_distance > 0:
            failures.append(f"h={h}: nonpositive core distance")
        dists[h] = out.core_distance
        search = closed_geodesic_search(out.metric, depth=8)
        if search.found_within_cap:
            failures.append(f"h={h}: contractible geodesic within 2*pi")
    if not dists[0.5] < dists[1.0] < dists[2.0]:
        failures.append(f"core distance not decreasing as h decreases: {dists}")
    _verdict("criterion 8: Fuchsian desk case", 120.0, t0, failures)
