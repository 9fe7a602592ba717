"""Newton continuation inverting the genus-0 realization map: find dual
vertex positions in dS^3 whose polyhedron induces a prescribed concave large
spherical cone-metric.

Unknowns are the positions of one point per marked dual vertex, moved inside
3-parameter tangent charts. Tangent frames are built from the configuration
itself (Minkowski Gram-Schmidt on directions toward the other points), which
makes every derived quantity exactly equivariant under global isometries.
The gauge pins 3+2+1 chart coordinates of three independent points, chosen
so the pinned directions span the isometry orbit exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    FeasibilityLost,
    HomotopyBlocked,
    InvalidConeMetric,
    InvalidPolyhedron,
    NotSpacelikeSeparated,
    SolverError,
    StepStalled,
)
from .geodesic import closed_geodesic_search
from .minkowski import J, minkowski_inner
from .polyhedra import ConvexPolyhedronH3, hull_from_dual_points
from .surface import SPHERICAL, CombSurface, ConeMetric, is_concave

FD_STEP = 1e-6
NEWTON_TOL = 1e-10
DAMPING_FLOOR = 1e-12


def _so31_basis():
    basis = []
    for i in range(1, 4):          # boosts
        m = np.zeros((4, 4))
        m[0, i] = m[i, 0] = 1.0
        basis.append(m)
    for i, j in ((1, 2), (1, 3), (2, 3)):   # rotations
        m = np.zeros((4, 4))
        m[i, j] = -1.0
        m[j, i] = 1.0
        basis.append(m)
    return basis


SO31_BASIS = _so31_basis()


def _tangent_frame(positions: np.ndarray, i: int) -> tuple:
    """Minkowski-orthonormal frame of the tangent space at positions[i].

    Directions toward the other points are orthonormalized in deterministic
    order, falling back to ambient axes for degenerate configurations.
    Returns (frame 4x3, signs length-3 with entries +-1).
    """
    x = positions[i]
    n = len(positions)
    cands = [positions[(i + k) % n] for k in range(1, n)]
    cands += [np.eye(4)[k] for k in range(4)]
    frame = []
    signs = []
    for y in cands:
        t = y - minkowski_inner(x, y) * x          # tangent projection, <x,x>=1
        for f, s in zip(frame, signs):
            t = t - s * minkowski_inner(f, t) * f
        q = minkowski_inner(t, t)
        if abs(q) < 1e-10:
            continue
        frame.append(t / np.sqrt(abs(q)))
        signs.append(1.0 if q > 0 else -1.0)
        if len(frame) == 3:
            return np.stack(frame, axis=1), np.array(signs)
    raise SolverError("tangent frame construction degenerated")


def _coords_in_frame(frame, signs, v) -> np.ndarray:
    """Chart coordinates of a tangent vector v in a signed orthonormal frame."""
    return signs * (frame.T @ J @ v)


@dataclass
class Gauge:
    anchors: tuple               # indices of the three pinned points
    directions: dict             # point index -> 3 x k matrix of free directions

    def n_free(self):
        return sum(d.shape[1] for d in self.directions.values())


def build_gauge(positions: np.ndarray, frames) -> Gauge:
    """Pin 3+2+1 chart coordinates of three independent points.

    The second point's pinned plane is the orbit of the first point's
    stabilizer; the third point's pinned line is the orbit of the residual
    one-parameter stabilizer. This removes exactly the six isometry degrees
    of freedom at generic configurations.
    """
    n = len(positions)
    for anchors in _independent_triples(positions):
        i0, i1, i2 = anchors
        acts0 = np.stack([A @ positions[i0] for A in SO31_BASIS], axis=1)
        _, sv, vt = np.linalg.svd(acts0)
        rank = int(np.sum(sv >= 1e-8 * sv[0]))
        if 6 - rank != 3:
            continue
        stab0 = [sum(c[k] * SO31_BASIS[k] for k in range(6)) for c in vt[3:]]
        p1 = np.stack([_coords_in_frame(frames[i1][0], frames[i1][1],
                                        A @ positions[i1]) for A in stab0],
                      axis=1)
        u1, sv1, vt1 = np.linalg.svd(p1)
        if sv1[1] < 1e-8 or (len(sv1) > 2 and sv1[2] > 1e-6 * sv1[0]):
            continue
        free1 = u1[:, 2:]
        c2 = vt1[2]
        stab1 = sum(c2[k] * np.asarray(stab0[k]) for k in range(3))
        v2 = _coords_in_frame(frames[i2][0], frames[i2][1],
                              stab1 @ positions[i2])
        if np.linalg.norm(v2) < 1e-8:
            continue
        u2, _, _ = np.linalg.svd(v2[:, None], full_matrices=True)
        free2 = u2[:, 1:]
        directions = {}
        for i in range(n):
            if i == i0:
                directions[i] = np.zeros((3, 0))
            elif i == i1:
                directions[i] = free1
            elif i == i2:
                directions[i] = free2
            else:
                directions[i] = np.eye(3)
        return Gauge(anchors=anchors, directions=directions)
    raise SolverError("no independent point triple found for the gauge")


def _independent_triples(positions):
    n = len(positions)
    for i0 in range(n):
        for i1 in range(i0 + 1, n):
            for i2 in range(i1 + 1, n):
                m = np.stack([positions[i0], positions[i1], positions[i2]])
                if np.linalg.svd(m, compute_uv=False)[2] > 1e-6:
                    yield (i0, i1, i2)


class SolverState:
    """Positions of the dual vertices plus the chart and target lengths."""

    def __init__(self, positions, surface: CombSurface, target_lengths):
        self.positions = np.asarray(positions, dtype=float).copy()
        self.surface = surface
        self.target = np.asarray(target_lengths, dtype=float).copy()
        n = surface.n_vertices
        if self.positions.shape != (n, 4):
            raise SolverError(f"need {n} dual points, got {self.positions.shape}")
        if self.target.shape != (surface.n_edges,):
            raise SolverError("one target length per chart edge required")
        norms = np.einsum("ij,jk,ik->i", self.positions, J, self.positions)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise SolverError("dual points must lie on the de Sitter quadric")
        pairs = [surface.edge_endpoints(e) for e in range(surface.n_edges)]
        if len({frozenset(p) for p in pairs}) != len(pairs):
            raise SolverError(
                "chart has two edges with the same endpoints; the extrinsic "
                "parametrization cannot separate them")
        self.edge_pairs = np.array(pairs)
        if surface.n_edges != 3 * n - 6:
            raise SolverError("chart dimension is not 3n - 6; genus-0 required")

    def copy(self):
        return SolverState(self.positions, self.surface, self.target)

    # -- geometry ----------------------------------------------------------------

    def current_lengths(self) -> np.ndarray:
        u = self.positions[self.edge_pairs[:, 0]]
        w = self.positions[self.edge_pairs[:, 1]]
        diff = u - w
        csum = u + w
        c2m = np.einsum("ij,jk,ik->i", diff, J, diff)
        c2p = np.einsum("ij,jk,ik->i", csum, J, csum)
        if np.any(c2m <= 0) or np.any(c2p <= 0):
            raise NotSpacelikeSeparated("a chart edge is no longer spacelike")
        return 2.0 * np.arcsin(np.minimum(np.sqrt(c2m) / 2.0, 1.0))

    def residual(self) -> np.ndarray:
        return self.current_lengths() - self.target

    def frames(self):
        return [_tangent_frame(self.positions, i)
                for i in range(len(self.positions))]

    def gauge(self) -> Gauge:
        return build_gauge(self.positions, self.frames())

    def moved(self, delta: np.ndarray, gauge: Gauge, frames) -> "SolverState":
        """New state with free chart coordinates shifted by delta."""
        out = self.positions.copy()
        ofs = 0
        for i in range(len(out)):
            d = gauge.directions[i]
            k = d.shape[1]
            if k:
                xi = d @ delta[ofs:ofs + k]
                v = out[i] + frames[i][0] @ xi
                q = minkowski_inner(v, v)
                if q <= 0:
                    raise FeasibilityLost(f"point {i} left the quadric chart")
                out[i] = v / np.sqrt(q)
            ofs += k
        return SolverState(out, self.surface, self.target)


def check_feasible(state: SolverState) -> ConvexPolyhedronH3:
    """Convex position check: the chart lengths must form a valid metric and
    the reconstructed hull must exist, keep every plane essential, and have
    its dual decomposition refined by the chart. Violations raise
    FeasibilityLost."""
    try:
        lengths = state.current_lengths()
        ConeMetric(state.surface, SPHERICAL, lengths)   # chart validity
    except (NotSpacelikeSeparated, InvalidConeMetric) as exc:
        raise FeasibilityLost(f"chart validity lost: {exc}") from exc
    try:
        poly = hull_from_dual_points(state.positions)
    except InvalidPolyhedron as exc:
        raise FeasibilityLost(f"hull reconstruction failed: {exc}") from exc
    if poly.discarded:
        raise FeasibilityLost(f"dual points {poly.discarded} became redundant")
    _check_refinement(poly, state)
    return poly


def _check_refinement(poly: ConvexPolyhedronH3, state: SolverState):
    sides = {frozenset(e.faces) for e in poly.edges}
    chart = [frozenset(p) for p in state.edge_pairs]
    chart_set = set(chart)
    missing = sides - chart_set
    if missing:
        exc = FeasibilityLost(
            f"hull edges {sorted(tuple(s) for s in missing)} missing from the chart")
        exc.missing_sides = [tuple(sorted(s)) for s in missing]
        raise exc
    links = [set(poly.faces_at_vertex(v)) for v in range(poly.n_vertices)]
    for pair in chart:
        if pair in sides:
            continue
        if not any(pair <= link for link in links):
            raise FeasibilityLost(
                f"chart edge {sorted(pair)} is not a chord of any dual polygon")


def jacobian(state: SolverState, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference Jacobian of the residual on the gauged chart."""
    frames = state.frames()
    gauge = build_gauge(state.positions, frames)
    nf = gauge.n_free()
    cols = np.empty((state.surface.n_edges, nf))
    for k in range(nf):
        e_k = np.zeros(nf)
        e_k[k] = step
        lp = state.moved(e_k, gauge, frames).current_lengths()
        lm = state.moved(-e_k, gauge, frames).current_lengths()
        cols[:, k] = (lp - lm) / (2 * step)
    return cols


@dataclass
class RigidityReport:
    smallest_singular_value: float
    condition_number: float


def rigidity_report(state: SolverState) -> RigidityReport:
    sv = np.linalg.svd(jacobian(state), compute_uv=False)
    return RigidityReport(smallest_singular_value=float(sv[-1]),
                          condition_number=float(sv[0] / sv[-1]))


def newton_solve(state: SolverState, tol: float = NEWTON_TOL,
                 max_iter: int = 50) -> SolverState:
    """Damped Newton iteration on the gauged residual.

    The step is halved until the residual norm decreases and the trial state
    stays feasible; StepStalled fires at the damping floor, FeasibilityLost
    when every retry leaves convex position.
    """
    check_feasible(state)
    cur = state
    r = cur.residual()
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return cur
        frames = cur.frames()
        gauge = build_gauge(cur.positions, frames)
        Jm = jacobian(cur)
        try:
            delta = np.linalg.solve(Jm, -r)
        except np.linalg.LinAlgError as exc:
            raise StepStalled(f"singular Jacobian: {exc}") from exc
        step = 1.0
        last_feas_exc = None
        while step >= DAMPING_FLOOR:
            try:
                trial = cur.moved(step * delta, gauge, frames)
                check_feasible(trial)
                r_trial = trial.residual()
            except (FeasibilityLost, NotSpacelikeSeparated, InvalidConeMetric,
                    SolverError) as exc:
                last_feas_exc = exc
                step /= 2
                continue
            if np.linalg.norm(r_trial) < np.linalg.norm(r):
                cur, r = trial, r_trial
                break
            step /= 2
        else:
            if last_feas_exc is not None:
                out = FeasibilityLost(
                    f"every damped step left the feasible set ({last_feas_exc})")
                out.missing_sides = getattr(last_feas_exc, "missing_sides", None)
                raise out from last_feas_exc
            raise StepStalled(
                f"damping floor reached at residual {np.max(np.abs(r)):.3e}")
    if np.max(np.abs(r)) < tol:
        return cur
    raise StepStalled(
        f"no convergence after {max_iter} iterations "
        f"(residual {np.max(np.abs(r)):.3e})")


@dataclass
class ContinuationStep:
    s: float
    residual: float
    newton_norm: float
    smallest_singular_value: float


@dataclass
class FlipEvent:
    s: float
    flipped_edge_pair: tuple
    new_edge_pair: tuple


@dataclass
class ContinuationReport:
    steps: list = field(default_factory=list)
    flips: list = field(default_factory=list)
    bump: float = 0.0
    final_rigidity: Optional[RigidityReport] = None


def validate_target(target: ConeMetric, largeness_depth: Optional[int] = None):
    """Target admission: spherical chart metric, concave, optionally large.

    Every violated precondition is named in the raised message.
    """
    if target.geometry != SPHERICAL:
        raise InvalidConeMetric("target must be a spherical cone-metric")
    if target.surface.euler_characteristic != 2:
        raise InvalidConeMetric("continuation covers the genus-0 case")
    failures = []
    rep = is_concave(target)
    if not rep.concave:
        failures.append(
            f"concavity: worst margin {rep.min_margin:.3e}")
    if largeness_depth is not None:
        search = closed_geodesic_search(target, depth=largeness_depth)
        if search.found_within_cap:
            failures.append(
                f"largeness: contractible closed geodesic of length "
                f"{search.min_length:.6f} <= 2*pi")
    if failures:
        raise InvalidConeMetric("; ".join(failures))


def _edge_with_opposite_corners(surface: CombSurface, pair) -> Optional[int]:
    """Chart edge whose two adjacent triangles have the given opposite corners."""
    want = frozenset(pair)
    for e, (h1, h2) in enumerate(surface.edge_halfedges):
        t1, k1 = divmod(h1, 3)
        t2, k2 = divmod(h2, 3)
        c1 = surface.triangles[t1][(k1 + 2) % 3]
        c2 = surface.triangles[t2][(k2 + 2) % 3]
        if frozenset((c1, c2)) == want:
            return e
    return None


def _flip_chart(state: SolverState, l1: np.ndarray, exc, s: float):
    """Re-chart after the hull developed an edge the chart is missing.

    The chart edge whose quadrilateral has the missing side as its opposite
    diagonal is flipped in both the chart and the target lengths.
    """
    from .errors import FlipBlocked
    from .surface import flip_edge

    missing = getattr(exc, "missing_sides", None)
    if not missing:
        return None
    for pair in missing:
        e = _edge_with_opposite_corners(state.surface, pair)
        if e is None:
            continue
        try:
            flipped_target, e_new = flip_edge(
                ConeMetric(state.surface, SPHERICAL, l1), e)
        except (FlipBlocked, InvalidConeMetric):
            continue
        new_surface = flipped_target.surface
        try:
            new_state = SolverState(state.positions, new_surface,
                                    flipped_target.lengths)
            check_feasible(new_state)
        except (SolverError, FeasibilityLost):
            continue
        ev = FlipEvent(
            s=s,
            flipped_edge_pair=tuple(sorted(state.surface.edge_endpoints(e))),
            new_edge_pair=tuple(sorted(new_surface.edge_endpoints(e_new))))
        return new_state, flipped_target.lengths, ev
    return None


def continuation(start: ConvexPolyhedronH3, target: ConeMetric,
                 steps: int = 10, tol: float = NEWTON_TOL,
                 largeness_depth: Optional[int] = None) -> tuple:
    """Follow the straight edge-length homotopy from the start polyhedron's
    dual metric to the target, Newton-correcting at each step.

    Returns (state, report). The start polyhedron must realize the target's
    chart: every chart edge a chord of its dual decomposition. A concavity
    dip along the way retries with a uniform upscaling bump; a hull edge
    missing from the chart triggers an edge flip of the chart and target,
    re-anchoring the homotopy at the current parameter.
    """
    validate_target(target, largeness_depth)
    state = SolverState(np.stack([p.v for p in start.planes]),
                        target.surface, target.lengths)
    try:
        check_feasible(state)
    except (FeasibilityLost, InvalidConeMetric) as exc:
        raise HomotopyBlocked(
            f"start polyhedron does not realize the target chart: {exc}",
            s=0.0) from exc
    l0 = state.current_lengths()
    l1 = target.lengths.copy()
    report = ContinuationReport()

    def schedule(surface, s, bump):
        lam = bump * 4.0 * s * (1.0 - s)
        return np.exp(lam) * ((1.0 - s) * l0 + s * l1)

    def step_valid(surface, lengths):
        try:
            m = ConeMetric(surface, SPHERICAL, lengths)
        except InvalidConeMetric as exc:
            return False, str(exc)
        rep = is_concave(m)
        if not rep.concave:
            return False, f"concavity lost (margin {rep.min_margin:.3e})"
        return True, ""

    bump = 0.0
    s = 0.0
    ds = 1.0 / steps
    min_ds = ds / 64.0
    while s < 1.0 - 1e-14:
        surface = state.surface
        s_next = min(1.0, s + ds)
        l_next = schedule(surface, s_next, bump)
        ok, why = step_valid(surface, l_next)
        if not ok:
            fixed = False
            for cand in (0.005, 0.01, 0.02, 0.05):
                if np.max(schedule(surface, s_next, cand)) < np.pi:
                    ok2, _ = step_valid(surface, schedule(surface, s_next, cand))
                    if ok2:
                        bump, fixed = cand, True
                        break
            if not fixed:
                edge = int(np.argmax(l_next)) if np.max(l_next) >= np.pi else None
                raise HomotopyBlocked(
                    f"interpolated metric leaves the chart at s={s_next:.4f}: {why}",
                    s=s_next, edge=edge)
            l_next = schedule(surface, s_next, bump)
        trial = SolverState(state.positions, surface, l_next)
        try:
            solved = newton_solve(trial, tol=tol)
        except (StepStalled, FeasibilityLost) as exc:
            recovered = None
            if isinstance(exc, FeasibilityLost):
                recovered = _flip_chart(state, l1, exc, s)
            if recovered is not None:
                state, l1, ev = recovered
                l_cur = state.current_lengths()
                l0 = ((l_cur - s * l1) / (1.0 - s)
                      if s < 1.0 - 1e-12 else l_cur)
                report.flips.append(ev)
                continue
            if ds / 2 < min_ds:
                raise HomotopyBlocked(
                    f"Newton correction failed at s={s_next:.4f} with minimal "
                    f"step: {exc}", s=s_next) from exc
            ds /= 2
            continue
        state = solved
        s = s_next
        ds = min(2 * ds, 1.0 / steps)
        rig = rigidity_report(state)
        report.steps.append(ContinuationStep(
            s=s, residual=float(np.max(np.abs(state.residual()))),
            newton_norm=float(np.linalg.norm(state.residual())),
            smallest_singular_value=rig.smallest_singular_value))
    report.bump = bump
    report.final_rigidity = rigidity_report(state)
    return state, report


# -- helpers for round trips and start construction -----------------------------


def perturbed_polyhedron(P: ConvexPolyhedronH3, rng: np.random.RandomState,
                         magnitude: float = 1e-2, max_tries: int = 60,
                         chart: Optional[ConeMetric] = None) -> ConvexPolyhedronH3:
    """Perturb all dual points inside their tangent charts.

    Without a chart, the face lattice combinatorics must survive the
    perturbation. With one, the perturbed polyhedron only has to realize the
    chart (polyhedra sitting on combinatorial walls, like bipyramids with
    four faces at a vertex, split under every generic perturbation)."""
    base = np.stack([p.v for p in P.planes])
    want = {frozenset(e.faces) for e in P.edges}
    for _ in range(max_tries):
        pts = base.copy()
        for i in range(len(pts)):
            frame, _ = _tangent_frame(base, i)
            v = pts[i] + frame @ (magnitude * rng.randn(3))
            q = minkowski_inner(v, v)
            if q <= 0:
                break
            pts[i] = v / np.sqrt(q)
        else:
            try:
                poly = hull_from_dual_points(pts)
            except InvalidPolyhedron:
                continue
            if poly.discarded:
                continue
            if chart is None:
                if {frozenset(e.faces) for e in poly.edges} != want:
                    continue
            else:
                try:
                    check_feasible(SolverState(pts, chart.surface,
                                               chart.lengths))
                except (FeasibilityLost, SolverError):
                    continue
            return poly
    raise SolverError("failed to perturb into a usable start")


def recovered_polyhedron(state: SolverState) -> ConvexPolyhedronH3:
    return hull_from_dual_points(state.positions)


def _relabelings(poly: ConvexPolyhedronH3, surface: CombSurface):
    """Face relabelings sending the hull's dual decomposition into the chart.

    Yields permutations sigma with sigma[face] = chart vertex such that every
    pair of edge-adjacent faces maps to a chart edge pair.
    """
    n = poly.n_faces
    if n != surface.n_vertices:
        return
    pairs = {frozenset(surface.edge_endpoints(e))
             for e in range(surface.n_edges)}
    adj = [set() for _ in range(n)]
    for e in poly.edges:
        f1, f2 = e.faces
        adj[f1].add(f2)
        adj[f2].add(f1)

    sigma = [None] * n
    used = [False] * n

    def assign(f):
        if f == n:
            yield list(sigma)
            return
        for cand in range(n):
            if used[cand]:
                continue
            if any(sigma[g] is not None
                   and frozenset((cand, sigma[g])) not in pairs
                   for g in adj[f]):
                continue
            sigma[f] = cand
            used[cand] = True
            yield from assign(f + 1)
            sigma[f] = None
            used[cand] = False

    yield from assign(0)


def auto_start(target: ConeMetric) -> ConvexPolyhedronH3:
    """Symmetric polyhedron realizing the target's chart, faces relabeled so
    dual vertex indices line up with the chart's."""
    from .polyhedra import (
        hexahedron,
        random_polyhedron,
        regular_tetrahedron,
        triangular_bipyramid,
    )

    n = target.surface.n_vertices
    candidates = []
    if n == 4:
        candidates.append(regular_tetrahedron(1.15))
    if n == 6:
        candidates.extend([hexahedron(0.5), triangular_bipyramid()])
    rng = np.random.RandomState(0)
    for _ in range(6):
        try:
            candidates.append(random_polyhedron(rng, n))
        except InvalidPolyhedron:
            break
    for poly in candidates:
        for sigma in _relabelings(poly, target.surface):
            inverse = np.argsort(sigma)
            relabeled = hull_from_dual_points(
                [poly.planes[inverse[j]] for j in range(n)])
            state = SolverState(np.stack([p.v for p in relabeled.planes]),
                                target.surface,
                                target.lengths)
            try:
                check_feasible(state)
            except (FeasibilityLost, InvalidConeMetric, SolverError,
                    NotSpacelikeSeparated):
                continue
            return relabeled
    raise HomotopyBlocked(
        "no start polyhedron with matching combinatorics found", s=0.0)


def match_dihedral_angles(P: ConvexPolyhedronH3, Q: ConvexPolyhedronH3,
                          tol: float = 1e-8) -> bool:
    """Congruence check through sorted dihedral-angle and edge-length multisets."""
    from .polyhedra import dihedral_angle

    if P.n_edges != Q.n_edges:
        return False
    ang_p = sorted(dihedral_angle(P, e) for e in range(P.n_edges))
    ang_q = sorted(dihedral_angle(Q, e) for e in range(Q.n_edges))
    len_p = sorted(P.edge_length(e) for e in range(P.n_edges))
    len_q = sorted(Q.edge_length(e) for e in range(Q.n_edges))
    return (max(abs(a - b) for a, b in zip(ang_p, ang_q)) < tol
            and max(abs(a - b) for a, b in zip(len_p, len_q)) < tol)
