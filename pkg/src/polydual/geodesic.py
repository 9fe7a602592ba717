"""Geodesic tracing on cone-metrics by isometric development, and a
depth-bounded search for short closed geodesics.

Triangles are developed into the model surface: the unit sphere in R^3 for
spherical metrics, the upper hyperboloid of the form diag(-1,1,1) for
hyperbolic ones. A straight segment of the metric develops onto a single
model geodesic; the search solves for closed geodesics from the rotation
holonomy of developed triangle strips.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidConeMetric
from .surface import (
    SPHERICAL,
    ConeMetric,
    _base_pair,
    _develop_third_point,
    _he_index,
    _model_distance,
)

CROSSING_TOL = 1e-9
IDENTITY_TOL = 1e-8


def _form(geometry):
    return np.eye(3) if geometry == SPHERICAL else np.diag([-1.0, 1.0, 1.0])


def _orient(A, B, C):
    return float(np.linalg.det(np.stack([A, B, C])))


def _develop_start(m: ConeMetric, t: int):
    """Model positions for the three corners of triangle t, positively oriented."""
    surf = m.surface
    lengths = m.lengths
    l01 = lengths[surf.edge_of(t, 0)]
    l12 = lengths[surf.edge_of(t, 1)]
    l20 = lengths[surf.edge_of(t, 2)]
    A, B = _base_pair(l01, m.geometry)
    C = _develop_third_point(A, B, l20, l12, +1.0, m.geometry)
    return [A, B, C]

def _develop_across(m: ConeMetric, X, t: int, k: int):
    """Develop the neighbor across half-edge (t, k), given t's positions X.

    Returns (t2, X2) with X2 the neighbor's corner positions in the same chart.
    """
    surf = m.surface
    mate = surf.mate(_he_index(t, k))
    t2, k2 = divmod(mate, 3)
    u_pos = X[k]
    w_pos = X[(k + 1) % 3]
    third_u = m.lengths[surf.edge_of(t2, (k2 + 1) % 3)]   # |u, third|
    third_w = m.lengths[surf.edge_of(t2, (k2 + 2) % 3)]   # |third, w|
    side = -np.sign(_orient(u_pos, w_pos, X[(k + 2) % 3]))
    C = _develop_third_point(u_pos, w_pos, third_u, third_w, side, m.geometry)
    X2 = [None, None, None]
    X2[k2] = w_pos
    X2[(k2 + 1) % 3] = u_pos
    X2[(k2 + 2) % 3] = C
    return t2, X2


def _point_from_barycentric(X, bary, geometry):
    g = _form(geometry)
    p = bary[0] * X[0] + bary[1] * X[1] + bary[2] * X[2]
    q = p @ g @ p
    if geometry == SPHERICAL:
        if q <= 0:
            raise ValueError("barycentric point degenerates")
        return p / np.sqrt(q)
    if q >= 0:
        raise ValueError("barycentric point leaves the hyperboloid chart")
    return p / np.sqrt(-q)


def _barycentric_of(X, p):
    lam = np.linalg.solve(np.stack(X, axis=1), p)
    s = lam.sum()
    return lam / s if s != 0 else lam


def _tangent_toward(p, q, geometry):
    g = _form(geometry)
    sgn = 1.0 if geometry == SPHERICAL else -1.0
    t = q - (p @ g @ q) / (sgn) * p
    nt = t @ g @ t
    if nt <= 0:
        raise ValueError("degenerate tangent")
    return t / np.sqrt(nt)


def _perp_tangent(p, e1, geometry):
    g = _form(geometry)
    n = g @ np.cross(p, e1)
    return n / np.sqrt(n @ g @ n)


def _geodesic_point(p, d, s, geometry):
    if geometry == SPHERICAL:
        return np.cos(s) * p + np.sin(s) * d
    return np.cosh(s) * p + np.sinh(s) * d


def _edge_crossing_params(p, d, A, B, geometry):
    """Arc-length candidates where the geodesic (p, d) meets the line AB."""
    g = _form(geometry)
    n = g @ np.cross(A, B)
    alpha = float(p @ g @ n)
    beta = float(d @ g @ n)
    if geometry == SPHERICAL:
        if alpha == 0.0 and beta == 0.0:
            return []
        s0 = np.arctan2(-alpha, beta)
        cands = [s0 + k * np.pi for k in (-1, 0, 1, 2)]
        return [s for s in cands if CROSSING_TOL < s <= np.pi + CROSSING_TOL]
    if abs(beta) <= abs(alpha):
        return []
    s0 = float(np.arctanh(-alpha / beta))
    return [s0] if s0 > CROSSING_TOL else []


def _inside_segment(q, A, B, geometry):
    """Where q sits on segment AB: 'interior', 'endpoint', or None."""
    dab = _model_distance(A, B, geometry)
    da = _model_distance(A, q, geometry)
    db = _model_distance(q, B, geometry)
    if abs(da + db - dab) > 1e-7:
        return None
    if da < CROSSING_TOL or db < CROSSING_TOL:
        return "endpoint"
    return "interior"


@dataclass
class GeodesicTrace:
    start_triangle: int
    start_bary: np.ndarray
    direction_angle: float
    crossings: list = field(default_factory=list)
    length: float = 0.0
    status: str = "max_length"          # or "cone_point"
    end_triangle: Optional[int] = None
    end_bary: Optional[np.ndarray] = None
    cone_vertex: Optional[int] = None
    developed_points: list = field(default_factory=list)
    circle_normal: Optional[np.ndarray] = None


def trace_geodesic(m: ConeMetric, start_triangle: int, start_bary,
                   direction_angle: float, max_length: float,
                   max_crossings: int = 10000) -> GeodesicTrace:
    """March a geodesic from a barycentric start point through the triangulation.

    The direction angle is measured at the start point from the tangent
    pointing toward corner 0 of the start triangle, turning toward corner 1.
    Stops at max_length, or earlier when a cone point is hit within 1e-9.
    """
    bary = np.asarray(start_bary, dtype=float)
    if bary.shape != (3,) or np.any(bary <= 0) or abs(bary.sum() - 1.0) > 1e-9:
        raise ValueError("start must be strictly inside the triangle")
    X = _develop_start(m, start_triangle)
    p = _point_from_barycentric(X, bary, m.geometry)
    e1 = _tangent_toward(p, X[0], m.geometry)
    e2 = _perp_tangent(p, e1, m.geometry)
    d = np.cos(direction_angle) * e1 + np.sin(direction_angle) * e2

    trace = GeodesicTrace(start_triangle, bary, direction_angle)
    g = _form(m.geometry)
    normal = g @ np.cross(p, d)
    trace.circle_normal = normal / np.linalg.norm(normal)

    t = start_triangle
    remaining = float(max_length)
    for _ in range(max_crossings):
        best = None
        for k in range(3):
            A, B = X[k], X[(k + 1) % 3]
            for s in _edge_crossing_params(p, d, A, B, m.geometry):
                q = _geodesic_point(p, d, s, m.geometry)
                spot = _inside_segment(q, A, B, m.geometry)
                if spot is None:
                    continue
                if best is None or s < best[0]:
                    best = (s, k, q, spot)
        if best is None:
            raise InvalidConeMetric(
                f"geodesic failed to exit triangle {t}; development degenerated")
        s, k, q, spot = best
        if s >= remaining:
            end = _geodesic_point(p, d, remaining, m.geometry)
            trace.length += remaining
            trace.status = "max_length"
            trace.end_triangle = t
            trace.end_bary = _barycentric_of(X, end)
            return trace
        trace.length += s
        if spot == "endpoint":
            A, B = X[k], X[(k + 1) % 3]
            corner = k if _model_distance(A, q, m.geometry) < CROSSING_TOL \
                else (k + 1) % 3
            trace.status = "cone_point"
            trace.cone_vertex = m.surface.triangles[t][corner]
            trace.end_triangle = t
            return trace
        trace.crossings.append(_he_index(t, k))
        trace.developed_points.append(q)
        # transport the running point and direction, then enter the neighbor
        d = _transport_direction(p, d, q, s, m.geometry)
        p = q
        remaining -= s
        t, X = _develop_across(m, X, t, k)
    raise InvalidConeMetric("crossing budget exhausted; metric too degenerate")


def _transport_direction(p, d, q, s, geometry):
    if geometry == SPHERICAL:
        return -np.sin(s) * p + np.cos(s) * d
    return np.sinh(s) * p + np.cosh(s) * d


# -- closed geodesic search ----------------------------------------------------


@dataclass
class ClosedGeodesic:
    length: float
    cycle: tuple                 # entering half-edges, cyclic
    contractible: bool


@dataclass
class SearchReport:
    min_length: Optional[float] = None
    cycle: Optional[tuple] = None
    depth: int = 0
    length_cap: float = 0.0
    found_within_cap: bool = False
    n_cycles_checked: int = 0
    exhausted: bool = True
    geodesics: list = field(default_factory=list)


def _closed_walks(m: ConeMetric, depth: int):
    """Closed walks in the strip graph, canonical up to rotation."""
    surf = m.surface
    n_he = 3 * surf.n_triangles
    for h0 in range(n_he):
        stack = [(h0, (h0,))]
        while stack:
            h, walk = stack.pop()
            t, k = divmod(h, 3)
            for off in (1, 2):
                exit_he = _he_index(t, (k + off) % 3)
                nxt = surf.mate(exit_he)
                if nxt == h0:
                    yield walk
                    continue
                if len(walk) < depth and nxt >= h0:
                    stack.append((nxt, walk + (nxt,)))


def _strip_holonomy(m: ConeMetric, walk):
    """Develop the strip once around; return (holonomy, crossed developed edges,
    deck word product or None)."""
    surf = m.surface
    t0 = walk[0] // 3
    X = _develop_start(m, t0)
    X0 = np.stack(X, axis=1)
    edges = []
    word = np.eye(4) if m.deck_words is not None else None
    t, X_cur = t0, X
    for i in range(len(walk)):
        h_in = walk[i]
        h_next_in = walk[(i + 1) % len(walk)]
        exit_he = surf.mate(h_next_in)
        te, ke = divmod(exit_he, 3)
        assert te == t
        edges.append((X_cur[ke], X_cur[(ke + 1) % 3]))
        if word is not None:
            word = word @ m.edge_word(exit_he)
        t, X_cur = _develop_across(m, X_cur, t, ke)
    X1 = np.stack(X_cur, axis=1)
    H = X1 @ np.linalg.inv(X0)
    # project to the rotation group to control drift
    u, _, vt = np.linalg.svd(H)
    H = u @ vt
    return H, edges, word


def _axis_of_rotation(H):
    u, s, vt = np.linalg.svd(H - np.eye(3))
    return vt[-1]


def _fit_flat_normal(edges):
    mids = np.array([(A + B) / np.linalg.norm(A + B) for A, B in edges])
    w, v = np.linalg.eigh(mids.T @ mids)
    return v[:, 0]


def _circle_length_through_strip(n, edges, H):
    """Total length of the circle with normal n crossing every edge in order.

    The strip develops once around, so the segment after the last crossing
    ends at the holonomy image of the first one. Returns None unless the
    circle crosses each developed edge strictly inside and advances
    monotonically.
    """
    pts = []
    for A, B in edges:
        fa, fb = float(A @ n), float(B @ n)
        if fa == 0.0 or fb == 0.0 or (fa > 0) == (fb > 0):
            return None
        q = A - (fa / (fa - fb)) * (A - B)  # chord meets the circle plane
        nq = np.linalg.norm(q)
        if nq < 1e-12:
            return None
        q = q / nq
        if _inside_segment(q, A, B, SPHERICAL) != "interior":
            return None
        pts.append(q)
    pts.append(H @ pts[0])
    total = 0.0
    sign_ref = None
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        sgn = float(np.dot(n, np.cross(a, b)))
        step = float(np.arctan2(abs(sgn), np.dot(a, b)))
        if step < CROSSING_TOL or step > np.pi - 1e-12:
            return None
        if sign_ref is None:
            sign_ref = np.sign(sgn)
            if sign_ref == 0:
                return None
        elif np.sign(sgn) != sign_ref:
            return None
        total += step
    return total


def _rotation_about(n, angle):
    n = n / np.linalg.norm(n)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def closed_geodesic_search(m: ConeMetric, depth: int = 8,
                           length_cap: float = 2 * np.pi,
                           contractible_only: bool = True) -> SearchReport:
    """Depth-bounded search for closed geodesics of a spherical cone-metric.

    Enumerates edge-crossing cycles up to the given depth, develops each
    strip, and accepts a cycle when its holonomy admits an invariant great
    circle threading every crossed edge. The result is a bounded search, not
    a completeness certificate. With contractible_only, cycles whose deck
    word is nontrivial are skipped (metrics without deck words treat every
    cycle as contractible).
    """
    if m.geometry != SPHERICAL:
        raise InvalidConeMetric("closed geodesic search expects a spherical metric")
    report = SearchReport(depth=depth, length_cap=length_cap)
    for walk in _closed_walks(m, depth):
        report.n_cycles_checked += 1
        H, edges, word = _strip_holonomy(m, walk)
        contractible = True
        if word is not None:
            contractible = np.max(np.abs(word - np.eye(4))) < IDENTITY_TOL
        if contractible_only and not contractible:
            continue
        if np.max(np.abs(H - np.eye(3))) < IDENTITY_TOL:
            normal = _fit_flat_normal(edges)
            length = _circle_length_through_strip(normal, edges, np.eye(3))
        else:
            normal = _axis_of_rotation(H)
            length = _circle_length_through_strip(normal, edges, H)
            if length is not None:
                # holonomy must be the rotation by the traversed length about
                # the effective axis (sign fixed by the traversal direction)
                ok = min(np.max(np.abs(_rotation_about(normal, length) - H)),
                         np.max(np.abs(_rotation_about(-normal, length) - H)))
                if ok > 1e-6:
                    length = None
        if length is None:
            continue
        report.geodesics.append(ClosedGeodesic(length, walk, contractible))
        if report.min_length is None or length < report.min_length:
            report.min_length = length
            report.cycle = walk
    report.found_within_cap = (report.min_length is not None
                               and report.min_length <= length_cap)
    report.exhausted = not report.found_within_cap
    return report
