"""Triangulated closed oriented surfaces carrying spherical or hyperbolic
cone-metrics: cone angles, concavity, Gauss-Bonnet bookkeeping, uniform
length scaling, edge flips, and distortion between metrics on the same
combinatorics.

Half-edge (t, k) of triangle t runs from corner k to corner (k+1) % 3.
Half-edges are also addressed by the linear index 3*t + k. An edge is an
unordered pair of mutually glued half-edges; edges are numbered by sorting
on their smaller half-edge index, and all per-edge arrays follow that order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FlipBlocked, InvalidConeMetric, InvalidSurface, LengthOverflow

SPHERICAL = "spherical"
HYPERBOLIC = "hyperbolic"

ANG_SLACK = 1e-12
MIN_TRIANGLE_AREA = 1e-12


def _he_index(t: int, k: int) -> int:
    return 3 * t + k


class CombSurface:
    """Combinatorics of a closed oriented triangulated surface.

    triangles: list of (v0, v1, v2) vertex ids per triangle.
    gluing: involution pairing half-edge linear indices; if omitted it is
    derived by matching each directed edge (u, w) with its reverse (w, u),
    which works whenever that matching is unambiguous.
    """

    def __init__(self, n_vertices: int, triangles, gluing: Optional[dict] = None):
        self.n_vertices = int(n_vertices)
        self.triangles = [tuple(int(v) for v in t) for t in triangles]
        if any(len(t) != 3 for t in self.triangles):
            raise InvalidSurface("triangles need exactly three corners")
        used = {v for t in self.triangles for v in t}
        if used and (min(used) < 0 or max(used) >= self.n_vertices):
            raise InvalidSurface("vertex id out of range")
        if used != set(range(self.n_vertices)):
            raise InvalidSurface("every vertex id must appear in some triangle")
        if gluing is None:
            gluing = self._derive_gluing()
        self.gluing = {int(a): int(b) for a, b in gluing.items()}
        self._validate_gluing()
        self._build_edges()
        self._check_connected()

    # -- construction helpers -------------------------------------------------

    def _derive_gluing(self) -> dict:
        directed = {}
        for t, tri in enumerate(self.triangles):
            for k in range(3):
                key = (tri[k], tri[(k + 1) % 3])
                directed.setdefault(key, []).append(_he_index(t, k))
        gluing = {}
        for (u, w), hes in directed.items():
            if len(hes) != 1:
                raise InvalidSurface(
                    f"directed edge {(u, w)} appears {len(hes)} times; "
                    "pass an explicit gluing")
            mates = directed.get((w, u), [])
            if len(mates) != 1:
                raise InvalidSurface(f"directed edge {(u, w)} has no unique mate")
            gluing[hes[0]] = mates[0]
        return gluing

    def _validate_gluing(self):
        n_he = 3 * len(self.triangles)
        if set(self.gluing) != set(range(n_he)):
            raise InvalidSurface("gluing must cover every half-edge")
        for a, b in self.gluing.items():
            if a == b or self.gluing[b] != a:
                raise InvalidSurface("gluing must be a fixed-point-free involution")
            ua, wa = self.halfedge_endpoints(a)
            ub, wb = self.halfedge_endpoints(b)
            if (ua, wa) != (wb, ub):
                raise InvalidSurface(
                    f"half-edges {a} and {b} glued without reversing orientation")

    def _build_edges(self):
        pairs = sorted({tuple(sorted((a, b))) for a, b in self.gluing.items()})
        self.edge_halfedges = pairs
        self.halfedge_edge = {}
        for e, (a, b) in enumerate(pairs):
            self.halfedge_edge[a] = e
            self.halfedge_edge[b] = e

    def _check_connected(self):
        if not self.triangles:
            raise InvalidSurface("empty surface")
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for k in range(3):
                t2 = self.gluing[_he_index(t, k)] // 3
                if t2 not in seen:
                    seen.add(t2)
                    stack.append(t2)
        if len(seen) != len(self.triangles):
            raise InvalidSurface("surface is not connected")

    # -- queries ---------------------------------------------------------------

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_halfedges)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @property
    def genus(self) -> int:
        chi = self.euler_characteristic
        if chi % 2 != 0 or chi > 2:
            raise InvalidSurface(f"Euler characteristic {chi} is not closed-orientable")
        return (2 - chi) // 2

    def halfedge_endpoints(self, h: int) -> tuple:
        t, k = divmod(h, 3)
        tri = self.triangles[t]
        return tri[k], tri[(k + 1) % 3]

    def mate(self, h: int) -> int:
        return self.gluing[h]

    def edge_endpoints(self, e: int) -> tuple:
        return self.halfedge_endpoints(self.edge_halfedges[e][0])

    def edge_of(self, t: int, k: int) -> int:
        return self.halfedge_edge[_he_index(t, k)]

    def triangle_edge_lengths(self, t: int, lengths: np.ndarray) -> np.ndarray:
        """Side lengths (a, b, c) opposite corners 0, 1, 2 of triangle t."""
        # side opposite corner k is the half-edge (t, k+1)
        return np.array([lengths[self.edge_of(t, (k + 1) % 3)] for k in range(3)])

    def vertex_corners(self, v: int) -> list:
        return [(t, k) for t, tri in enumerate(self.triangles)
                for k in range(3) if tri[k] == v]


def triangle_angles(a: float, b: float, c: float, geometry: str) -> np.ndarray:
    """Interior angles of a triangle with sides (a, b, c) opposite them."""
    from .minkowski import clamped

    if geometry == SPHERICAL:
        sa, sb, sc = np.sin([a, b, c])
        ca, cb, cc = np.cos([a, b, c])
        cos_a = clamped((ca - cb * cc) / (sb * sc), -1.0, 1.0, ANG_SLACK)
        cos_b = clamped((cb - cc * ca) / (sc * sa), -1.0, 1.0, ANG_SLACK)
        cos_c = clamped((cc - ca * cb) / (sa * sb), -1.0, 1.0, ANG_SLACK)
    elif geometry == HYPERBOLIC:
        sa, sb, sc = np.sinh([a, b, c])
        ca, cb, cc = np.cosh([a, b, c])
        cos_a = clamped((cb * cc - ca) / (sb * sc), -1.0, 1.0, ANG_SLACK)
        cos_b = clamped((cc * ca - cb) / (sc * sa), -1.0, 1.0, ANG_SLACK)
        cos_c = clamped((ca * cb - cc) / (sa * sb), -1.0, 1.0, ANG_SLACK)
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return np.arccos([cos_a, cos_b, cos_c])


class ConeMetric:
    """Per-edge lengths on a CombSurface, one spherical or hyperbolic triangle
    per face.

    deck_words optionally attaches a 4x4 holonomy matrix to each edge (same
    matrix convention for the smaller half-edge of the pair; the mate crosses
    with the inverse). It is used to decide which curve classes are
    contractible in an ambient 3-manifold; None means every class is.
    """

    def __init__(self, surface: CombSurface, geometry: str, lengths,
                 deck_words: Optional[dict] = None):
        if geometry not in (SPHERICAL, HYPERBOLIC):
            raise InvalidConeMetric(f"unknown geometry {geometry!r}")
        self.surface = surface
        self.geometry = geometry
        self.lengths = np.asarray(lengths, dtype=float).copy()
        if self.lengths.shape != (surface.n_edges,):
            raise InvalidConeMetric(
                f"need {surface.n_edges} edge lengths, got {self.lengths.shape}")
        self.deck_words = None
        if deck_words is not None:
            self.deck_words = {int(e): np.asarray(w, dtype=float)
                               for e, w in deck_words.items()}
        self._validate()
        self._compute_angles()

    def _validate(self):
        if not np.all(np.isfinite(self.lengths)) or np.any(self.lengths <= 0):
            raise InvalidConeMetric("edge lengths must be positive and finite")
        if self.geometry == SPHERICAL and np.any(self.lengths >= np.pi):
            raise InvalidConeMetric("spherical edge lengths must stay below pi")
        for t in range(self.surface.n_triangles):
            a, b, c = self.surface.triangle_edge_lengths(t, self.lengths)
            if a + b <= c or b + c <= a or c + a <= b:
                raise InvalidConeMetric(f"triangle {t} violates the triangle inequality")
            if self.geometry == SPHERICAL and a + b + c >= 2 * np.pi:
                raise InvalidConeMetric(f"triangle {t} has perimeter >= 2*pi")

    def _compute_angles(self):
        angles = np.empty((self.surface.n_triangles, 3))
        for t in range(self.surface.n_triangles):
            a, b, c = self.surface.triangle_edge_lengths(t, self.lengths)
            angles[t] = triangle_angles(a, b, c, self.geometry)
        self.corner_angles = angles
        excess = angles.sum(axis=1) - np.pi
        if np.any(np.abs(excess) < MIN_TRIANGLE_AREA):
            raise InvalidConeMetric("degenerate triangle (area below 1e-12)")
        if self.geometry == SPHERICAL and np.any(excess <= 0):
            raise InvalidConeMetric("spherical triangle with nonpositive excess")
        if self.geometry == HYPERBOLIC and np.any(excess >= 0):
            raise InvalidConeMetric("hyperbolic triangle with nonnegative defect")

    # -- intrinsic quantities --------------------------------------------------

    def cone_angle(self, v: int) -> float:
        """Total interior angle collected around vertex v."""
        return float(sum(self.corner_angles[t, k]
                         for t, k in self.surface.vertex_corners(v)))

    def cone_angles(self) -> np.ndarray:
        out = np.zeros(self.surface.n_vertices)
        for t, tri in enumerate(self.surface.triangles):
            for k in range(3):
                out[tri[k]] += self.corner_angles[t, k]
        return out

    def triangle_area(self, t: int) -> float:
        excess = float(self.corner_angles[t].sum() - np.pi)
        return excess if self.geometry == SPHERICAL else -excess

    def total_area(self) -> float:
        return float(sum(self.triangle_area(t)
                         for t in range(self.surface.n_triangles)))

    def edge_word(self, h: int) -> Optional[np.ndarray]:
        """Deck holonomy picked up when crossing half-edge h out of its triangle."""
        if self.deck_words is None:
            return None
        e = self.surface.halfedge_edge[h]
        w = self.deck_words.get(e)
        if w is None:
            return np.eye(4)
        a, _ = self.surface.edge_halfedges[e]
        return w if h == a else np.linalg.inv(w)


@dataclass(frozen=True)
class ConcavityReport:
    concave: bool
    margins: np.ndarray = field(repr=False)
    min_margin: float = 0.0


def is_concave(m: ConeMetric) -> ConcavityReport:
    """Check that every cone angle exceeds 2*pi, with per-vertex margins."""
    if m.geometry != SPHERICAL:
        raise InvalidConeMetric("concavity is defined for spherical cone-metrics")
    margins = m.cone_angles() - 2 * np.pi
    return ConcavityReport(concave=bool(np.all(margins > 0)),
                           margins=margins,
                           min_margin=float(margins.min()))


def gauss_bonnet_residual(m: ConeMetric) -> float:
    """Curvature integral plus vertex deficits minus 2*pi*chi; zero when consistent.

    The curvature integral of each triangle is its angle sum minus pi, which
    equals +area for spherical triangles and -area for hyperbolic ones.
    """
    curvature = float(m.corner_angles.sum() - np.pi * m.surface.n_triangles)
    deficit = float(np.sum(2 * np.pi - m.cone_angles()))
    return curvature + deficit - 2 * np.pi * m.surface.euler_characteristic


def scale(m: ConeMetric, lam: float) -> ConeMetric:
    """Multiply every edge length by exp(lam)."""
    new_lengths = np.exp(lam) * m.lengths
    if m.geometry == SPHERICAL and np.any(new_lengths >= np.pi):
        raise LengthOverflow(
            f"scaling by exp({lam}) pushes an edge length to "
            f"{new_lengths.max():.6f} >= pi")
    return ConeMetric(m.surface, m.geometry, new_lengths, deck_words=m.deck_words)


def distortion_bound(m1: ConeMetric, m2: ConeMetric) -> float:
    """Max over edges of |ln(l2/l1)|, bounding the identity map's distortion
    on the edge graph. Requires identical combinatorics."""
    if m1.surface is not m2.surface and (
            m1.surface.triangles != m2.surface.triangles
            or m1.surface.gluing != m2.surface.gluing):
        raise InvalidSurface("metrics live on different combinatorics")
    return float(np.max(np.abs(np.log(m2.lengths / m1.lengths))))


# -- canned builders ----------------------------------------------------------


def octahedron_sphere() -> ConeMetric:
    """The round sphere triangulated as a regular octahedron, all edges pi/2."""
    tris = [(0, 1, 2), (1, 3, 2), (3, 4, 2), (4, 0, 2),
            (1, 0, 5), (3, 1, 5), (4, 3, 5), (0, 4, 5)]
    surf = CombSurface(6, tris)
    return ConeMetric(surf, SPHERICAL, np.full(surf.n_edges, np.pi / 2))


def double_triangle(a: float, b: float, c: float, geometry: str) -> ConeMetric:
    """Double of a triangle across its boundary: two faces, three edges."""
    surf = CombSurface(3, [(0, 1, 2), (0, 2, 1)])
    lengths = np.empty(3)
    for e in range(3):
        u, w = surf.edge_endpoints(e)
        lengths[e] = {frozenset((1, 2)): a, frozenset((0, 2)): b,
                      frozenset((0, 1)): c}[frozenset((u, w))]
    return ConeMetric(surf, geometry, lengths)


# -- edge flip ----------------------------------------------------------------


def _develop_third_point(A, B, dist_a, dist_b, sign: float, geometry: str):
    """Place C with |AC| = dist_a, |BC| = dist_b, on the side of AB given by sign.

    Works in the 3-dim model space: unit sphere in R^3 for spherical metrics,
    upper hyperboloid in R^{2,1} (form diag(-1,1,1)) for hyperbolic ones.
    """
    if geometry == SPHERICAL:
        g = np.eye(3)
        cos_like = np.cos
        sign_q = 1.0
    else:
        g = np.diag([-1.0, 1.0, 1.0])
        cos_like = np.cosh
        sign_q = -1.0
    gram = np.array([[A @ g @ A, A @ g @ B], [B @ g @ A, B @ g @ B]])
    rhs = np.array([sign_q * cos_like(dist_a), sign_q * cos_like(dist_b)])
    xy = np.linalg.solve(gram, rhs)
    planar = xy[0] * A + xy[1] * B
    z2 = sign_q - planar @ g @ planar
    if z2 <= 0:
        raise FlipBlocked("development degenerates (points nearly collinear)")
    normal = g @ np.cross(A, B)  # orthogonal to span(A, B) in the form g
    normal = normal / np.sqrt(abs(normal @ g @ normal))
    return planar + sign * np.sqrt(z2) * normal


def _base_pair(length: float, geometry: str):
    if geometry == SPHERICAL:
        A = np.array([1.0, 0.0, 0.0])
        B = np.array([np.cos(length), np.sin(length), 0.0])
    else:
        A = np.array([1.0, 0.0, 0.0])
        B = np.array([np.cosh(length), np.sinh(length), 0.0])
    return A, B


def _model_distance(P, Q, geometry: str) -> float:
    if geometry == SPHERICAL:
        return float(np.arctan2(np.linalg.norm(np.cross(P, Q)), P @ Q))
    g = np.diag([-1.0, 1.0, 1.0])
    x = max(1.0, -(P @ g @ Q))
    return float(np.arccosh(x))


def _model_angle(P, Q, R, geometry: str) -> float:
    """Interior angle at P between geodesics toward Q and R."""
    if geometry == SPHERICAL:
        g = np.eye(3)
        tq = Q - (P @ g @ Q) * P
        tr = R - (P @ g @ R) * P
    else:
        g = np.diag([-1.0, 1.0, 1.0])
        tq = Q + (P @ g @ Q) * P  # note <P,P> = -1
        tr = R + (P @ g @ R) * P
    tq = tq / np.sqrt(tq @ g @ tq)
    tr = tr / np.sqrt(tr @ g @ tr)
    return float(np.arccos(np.clip(tq @ g @ tr, -1.0, 1.0)))


def flip_edge(m: ConeMetric, e: int) -> tuple:
    """Replace edge e by the opposite diagonal of its developed quadrilateral.

    Returns (new_metric, new_edge_index). Raises FlipBlocked when the
    quadrilateral is not convex at the shared edge's endpoints, or when the
    new diagonal would reach length pi in a spherical metric.
    """
    surf = m.surface
    h1, h2 = surf.edge_halfedges[e]
    t1, k1 = divmod(h1, 3)
    t2, k2 = divmod(h2, 3)
    if t1 == t2:
        raise FlipBlocked("edge bounds a single triangle on both sides")

    # local corner labels: t1 = (A, B, C) with h1 = A->B; t2 = (B, A, D) with
    # h2 = B->A (slots relative to k1, k2)
    tri1 = surf.triangles[t1]
    tri2 = surf.triangles[t2]
    A_id, B_id = tri1[k1], tri1[(k1 + 1) % 3]
    C_id = tri1[(k1 + 2) % 3]
    D_id = tri2[(k2 + 2) % 3]

    len_AB = m.lengths[e]
    len_BC = m.lengths[surf.edge_of(t1, (k1 + 1) % 3)]
    len_CA = m.lengths[surf.edge_of(t1, (k1 + 2) % 3)]
    len_AD = m.lengths[surf.edge_of(t2, (k2 + 1) % 3)]
    len_DB = m.lengths[surf.edge_of(t2, (k2 + 2) % 3)]

    A, B = _base_pair(len_AB, m.geometry)
    C = _develop_third_point(A, B, len_CA, len_BC, +1.0, m.geometry)
    D = _develop_third_point(A, B, len_AD, len_DB, -1.0, m.geometry)

    # convexity of the quadrilateral C-A-D-B at the old diagonal's endpoints
    ang_A = _model_angle(A, C, B, m.geometry) + _model_angle(A, B, D, m.geometry)
    ang_B = _model_angle(B, C, A, m.geometry) + _model_angle(B, A, D, m.geometry)
    if ang_A >= np.pi - 1e-10 or ang_B >= np.pi - 1e-10:
        raise FlipBlocked("developed quadrilateral is not convex at the diagonal")
    new_len = _model_distance(C, D, m.geometry)
    if m.geometry == SPHERICAL and new_len >= np.pi - 1e-12:
        raise FlipBlocked("new diagonal would reach length pi")
    if new_len <= 0:
        raise FlipBlocked("new diagonal degenerates")

    # rebuild combinatorics: t1 -> (A, D, C), t2 -> (D, B, C); both new
    # triangles keep developing in t1's chart, so the diagonal's word is I
    new_tris = list(surf.triangles)
    new_tris[t1] = (A_id, D_id, C_id)
    new_tris[t2] = (D_id, B_id, C_id)

    # boundary sides, old half-edge -> new half-edge carrying the same
    # geometric edge (True marks sides that belonged to t2's old chart)
    bmap = {
        _he_index(t2, (k2 + 1) % 3): _he_index(t1, 0),  # A->D
        _he_index(t1, (k1 + 2) % 3): _he_index(t1, 2),  # C->A
        _he_index(t2, (k2 + 2) % 3): _he_index(t2, 0),  # D->B
        _he_index(t1, (k1 + 1) % 3): _he_index(t2, 1),  # B->C
    }
    from_t2_chart = {_he_index(t1, 0), _he_index(t2, 0)}

    new_gluing = {}
    for h, mate in surf.gluing.items():
        if h // 3 in (t1, t2) or mate // 3 in (t1, t2):
            continue
        new_gluing[h] = mate
    for hb, hb_new in bmap.items():
        mate = surf.mate(hb)
        mate_new = bmap.get(mate, mate)
        new_gluing[hb_new] = mate_new
        new_gluing[mate_new] = hb_new
    new_gluing[_he_index(t1, 1)] = _he_index(t2, 2)  # D->C with C->D
    new_gluing[_he_index(t2, 2)] = _he_index(t1, 1)

    new_surf = CombSurface(surf.n_vertices, new_tris, new_gluing)

    inv_bmap = {new: old for old, new in bmap.items()}
    word_into_t2 = m.edge_word(h1)  # crossing from t1's chart into t2's

    def crossing_word(h_new: int):
        """Deck word for crossing out of half-edge h_new in the new complex."""
        h_old = inv_bmap.get(h_new, h_new)
        w = m.edge_word(h_old)
        if w is None:
            return None
        if h_new in from_t2_chart:
            w = word_into_t2 @ w
        mate_new = new_gluing[h_new]
        if mate_new in from_t2_chart:
            w = w @ np.linalg.inv(word_into_t2)
        return w

    new_lengths = np.empty(new_surf.n_edges)
    new_words = {} if m.deck_words is not None else None
    diag_edge = new_surf.halfedge_edge[_he_index(t1, 1)]
    for enew, (a, b) in enumerate(new_surf.edge_halfedges):
        if enew == diag_edge:
            new_lengths[enew] = new_len
            if new_words is not None:
                new_words[enew] = np.eye(4)
            continue
        h_old = inv_bmap.get(a, a)
        new_lengths[enew] = m.lengths[surf.halfedge_edge[h_old]]
        if new_words is not None:
            new_words[enew] = crossing_word(a)
    return (ConeMetric(new_surf, m.geometry, new_lengths, deck_words=new_words),
            diag_edge)
