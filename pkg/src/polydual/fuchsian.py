"""Genus-2 surface group from the regular octagon, acting on a plane in H^3,
and the dual cone-metric of the equivariant hull of one apex orbit.

The group is generated by the eight translations pairing opposite sides of
the regular octagon with vertex angle pi/4 centered at the origin of the
invariant plane x3 = 0. The hull of the orbit of a point at height h above
that plane is an equivariant polyhedral dome; its quotient carries a genus-2
polyhedral structure whose dual metric this module assembles explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InvalidPolyhedron, OrbitBoundTooSmall
from .minkowski import (
    DSPoint,
    HPoint,
    Isometry,
    J,
    clamped,
    minkowski_inner,
)
from .surface import SPHERICAL, HYPERBOLIC, CombSurface, ConeMetric
from .polyhedra import SphericalPolygon

OCTAGON_HALF_WIDTH = float(np.arccosh(1.0 / np.tan(np.pi / 8)))
OCTAGON_CIRCUMRADIUS = float(np.arccosh(1.0 / np.tan(np.pi / 8) ** 2))
TRANSLATION_LENGTH = 2.0 * OCTAGON_HALF_WIDTH


@dataclass
class FuchsianData:
    """Octagon surface group embedded as plane-preserving isometries of H^3."""

    generators: list                 # eight translations, [k+4] inverse to [k]
    invariant_plane: DSPoint
    relation: list                   # generator indices multiplying to identity
    word_bound: int = 3

    def relation_residual(self) -> float:
        prod = np.eye(4)
        for k in self.relation:
            prod = prod @ self.generators[k].m
        return float(np.max(np.abs(prod - np.eye(4))))


def _octagon_vertices_h2():
    R = OCTAGON_CIRCUMRADIUS
    pts = []
    for k in range(8):
        a = (2 * k + 1) * np.pi / 8
        pts.append(np.array([np.cosh(R), np.sinh(R) * np.cos(a),
                             np.sinh(R) * np.sin(a), 0.0]))
    return pts


def fuchsian_octagon_group() -> FuchsianData:
    """The genus-2 group of the regular octagon with opposite sides identified.

    Translation k runs along the direction k*pi/4 in the invariant plane with
    length 2*arccosh(1 + sqrt(2)); the defining relation is recovered by
    walking the corner cycle of the octagon and verified numerically.
    """
    gens = [Isometry.rotation(1, 2, k * np.pi / 4)
            @ Isometry.boost(1, TRANSLATION_LENGTH)
            @ Isometry.rotation(1, 2, -k * np.pi / 4) for k in range(8)]
    verts = _octagon_vertices_h2()

    # the corner cycle: repeatedly follow the pairing of one adjacent side;
    # side k joins verts[k-1], verts[k], and generator k maps side k+4 onto it
    relation = []
    prod = np.eye(4)
    v, s = 0, 0
    for _ in range(8):
        ginv = gens[(s + 4) % 8].m
        img = ginv @ verts[v]
        vnew = int(np.argmin([np.max(np.abs(img - w)) for w in verts]))
        relation.append((s + 4) % 8)
        prod = prod @ ginv
        arrived = (s + 4) % 8
        s = vnew if arrived == (vnew + 1) % 8 else (vnew + 1) % 8
        v = vnew
    data = FuchsianData(generators=gens,
                        invariant_plane=DSPoint(np.array([0.0, 0, 0, 1.0])),
                        relation=relation)
    if data.relation_residual() > 1e-8:
        raise InvalidPolyhedron("octagon relation failed to close")
    return data


def genus2_octagon_metric() -> ConeMetric:
    """Hyperbolic cone-metric of the closed genus-2 surface, as the fan of the
    regular octagon with opposite sides identified (one vertex, nine edges)."""
    data = fuchsian_octagon_group()
    verts = [HPoint(v) for v in _octagon_vertices_h2()]
    tris = [(0, 0, 0)] * 6
    # fan triangles (c0, cj, cj+1); boundary side j=(cj, cj+1) sits at:
    # j=0 -> tri 0 slot 0; j=7 -> tri 5 slot 2; else tri j-1 slot 1
    def side_he(j):
        if j == 0:
            return 0
        if j == 7:
            return 3 * 5 + 2
        return 3 * (j - 1) + 1

    gluing = {}
    for j in range(1, 6):  # fan diagonals between consecutive triangles
        gluing[3 * (j - 1) + 2] = 3 * j
        gluing[3 * j] = 3 * (j - 1) + 2
    for j in range(4):
        a, b = side_he(j), side_he(j + 4)
        gluing[a] = b
        gluing[b] = a
    surf = CombSurface(1, tris, gluing)

    from .minkowski import h_distance

    lengths = np.empty(surf.n_edges)
    words = {}
    for e, (ha, _) in enumerate(surf.edge_halfedges):
        t, k = divmod(ha, 3)
        j = None
        for cand in range(8):
            if side_he(cand) == ha:
                j = cand
                break
        if j is None:
            # fan diagonal (0, cj): triangle t has corners (0, t+1, t+2)
            lengths[e] = h_distance(verts[0], verts[t + 2])
            words[e] = np.eye(4)
        else:
            lengths[e] = h_distance(verts[j], verts[(j + 1) % 8])
            words[e] = data.generators[(j + 1) % 8].m
    return ConeMetric(surf, HYPERBOLIC, lengths, deck_words=words)


# -- the apex-orbit hull and its dual metric ------------------------------------


def _orbit(data: FuchsianData, h: float, word_bound: int):
    """Orbit of the apex at height h, deduplicated by matrix, identity first."""
    apex = np.array([np.cosh(h), 0.0, 0.0, np.sinh(h)])
    seen = {tuple(np.round(np.eye(4).ravel(), 9))}
    mats = [np.eye(4)]
    frontier = [np.eye(4)]
    for _ in range(word_bound):
        nxt = []
        for m in frontier:
            for g in data.generators:
                cand = m @ g.m
                key = tuple(np.round(cand.ravel(), 9))
                if key not in seen:
                    seen.add(key)
                    mats.append(cand)
                    nxt.append(cand)
        frontier = nxt
    points = np.array([m @ apex for m in mats])
    return mats, points


def _plane_through_points(rows: np.ndarray) -> np.ndarray:
    """Best-fit Minkowski plane normal through the given points (spacelike)."""
    scaled = rows / np.linalg.norm(rows, axis=1)[:, None]
    _, _, vt = np.linalg.svd(scaled @ J)
    n = vt[-1]
    q = float(n @ J @ n)
    if q <= 0:
        raise InvalidPolyhedron("support plane through apex is not spacelike")
    return n / np.sqrt(q)


def _members_on_plane(points: np.ndarray, n: np.ndarray) -> tuple:
    resid = np.abs(points @ J @ n)
    scale = np.linalg.norm(points, axis=1)
    return tuple(int(i) for i in np.where(resid <= 1e-9 * scale)[0])


@dataclass
class ApexStar:
    faces: list          # per face: dict(normal, members, cycle)
    order: list          # cyclic order of faces around the apex
    neighbors: list      # orbit index of the edge endpoint between consecutive faces
    side_lengths: np.ndarray
    angles: np.ndarray


def _corner_angle(at: np.ndarray, pred: np.ndarray, succ: np.ndarray) -> float:
    def tangent(q):
        t = q + minkowski_inner(at, q) * at
        return t / np.sqrt(minkowski_inner(t, t))

    t1, t2 = tangent(pred), tangent(succ)
    return float(np.arccos(clamped(minkowski_inner(t1, t2), -1.0, 1.0, 1e-9)))


def _face_cycle(points, members, normal):
    """Member cycle of a hull face, ccw about the outward Klein normal."""
    klein = points[list(members)][:, 1:] / points[list(members)][:, [0]]
    n_sp = normal[1:]
    e1 = np.zeros(3)
    e1[np.argmin(np.abs(n_sp))] = 1.0
    e1 = np.cross(n_sp, e1)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n_sp, e1)
    e2 /= np.linalg.norm(e2)
    if np.linalg.det(np.stack([e1, e2, n_sp / np.linalg.norm(n_sp)])) < 0:
        e2 = -e2
    center = klein.mean(axis=0)
    ang = np.arctan2((klein - center) @ e2, (klein - center) @ e1)
    order = np.argsort(ang)
    return [members[i] for i in order]


def _apex_star(data: FuchsianData, points: np.ndarray) -> ApexStar:
    klein = points[:, 1:] / points[:, [0]]
    hull = ConvexHull(klein)
    if 0 not in set(int(v) for v in hull.vertices):
        raise InvalidPolyhedron("apex is not extreme in the sampled orbit")
    groups = {}
    for simplex in hull.simplices:
        if 0 not in simplex:
            continue
        n = _plane_through_points(points[simplex])
        members = _members_on_plane(points, n)
        n = _plane_through_points(points[list(members)])
        members = _members_on_plane(points, n)
        groups[members] = n
    faces = []
    for members, n in sorted(groups.items()):
        # orient outward: the rest of the orbit lies strictly on the negative side
        vals = points @ J @ n
        off = [v for i, v in enumerate(vals) if i not in members]
        if np.max(off) > 0:
            if np.min(off) < 0:
                raise InvalidPolyhedron("apex face plane does not support the orbit")
            n = -n
        cycle = _face_cycle(points, list(members), n)
        faces.append({"normal": n, "members": members, "cycle": cycle})

    # cyclic order around the apex: follow, inside each face cycle, the
    # successor of the apex; the next face shares that edge
    by_edge = {}
    for idx, f in enumerate(faces):
        cyc = f["cycle"]
        i0 = cyc.index(0)
        succ, pred = cyc[(i0 + 1) % len(cyc)], cyc[i0 - 1]
        by_edge.setdefault(frozenset((0, succ)), []).append(idx)
        by_edge.setdefault(frozenset((0, pred)), []).append(idx)
    order = [0]
    neighbors = []
    cur = 0
    for _ in range(len(faces)):
        cyc = faces[cur]["cycle"]
        succ = cyc[(cyc.index(0) + 1) % len(cyc)]
        neighbors.append(succ)
        pair = by_edge[frozenset((0, succ))]
        if len(pair) != 2:
            raise InvalidPolyhedron("apex edge not shared by exactly two faces")
        cur = pair[0] if pair[1] == cur else pair[1]
        if cur == 0 and len(order) < len(faces):
            raise InvalidPolyhedron("apex face fan closed early")
        if len(order) < len(faces):
            order.append(cur)
    if cur != 0:
        raise InvalidPolyhedron("apex face fan did not close")
    sides = []
    angles = []
    for i, idx in enumerate(order):
        cyc = faces[idx]["cycle"]
        i0 = cyc.index(0)
        sides.append(_corner_angle(points[0], points[cyc[i0 - 1]],
                                   points[cyc[(i0 + 1) % len(cyc)]]))
        n1 = faces[idx]["normal"]
        n2 = faces[order[(i + 1) % len(order)]]["normal"]
        x = clamped(float(n1 @ J @ n2), -1.0, 1.0, 1e-9)
        angles.append(np.pi - float(np.arccos(x)))
    return ApexStar(faces=faces, order=order, neighbors=neighbors,
                    side_lengths=np.array(sides), angles=np.array(angles))


def _star_signature(star: ApexStar, points, mats):
    sig = []
    for i, idx in enumerate(star.order):
        sig.append((tuple(np.round(star.faces[idx]["normal"], 8)),
                    tuple(np.round(points[star.neighbors[i]], 8))))
    return sorted(sig)


@dataclass
class FuchsianDualOutput:
    metric: ConeMetric
    marking: list                  # dual vertex -> representative apex face index
    core_distance: float
    word_bound: int
    apex_side_lengths: np.ndarray = field(repr=False)
    apex_angles: np.ndarray = field(repr=False)
    face_areas: list = field(repr=False, default_factory=list)


def fuchsian_dualize(data: FuchsianData, h: float,
                     word_bound: Optional[int] = None) -> FuchsianDualOutput:
    """Dual spherical cone-metric of the equivariant hull of one apex orbit.

    The apex at height h above the invariant plane has a single vertex orbit;
    the polar dual of its link, glued to itself along the side pairing induced
    by the group, is the genus-2 dual metric. The link must be stable between
    the used word bound and the next one, else OrbitBoundTooSmall.
    """
    if h <= 0:
        raise InvalidPolyhedron("apex height must be positive")
    explicit = word_bound is not None
    bounds = [word_bound] if explicit else [2, 3, 4, 5]
    star = points = mats = None
    used = None
    for W in bounds:
        mats, points = _orbit(data, h, W)
        star = _apex_star(data, points)
        mats2, points2 = _orbit(data, h, W + 1)
        star2 = _apex_star(data, points2)
        if _star_signature(star, points, mats) == _star_signature(star2, points2, mats2):
            used = W
            break
        if explicit:
            raise OrbitBoundTooSmall(
                f"apex link changed between word bounds {W} and {W + 1}")
    if used is None:
        raise OrbitBoundTooSmall("apex link did not stabilize by word bound 5")

    m = len(star.order)
    # gamma_i carries the apex to the far endpoint of edge i
    gammas = [mats[star.neighbors[i]] for i in range(m)]

    def match_gamma(target):
        for j in range(m):
            if np.max(np.abs(gammas[j] - target)) < 1e-8:
                return j
        raise InvalidPolyhedron("side pairing leaves the apex star")

    sigma = [match_gamma(np.linalg.inv(g)) for g in gammas]

    # corner identification: side i glued to side sigma(i) reversing direction
    normals = [star.faces[idx]["normal"] for idx in star.order]
    for i in range(m):
        ginv = np.linalg.inv(gammas[i])
        mapped = ginv @ normals[i]
        j = sigma[i]
        if np.max(np.abs(mapped - normals[(j + 1) % m])) > 1e-7:
            raise InvalidPolyhedron(
                "side pairing does not reverse the polygon orientation")

    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for i in range(m):
        union(i, (sigma[i] + 1) % m)
        union((i + 1) % m, sigma[i])
    classes = sorted({find(i) for i in range(m)})
    class_of = {i: classes.index(find(i)) for i in range(m)}
    n_vertices = len(classes)

    poly = SphericalPolygon(sides=np.pi - star.angles,
                            angles=np.pi - star.side_lengths)
    corners, resid = poly.develop()
    if resid > 1e-8:
        raise InvalidPolyhedron(
            f"dual polygon fails to close (residual {resid:.2e})")

    def side_he(j):
        if j == 0:
            return 0
        if j == m - 1:
            return 3 * (m - 3) + 2
        return 3 * (j - 1) + 1

    tris = [(class_of[0], class_of[j], class_of[j + 1]) for j in range(1, m - 1)]
    gluing = {}
    for j in range(1, m - 2):
        gluing[3 * (j - 1) + 2] = 3 * j
        gluing[3 * j] = 3 * (j - 1) + 2
    for i in range(m):
        a, b = side_he(i), side_he(sigma[i])
        gluing[a] = b
        gluing[b] = a
    surf = CombSurface(n_vertices, tris, gluing)

    lengths = np.empty(surf.n_edges)
    words = {}
    for e, (ha, _) in enumerate(surf.edge_halfedges):
        j = next((cand for cand in range(m) if side_he(cand) == ha), None)
        if j is None:
            t = ha // 3
            lengths[e] = _sphere_angle(corners[0], corners[t + 2])
            words[e] = np.eye(4)
        else:
            lengths[e] = np.pi - star.angles[j]
            words[e] = gammas[j]
    metric = ConeMetric(surf, SPHERICAL, lengths, deck_words=words)

    core_distance = min(
        float(np.arccosh(abs(f["normal"][3])))
        for f in star.faces)

    apex = np.array([np.cosh(h), 0.0, 0.0, np.sinh(h)])
    marking = []
    face_areas = []
    for c in classes:
        idx = star.order[c]
        corners_m = _trace_face_polygon(gammas, star.faces[idx]["normal"], apex)
        pts = [mm @ apex for mm in corners_m]
        angs = [_corner_angle(pts[k], pts[k - 1], pts[(k + 1) % len(pts)])
                for k in range(len(pts))]
        face_areas.append((len(pts) - 2) * np.pi - float(sum(angs)))
        marking.append(idx)
    return FuchsianDualOutput(metric=metric, marking=marking,
                              core_distance=core_distance, word_bound=used,
                              apex_side_lengths=star.side_lengths,
                              apex_angles=star.angles,
                              face_areas=face_areas)


def _trace_face_polygon(gammas, normal, apex, max_corners: int = 64):
    """Corner matrices of one full hull face, walked along its boundary.

    Hull edges at any orbit point are the translates of the apex edges, so
    from each corner exactly two generator steps stay on the face plane: the
    previous corner and the next one.
    """
    def on_plane(x):
        return abs(float(x @ J @ normal)) <= 1e-8 * np.linalg.norm(x)

    starts = [g for g in gammas if on_plane(g @ apex)]
    if len(starts) != 2:
        raise InvalidPolyhedron(
            f"apex has {len(starts)} face-plane edges, expected 2")
    corners = [np.eye(4)]
    prev_pt = apex
    cur = starts[0]
    for _ in range(max_corners):
        cur_pt = cur @ apex
        if np.max(np.abs(cur_pt - apex)) < 1e-8 * np.linalg.norm(apex):
            return corners
        corners.append(cur)
        nxt = None
        for g in gammas:
            cand = cur @ g
            x = cand @ apex
            if on_plane(x) and \
                    np.max(np.abs(x - prev_pt)) > 1e-6 * np.linalg.norm(prev_pt):
                nxt = cand
        if nxt is None:
            raise InvalidPolyhedron("face boundary walk lost the plane")
        prev_pt = cur_pt
        cur = nxt
    raise InvalidPolyhedron("face boundary walk failed to close")


def _sphere_angle(u, w):
    return float(np.arctan2(np.linalg.norm(np.cross(u, w)), float(u @ w)))
