"""Linear algebra of Minkowski R^4 and the hyperboloid / de Sitter models.

Conventions used throughout the package:

* signature (-,+,+,+), with the bilinear form <x,y> = -x0*y0 + x1*y1 + x2*y2 + x3*y3;
* H^3 is the upper sheet of <x,x> = -1 (x0 > 0), dS^3 is the quadric <x,x> = +1;
* a point of dS^3 doubles as an oriented plane of H^3: the plane is its
  orthogonal complement, and the positive side of the plane is where <n,x> > 0.
  Face planes of convex bodies are oriented with the positive side OUTWARD.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainExceeded, NotSpacelikeSeparated, ZeroVector

J = np.diag([-1.0, 1.0, 1.0, 1.0])

NORM_TOL = 1e-12
ISO_TOL = 1e-10
CLAMP_SLACK = 1e-12


def _as_vec4(x) -> np.ndarray:
    v = x.v if isinstance(x, (HPoint, DSPoint)) else np.asarray(x, dtype=float)
    if v.shape != (4,):
        raise ValueError(f"expected a 4-vector, got shape {v.shape}")
    return v


def minkowski_inner(a, b) -> float:
    """Signature (-,+,+,+) scalar product of two 4-vectors."""
    u, w = _as_vec4(a), _as_vec4(b)
    return float(-u[0] * w[0] + u[1] * w[1] + u[2] * w[2] + u[3] * w[3])


def clamped(x: float, lo: float, hi: float, slack: float = CLAMP_SLACK) -> float:
    """Clamp x into [lo, hi], tolerating roundoff up to slack beyond the ends."""
    if x < lo - slack or x > hi + slack:
        raise DomainExceeded(f"value {x!r} outside [{lo}, {hi}] by more than {slack}")
    return min(max(x, lo), hi)


@dataclass(frozen=True, eq=False)
class HPoint:
    """Point of H^3 on the upper hyperboloid sheet."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "v", v)
        if v.shape != (4,) or not np.all(np.isfinite(v)):
            raise ValueError("HPoint needs 4 finite components")
        q = minkowski_inner(v, v)
        if abs(q + 1.0) > NORM_TOL:
            raise ValueError(f"<v,v> = {q}, not -1 within {NORM_TOL}")
        if v[0] <= 0:
            raise ValueError("not on the upper sheet (x0 <= 0)")

    @classmethod
    def from_vector(cls, v) -> "HPoint":
        """Normalize a timelike vector onto the upper sheet."""
        v = _as_vec4(v)
        q = minkowski_inner(v, v)
        if q >= 0:
            raise ValueError("vector is not timelike")
        w = v / np.sqrt(-q)
        if w[0] <= 0:
            raise ValueError("timelike vector points to the lower sheet")
        return cls(w)


@dataclass(frozen=True, eq=False)
class DSPoint:
    """Point of dS^3; equivalently an oriented geodesic plane of H^3."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "v", v)
        if v.shape != (4,) or not np.all(np.isfinite(v)):
            raise ValueError("DSPoint needs 4 finite components")
        q = minkowski_inner(v, v)
        if abs(q - 1.0) > NORM_TOL:
            raise ValueError(f"<v,v> = {q}, not +1 within {NORM_TOL}")

    @classmethod
    def from_vector(cls, v) -> "DSPoint":
        """Normalize a spacelike vector onto the de Sitter quadric."""
        v = _as_vec4(v)
        q = minkowski_inner(v, v)
        if q <= 0:
            raise ValueError("vector is not spacelike")
        return cls(v / np.sqrt(q))


def h_distance(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance between two points of H^3.

    Uses the chord form 2*asinh(|p-q|_M / 2), which is exact on the
    hyperboloid and stable for nearby points.
    """
    d = _as_vec4(p) - _as_vec4(q)
    c2 = minkowski_inner(d, d)
    if c2 < -CLAMP_SLACK:
        raise DomainExceeded(f"chord norm {c2} negative beyond slack")
    return 2.0 * float(np.arcsinh(np.sqrt(max(c2, 0.0)) / 2.0))


def ds_distance(p: DSPoint, q: DSPoint) -> float:
    """Spacelike de Sitter distance in (0, pi).

    Raises NotSpacelikeSeparated when the connecting geodesic is not
    spacelike of length below pi, which signals a degenerate polyhedron.
    """
    u, w = _as_vec4(p), _as_vec4(q)
    dm = u - w
    dp = u + w
    c2m = minkowski_inner(dm, dm)  # = 2 - 2<p,q>
    c2p = minkowski_inner(dp, dp)  # = 2 + 2<p,q>
    if c2m <= 0 or c2p <= 0:
        raise NotSpacelikeSeparated(
            f"<p,q> = {minkowski_inner(u, w)} outside (-1, 1)")
    return 2.0 * float(np.arcsin(min(np.sqrt(c2m) / 2.0, 1.0)))


def mixed_triangle_b(a: float, c: float) -> float:
    """Spacelike side b of a Lorentzian right triangle, cos b = cos c * cosh a.

    Leg a is the timelike leg treated as a signed real (the formula is even
    in a), leg c is spacelike with c in (0, pi) and meets a at a right angle.
    """
    if not 0.0 < c < np.pi:
        raise DomainExceeded(f"spacelike leg c = {c} outside (0, pi)")
    x = np.cos(c) * np.cosh(a)
    if not -1.0 < x < 1.0:
        raise DomainExceeded(f"cos(c)*cosh(a) = {x} outside (-1, 1)")
    return float(np.arccos(x))


def side_of(n: DSPoint, x) -> float:
    """Signed side of the plane with normal n: positive, zero, or negative."""
    return minkowski_inner(n, x)


def plane_basis_points(n: DSPoint, offsets=((0.0, 0.0), (0.7, 0.0), (0.0, 0.7))) -> list:
    """Sample HPoints on the plane orthogonal to n.

    The default offsets give three points in general position on the plane.
    """
    nv = _as_vec4(n)
    # Euclidean-orthonormal basis of the Minkowski-orthogonal complement of n
    basis = _complement_basis(nv)
    # the complement has signature (-,+,+); find its timelike combination
    gram = basis.T @ J @ basis
    w, vecs = np.linalg.eigh(gram)
    t = basis @ vecs[:, 0]  # most negative eigenvalue -> timelike
    t = t / np.sqrt(-minkowski_inner(t, t))
    if t[0] < 0:
        t = -t
    spacelike = [basis @ vecs[:, k] for k in (1, 2)]
    s1 = spacelike[0] / np.sqrt(minkowski_inner(spacelike[0], spacelike[0]))
    s2 = spacelike[1] / np.sqrt(minkowski_inner(spacelike[1], spacelike[1]))
    pts = []
    for (r1, r2) in offsets:
        v = t
        if r1 != 0.0:
            v = np.cosh(r1) * v + np.sinh(r1) * s1
        if r2 != 0.0:
            v = np.cosh(r2) * v + np.sinh(r2) * s2
        pts.append(HPoint.from_vector(v))
    return pts


def _complement_basis(nv: np.ndarray) -> np.ndarray:
    """4x3 Euclidean-orthonormal basis of {u : <nv,u>_M = 0}."""
    row = (J @ nv)[None, :]
    _, _, vt = np.linalg.svd(row)
    return vt[1:].T


def plane_through(p: HPoint, q: HPoint, r: HPoint,
                  positive_side_hint=None) -> DSPoint:
    """Oriented plane through three points of H^3.

    The normal is the Minkowski dual of the span; if a hint point is given
    the orientation is chosen so the hint lies on the positive side.
    """
    m = np.stack([_as_vec4(p), _as_vec4(q), _as_vec4(r)])
    ne = np.array([(-1.0) ** i * np.linalg.det(np.delete(m, i, axis=1))
                   for i in range(4)])
    n = J @ ne
    qn = minkowski_inner(n, n)
    if qn <= 0:
        raise ValueError("points do not span a plane meeting H^3")
    out = DSPoint(n / np.sqrt(qn))
    if positive_side_hint is not None and side_of(out, positive_side_hint) < 0:
        out = DSPoint(-out.v)
    return out


def spherical_project(v) -> np.ndarray:
    """Central projection of a nonzero 4-vector onto the unit sphere S^3."""
    w = _as_vec4(v)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ZeroVector("cannot project the zero vector")
    return w / norm


class IsometryKind(Enum):
    identity = "identity"
    elliptic = "elliptic"
    parabolic = "parabolic"
    loxodromic = "loxodromic"


@dataclass(frozen=True)
class IsometryClass:
    kind: IsometryKind
    rotation_angle: Optional[float] = None
    translation_length: Optional[float] = None


class Isometry:
    """Orientation- and time-orientation-preserving isometry of H^3 and dS^3."""

    __slots__ = ("m",)

    def __init__(self, m):
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError("isometry needs a 4x4 matrix")
        if np.max(np.abs(m.T @ J @ m - J)) > ISO_TOL:
            raise ValueError("matrix does not preserve the Minkowski form")
        if abs(np.linalg.det(m) - 1.0) > ISO_TOL:
            raise ValueError("matrix does not have determinant +1")
        if m[0, 0] <= 0:
            raise ValueError("matrix swaps the hyperboloid sheets")
        self.m = m

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.m @ other.m)

    def inverse(self) -> "Isometry":
        return Isometry(J @ self.m.T @ J)

    def apply(self, p):
        """Apply to an HPoint or DSPoint, renormalizing to control drift."""
        if isinstance(p, HPoint):
            return HPoint.from_vector(self.m @ p.v)
        if isinstance(p, DSPoint):
            return DSPoint.from_vector(self.m @ p.v)
        return self.m @ _as_vec4(p)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(4))

    @classmethod
    def rotation(cls, i: int, j: int, phi: float) -> "Isometry":
        """Rotation by phi in the spatial coordinate plane (i, j), i,j in {1,2,3}."""
        if not (1 <= i <= 3 and 1 <= j <= 3 and i != j):
            raise ValueError("rotation plane must use two distinct spatial axes")
        m = np.eye(4)
        m[i, i] = m[j, j] = np.cos(phi)
        m[i, j] = -np.sin(phi)
        m[j, i] = np.sin(phi)
        return cls(m)

    @classmethod
    def boost(cls, i: int, t: float) -> "Isometry":
        """Translation by length t along the coordinate geodesic through axis i."""
        if not 1 <= i <= 3:
            raise ValueError("boost axis must be spatial")
        m = np.eye(4)
        m[0, 0] = m[i, i] = np.cosh(t)
        m[0, i] = m[i, 0] = np.sinh(t)
        return cls(m)


def reflection_matrix(n: DSPoint) -> np.ndarray:
    """Reflection in the plane with unit normal n (determinant -1, not an Isometry)."""
    nv = _as_vec4(n)
    return np.eye(4) - 2.0 * np.outer(nv, J @ nv)


def classify_isometry(g: Isometry) -> IsometryClass:
    """Classify an isometry and extract its rotation angle / translation length.

    Elliptic elements report the geometric rotation angle in (0, pi];
    loxodromic ones also report the translation length along the axis.
    Eigenvalue magnitudes alone cannot separate parabolics (whose defective
    unit eigenvalue splits by roundoff to the third root of machine epsilon),
    so parabolicity is read off the vanishing of (m - I)^3 instead; the
    thresholds assume desk-scale inputs away from the classification walls.
    """
    m = g.m
    if np.max(np.abs(m - np.eye(4))) < ISO_TOL:
        return IsometryClass(IsometryKind.identity)
    tr = float(np.trace(m))
    # elliptic: the fixed subspace contains a timelike vector
    _, s, vt = np.linalg.svd(m - np.eye(4))
    null = vt[s < 1e-8].T if np.any(s < 1e-8) else np.zeros((4, 0))
    if null.shape[1] > 0:
        gram = null.T @ J @ null
        if np.min(np.linalg.eigvalsh(gram)) < -1e-10:
            cos_phi = clamped((tr - 2.0) / 2.0, -1.0, 1.0, slack=1e-9)
            return IsometryClass(IsometryKind.elliptic,
                                 rotation_angle=float(np.arccos(cos_phi)))
    n = m - np.eye(4)
    if np.max(np.abs(n @ n @ n)) < 1e-6 * (1.0 + np.max(np.abs(m))) ** 3:
        return IsometryClass(IsometryKind.parabolic)
    lam = float(np.max(np.abs(np.linalg.eigvals(m))))
    t = float(np.log(lam))
    cos_phi = clamped((tr - 2.0 * np.cosh(t)) / 2.0, -1.0, 1.0, slack=1e-9)
    return IsometryClass(IsometryKind.loxodromic,
                         rotation_angle=float(np.arccos(cos_phi)),
                         translation_length=t)
