"""
Design data, the symmetric vertex/face model of a sandglass and metric queries.

Vertex layout of a Mesh built by `build_vertices` (n = twist order):

    A_i -> i          top n-gon, z = +H
    B_i -> n + i      bottom n-gon, z = -H
    C_i -> 2n + i     upper waist ring, z = +h
    D_i -> 3n + i     lower waist ring, z = -h
    4n, 4n + 1        synthetic cap centers (0, 0, H) and (0, 0, -H)

Faces are oriented so that the canonical realization (H > 0) has outward
normals and positive volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MeshError

GEOM_TOL = 1e-12
RESIDUAL_TOL = 1e-9
INTERSECTION_EPS = 1e-8

EDGE_CLASSES = ("skeleton", "L1", "L2", "L3", "L4")


@dataclass(frozen=True)
class DesignSpec:
    """Intrinsic design: twist order n and squared belt edge lengths Q1..Q4.

    The skeleton edges have unit length. `origami=True` marks a spec whose Q3
    was produced by the developability condition and is checked on creation.
    """

    n: int
    Q1: float
    Q2: float
    Q3: float
    Q4: float
    origami: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"twist order n must be an integer >= 3, got {self.n}")
        for name in ("Q1", "Q2", "Q3", "Q4"):
            q = getattr(self, name)
            if not (math.isfinite(q) and q > 0):
                raise DomainError(f"{name} must be positive and finite, got {q}")
        if self.origami:
            if self.W <= 0:
                raise DomainError(f"origami spec needs Q1 > 1/4, got Q1={self.Q1}")
            q3 = self.Q1 + self.Q2 - math.sqrt(self.Q2 * self.W)
            if abs(q3 - self.Q3) > GEOM_TOL * max(1.0, abs(q3)):
                raise DomainError(f"Q3={self.Q3} violates the origami condition (expected {q3})")

    @classmethod
    def sandglass(cls, n, Q1, Q2, Q3, origami=False):
        return cls(int(n), float(Q1), float(Q2), float(Q3), float(Q1), origami)

    @property
    def c(self):
        return math.cos(math.pi / self.n)

    @property
    def s(self):
        return math.sin(math.pi / self.n)

    @property
    def R(self):
        return 1.0 / (2.0 * self.s)

    @property
    def W(self):
        return 4.0 * self.Q1 - 1.0

    @property
    def lengths(self):
        return tuple(math.sqrt(q) for q in (self.Q1, self.Q2, self.Q3, self.Q4))

    @property
    def is_sandglass(self):
        return self.Q1 == self.Q4

    def with_lengths(self, Q1, Q2, Q3):
        """Same n, new squared lengths (sandglass, origami flag dropped)."""
        return DesignSpec.sandglass(self.n, Q1, Q2, Q3)


@dataclass(frozen=True)
class Realization:
    """One symmetric embedding (H, h, r) of a DesignSpec."""

    H: float
    h: float
    r: float
    spec: DesignSpec = field(repr=False, compare=False)

    @property
    def coords(self):
        return np.array([self.H, self.h, self.r])

    def mirror(self):
        return Realization(-self.H, -self.h, self.r, self.spec)

    def canonical(self):
        if self.H < 0 or (self.H == 0 and self.h < 0):
            return self.mirror()
        return self

    @classmethod
    def from_coords(cls, x, spec):
        return cls(float(x[0]), float(x[1]), float(x[2]), spec)


@dataclass
class Mesh:
    n: int
    vertices: np.ndarray
    faces: np.ndarray
    edges: list = field(default_factory=list)  # (i, j, edge class)

    @property
    def n_belt_faces(self):
        return 6 * self.n

    def edge_lengths(self, label=None):
        out = []
        for i, j, cls in self.edges:
            if label is None or cls == label:
                out.append(np.linalg.norm(self.vertices[i] - self.vertices[j]))
        return np.array(out)


def vertex_index(n):
    """Index helpers A(i), B(i), C(i), D(i) (indices mod n) and the cap centers."""

    def A(i):
        return i % n

    def B(i):
        return n + i % n

    def C(i):
        return 2 * n + i % n

    def D(i):
        return 3 * n + i % n

    return A, B, C, D, 4 * n, 4 * n + 1


def _rot(t):
    ct, st = math.cos(t), math.sin(t)
    return np.array([[ct, -st, 0.0], [st, ct, 0.0], [0.0, 0.0, 1.0]])


def belt_faces(n):
    """Outward oriented belt triangles, 6 per unit cell, in cell order."""
    A, B, C, D, _, _ = vertex_index(n)
    faces = []
    for i in range(n):
        faces += [
            (B(i), C(i + 1), D(i)),
            (B(i), D(i + 1), C(i + 1)),
            (B(i), B(i + 1), D(i + 1)),
            (D(i), C(i + 1), A(i)),
            (A(i), C(i + 1), A(i + 1)),
            (C(i + 1), D(i + 1), A(i + 1)),
        ]
    return faces


def cap_faces(n):
    A, B, _, _, cA, cB = vertex_index(n)
    faces = []
    for i in range(n):
        faces += [(cA, A(i), A(i + 1)), (cB, B(i + 1), B(i))]
    return faces


def edge_list(n):
    A, B, C, D, cA, cB = vertex_index(n)
    edges = []
    for i in range(n):
        edges += [
            (A(i), A(i + 1), "skeleton"),
            (B(i), B(i + 1), "skeleton"),
            (B(i), D(i), "L1"),
            (A(i + 1), C(i + 1), "L1"),
            (B(i), C(i + 1), "L2"),
            (A(i), D(i), "L2"),
            (D(i), C(i + 1), "L3"),
            (C(i + 1), D(i + 1), "L3"),
            (B(i), D(i + 1), "L4"),
            (A(i), C(i + 1), "L4"),
            (cA, A(i), "cap"),
            (cB, B(i), "cap"),
        ]
    return edges


def ring_positions(n, H, h, r):
    """Arrays (n, 3) of A_i, B_i, C_i, D_i."""
    c, s = math.cos(math.pi / n), math.sin(math.pi / n)
    R = 1.0 / (2.0 * s)
    A = np.empty((n, 3))
    B = np.empty((n, 3))
    C = np.empty((n, 3))
    D = np.empty((n, 3))
    for i in range(n):
        rot = _rot(2.0 * math.pi * i / n)
        A[i] = rot @ (R, 0.0, H)
        B[i] = rot @ (R * c, R * s, -H)
        D[i] = rot @ (r, 0.0, -h)
        C[(i + 1) % n] = rot @ (r * c, r * s, h)
    return A, B, C, D


def build_vertices(spec: DesignSpec, real: Realization) -> Mesh:
    n = spec.n
    A, B, C, D = ring_positions(n, real.H, real.h, real.r)
    verts = np.vstack([A, B, C, D, [[0.0, 0.0, real.H], [0.0, 0.0, -real.H]]])
    faces = np.array(belt_faces(n) + cap_faces(n), dtype=int)
    return Mesh(n, verts, faces, edge_list(n))


def squared_edge_lengths(spec: DesignSpec, real) -> tuple:
    """(S1, S2, S3) = squared lengths of B0D0, B0C1, D0C1 for (H, h, r).

    `real` may be a Realization or an array (..., 3) of (H, h, r).
    """
    if isinstance(real, Realization):
        H, h, r = real.H, real.h, real.r
    else:
        x = np.asarray(real, dtype=float)
        H, h, r = x[..., 0], x[..., 1], x[..., 2]
    c, R = spec.c, spec.R
    S1 = R * R + r * r - 2.0 * R * r * c + (H - h) ** 2
    S2 = (R - r) ** 2 + (H + h) ** 2
    S3 = 2.0 * r * r * (1.0 - c) + 4.0 * h * h
    return S1, S2, S3


def constraint_residuals(spec: DesignSpec, real) -> np.ndarray:
    """q1, q2, q3: design squared lengths minus realized ones."""
    S = squared_edge_lengths(spec, real)
    return np.array([spec.Q1 - S[0], spec.Q2 - S[1], spec.Q3 - S[2]])


def face_normals(mesh: Mesh) -> np.ndarray:
    P = mesh.vertices[mesh.faces]
    return np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])


def face_areas(mesh: Mesh) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_normals(mesh), axis=1)


def _directed_edges(faces):
    out = {}
    for k, f in enumerate(faces):
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (int(a), int(b))
            if key in out:
                raise MeshError(f"directed edge {key} used twice: inconsistent orientation")
            out[key] = k
    return out


def check_closed(mesh: Mesh) -> dict:
    """Map each directed edge to its face; raise MeshError if not closed."""
    de = _directed_edges(mesh.faces)
    for a, b in de:
        if (b, a) not in de:
            raise MeshError(f"edge ({a}, {b}) has no opposite half-edge: mesh not closed")
    return de


def volume(mesh: Mesh) -> float:
    """Signed volume by the divergence theorem; positive for outward faces."""
    check_closed(mesh)
    P = mesh.vertices[mesh.faces]
    return float(np.sum(np.einsum("ij,ij->i", P[:, 0], np.cross(P[:, 1], P[:, 2]))) / 6.0)


def dihedral_angles(mesh: Mesh, reference="solid", require_closed=True) -> dict:
    """Inner dihedral angle in (0, 2pi) for every edge of a closed mesh.

    reference="solid" measures inside the enclosed solid (orientation fixed by
    the sign of the volume, so mirror images agree); reference="faces" takes
    the stored face order as outward regardless. Edges next to a zero-area
    face map to NaN. With require_closed=False (open sheets, "faces"
    reference only) boundary edges are skipped.
    """
    if require_closed:
        de = check_closed(mesh)
    elif reference != "faces":
        raise ValueError("an open mesh has no inside; use reference='faces'")
    else:
        de = _directed_edges(mesh.faces)
    V = mesh.vertices
    normals = face_normals(mesh)
    norms = np.linalg.norm(normals, axis=1)
    if reference == "solid":
        sign = 1.0 if volume(mesh) >= 0 else -1.0
    elif reference == "faces":
        sign = 1.0
    else:
        raise ValueError(f"unknown reference {reference!r}")
    scale = max(1.0, float(np.max(np.abs(V))))
    out = {}
    for (a, b), f1 in de.items():
        if a > b or (b, a) not in de:
            continue
        f2 = de[(b, a)]
        if norms[f1] < GEOM_TOL * scale**2 or norms[f2] < GEOM_TOL * scale**2:
            out[(a, b)] = float("nan")
            continue
        p1 = V[[v for v in mesh.faces[f1] if v != a and v != b][0]]
        p2 = V[[v for v in mesh.faces[f2] if v != a and v != b][0]]
        e = V[b] - V[a]
        e = e / np.linalg.norm(e)
        u1 = p1 - V[a]
        u1 = u1 - np.dot(u1, e) * e
        u2 = p2 - V[a]
        u2 = u2 - np.dot(u2, e) * e
        alpha = math.atan2(np.linalg.norm(np.cross(u1, u2)), np.dot(u1, u2))
        n1 = sign * normals[f1] / norms[f1]
        # p2 in front of the outward face plane -> reflex edge
        if np.dot(p2 - V[a], n1) > 0:
            alpha = 2.0 * math.pi - alpha
        out[(a, b)] = alpha
    return out


def classify_fold(angle, tol=1e-9):
    """mountain when the inner dihedral exceeds pi, valley below, flat at pi."""
    if abs(angle - math.pi) <= tol:
        return "flat"
    return "mountain" if angle > math.pi else "valley"


def dof_count(n: int) -> int:
    """Degrees of freedom 6(n + 1) - 8n of the unconstrained belt structure."""
    if n < 3:
        raise DomainError("n must be >= 3")
    return 6 * (n + 1) - 8 * n


# ---------------------------------------------------------------------------
# self-intersection


@dataclass(frozen=True)
class Contact:
    face_a: int
    face_b: int
    touching: bool  # boundary contact (coplanar overlap or grazing) vs penetration
    kind: str


def _clip_convex(poly, clip):
    """Sutherland-Hodgman clip of polygon `poly` by counter-clockwise convex `clip`."""
    out = list(poly)
    m = len(clip)
    for k in range(m):
        if not out:
            break
        a, b = clip[k], clip[(k + 1) % m]
        edge = b - a
        inp, out = out, []

        def inside(p):
            return edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0]) >= 0.0

        for i in range(len(inp)):
            cur, prev = inp[i], inp[i - 1]
            cin, pin = inside(cur), inside(prev)
            if cin:
                if not pin:
                    out.append(_seg_line(prev, cur, a, b))
                out.append(cur)
            elif pin:
                out.append(_seg_line(prev, cur, a, b))
    return out


def _seg_line(p, q, a, b):
    d = q - p
    e = b - a
    den = d[0] * e[1] - d[1] * e[0]
    if den == 0.0:
        return q
    t = ((a[0] - p[0]) * e[1] - (a[1] - p[1]) * e[0]) / den
    return p + t * d


def _poly_area(poly):
    if len(poly) < 3:
        return 0.0
    P = np.array(poly)
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _coplanar_overlap(T1, T2, normal):
    normal = normal / np.linalg.norm(normal)
    e1 = T2[1] - T2[0]
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    o = T2[0]

    def proj(T):
        P = [np.array([np.dot(p - o, e1), np.dot(p - o, e2)]) for p in T]
        if _poly_area(P) < 0:
            P = P[::-1]
        return P

    return abs(_poly_area(_clip_convex(proj(T1), proj(T2))))


def _plane_section(T, d, eps):
    """Points of triangle T on the plane with signed vertex distances d."""
    pts = [T[k] for k in range(3) if abs(d[k]) <= eps]
    for k in range(3):
        m = (k + 1) % 3
        if (d[k] > eps and d[m] < -eps) or (d[k] < -eps and d[m] > eps):
            t = d[k] / (d[k] - d[m])
            pts.append(T[k] + t * (T[m] - T[k]))
    return pts


def _pair_contact(T1, T2, n1, n2, d12, d21, shared, eps):
    """Classify triangles T1, T2; d12 = distances of T1's vertices to plane of T2."""
    coplanar = np.all(np.abs(d12) <= eps) and np.all(np.abs(d21) <= eps)
    if coplanar:
        area = _coplanar_overlap(T1, T2, n2)
        if area > eps:
            return "coplanar-overlap", True
        return None
    if len(shared) >= 2:
        return None
    s1 = _plane_section(T1, d12, eps)
    s2 = _plane_section(T2, d21, eps)
    if not s1 or not s2:
        return None
    direction = np.cross(n1, n2)
    t1 = [float(np.dot(p, direction)) for p in s1]
    t2 = [float(np.dot(p, direction)) for p in s2]
    scale = np.linalg.norm(direction)
    lo, hi = max(min(t1), min(t2)), min(max(t1), max(t2))
    overlap = (hi - lo) / scale
    if overlap < -eps:
        return None
    if shared and overlap <= eps:
        return None
    crossing1 = d12.max() > eps and d12.min() < -eps
    crossing2 = d21.max() > eps and d21.min() < -eps
    if crossing1 and crossing2 and overlap > eps:
        return "penetration", False
    return "grazing", True


def self_intersections(mesh: Mesh, eps: float = INTERSECTION_EPS, faces=None) -> list:
    """Contacts between face pairs of a triangle mesh.

    Pairs sharing an edge only count when they overlap in their common plane;
    pairs sharing one vertex only when they meet away from it. Each Contact
    carries `touching=True` for boundary contact (coplanar overlap, grazing)
    and False for a genuine penetration. `faces` optionally restricts the
    first member of every pair (e.g. one unit cell of a symmetric mesh).
    """
    V = mesh.vertices
    F = mesh.faces
    nf = len(F)
    N = face_normals(mesh)
    nn = np.linalg.norm(N, axis=1)
    good = nn > 0
    U = np.zeros_like(N)
    U[good] = N[good] / nn[good, None]
    # signed distance of every vertex to every face plane
    dist = U @ V.T - np.einsum("ij,ij->i", U, V[F[:, 0]])[:, None]
    first = range(nf) if faces is None else faces
    out = []
    seen = set()
    for i in first:
        for j in range(nf):
            if i == j or not (good[i] and good[j]):
                continue
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            d_ij = dist[j, F[i]]
            if d_ij.min() > eps or d_ij.max() < -eps:
                continue
            d_ji = dist[i, F[j]]
            if d_ji.min() > eps or d_ji.max() < -eps:
                continue
            shared = set(F[i].tolist()) & set(F[j].tolist())
            res = _pair_contact(V[F[i]], V[F[j]], U[i], U[j], d_ij, d_ji, shared, eps)
            if res is not None:
                out.append(Contact(key[0], key[1], res[1], res[0]))
    out.sort(key=lambda c: (c.face_a, c.face_b))
    return out


def is_intersection_free(contacts) -> bool:
    return not any(not c.touching for c in contacts)


def tetra_volume(p0, p1, p2, p3) -> float:
    return float(np.dot(p1 - p0, np.cross(p2 - p0, p3 - p0)) / 6.0)
