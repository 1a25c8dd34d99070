"""Planar development of the belt, developability conditions and crease patterns."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr

import numpy as np

from .errors import DegenerateError, DomainError, OverlapError
from .geometry import (
    DesignSpec,
    Realization,
    build_vertices,
    classify_fold,
    dihedral_angles,
    squared_edge_lengths,
    vertex_index,
)


def origami_Q3(Q1: float, Q2: float) -> float:
    """Q3 that makes a sandglass belt (Q1 = Q4) developable."""
    W = 4.0 * Q1 - 1.0
    if not W > 0:
        raise DomainError(f"origami condition needs Q1 > 1/4, got {Q1}")
    if not Q2 > 0:
        raise DomainError(f"Q2 must be positive, got {Q2}")
    Q3 = Q1 + Q2 - math.sqrt(Q2 * W)
    if Q3 <= 0:
        raise DegenerateError(f"origami Q3 = {Q3} is not positive")
    return Q3


def origami_spec(n: int, Q1: float, Q2: float) -> DesignSpec:
    return DesignSpec.sandglass(n, Q1, Q2, origami_Q3(Q1, Q2), origami=True)


def _strip_params(Q1, Q2, Q4):
    bb = 2 * Q1 + 2 * Q4 - 1 - (Q1 - Q4) ** 2
    ff = 4 * Q2 - (Q1 - Q4) ** 2
    if bb <= 0 or ff <= 0:
        raise OverlapError("development would overlap (b or f not positive)")
    return (Q4 - Q1 - 1) / 2.0, 0.5 * math.sqrt(bb), 0.5 * math.sqrt(ff)


def general_origami_residual(Q1, Q2, Q3, Q4) -> float:
    """Q3 minus the squared development distance D0*C1*; zero iff developable."""
    _, b, f = _strip_params(Q1, Q2, Q4)
    return Q3 - (0.25 + (f - b) ** 2)


@dataclass(frozen=True)
class Crease:
    p: tuple
    q: tuple
    label: str  # edge class L1..L4 or skeleton
    edge: tuple  # (i, j) vertex indices in the 3D mesh


@dataclass
class Development:
    n: int
    a: float
    b: float
    f: float
    c_star: float
    d: float
    e: float
    B: np.ndarray  # (n + 1, 2): B_i* for i = 0..n
    D: np.ndarray
    C: np.ndarray  # row i holds C_{i+1}*
    A: np.ndarray
    creases: list = field(default_factory=list)
    boundary: list = field(default_factory=list)

    def cell_triangles(self, k=0):
        """The six belt triangles of cell k in strip coordinates, in mesh face order."""
        B, C, D, A = self.B, self.C, self.D, self.A
        return [
            (B[k], C[k], D[k]),
            (B[k], D[k + 1], C[k]),
            (B[k], B[k + 1], D[k + 1]),
            (D[k], C[k], A[k]),
            (A[k], C[k], A[k + 1]),
            (C[k], D[k + 1], A[k + 1]),
        ]

    def signed_areas(self, k=0) -> np.ndarray:
        out = []
        for p, q, t in self.cell_triangles(k):
            u, v = q - p, t - p
            out.append(0.5 * (u[0] * v[1] - u[1] * v[0]))
        return np.array(out)

    @property
    def embedded(self) -> bool:
        """True when no triangle of the strip is flipped (the strip does not fold over)."""
        a = self.signed_areas()
        return bool(np.all(a > 0) or np.all(a < 0))


def develop(spec: DesignSpec) -> Development:
    """Unroll the belt into a strip of period 1 along the x-axis."""
    a, b, f = _strip_params(spec.Q1, spec.Q2, spec.Q4)
    c_star = a + 0.5
    e = -c_star
    n = spec.n
    i = np.arange(n + 1, dtype=float)
    B = np.stack([i, np.zeros_like(i)], -1)
    D = np.stack([a + i, np.full_like(i, b)], -1)
    C = np.stack([c_star + i, np.full_like(i, f)], -1)
    A = np.stack([a + e + i, np.full_like(i, b + f)], -1)
    dev = Development(n, a, b, f, c_star, f, e, B, D, C, A)

    Ai, Bi, Ci, Di, _, _ = vertex_index(n)
    pos = {}
    for k in range(n + 1):
        pos[("A", k)], pos[("B", k)], pos[("D", k)] = A[k], B[k], D[k]
        pos[("C", k + 1)] = C[k]
    mesh_id = {"A": Ai, "B": Bi, "C": Ci, "D": Di}

    def seg(x, y, label):
        return Crease(tuple(pos[x]), tuple(pos[y]), label, (mesh_id[x[0]](x[1]), mesh_id[y[0]](y[1])))

    for k in range(n):
        dev.creases += [
            seg(("B", k), ("C", k + 1), "L2"),
            seg(("D", k), ("C", k + 1), "L3"),
            seg(("C", k + 1), ("D", k + 1), "L3"),
            seg(("B", k), ("D", k + 1), "L4"),
            seg(("A", k), ("C", k + 1), "L4"),
            seg(("A", k + 1), ("C", k + 1), "L1"),
        ]
        dev.boundary += [seg(("B", k), ("B", k + 1), "skeleton"), seg(("A", k), ("A", k + 1), "skeleton")]
    for k in range(1, n):
        dev.creases += [seg(("B", k), ("D", k), "L1"), seg(("D", k), ("A", k), "L2")]
    # both ends of the strip are glued together along B0 D0 A0 = Bn Dn An
    for k in (0, n):
        dev.boundary += [seg(("B", k), ("D", k), "L1"), seg(("D", k), ("A", k), "L2")]
    return dev


def strip_edge_lengths(dev: Development) -> dict:
    """Labelled distances of one developed unit cell."""
    d = lambda p, q: float(np.linalg.norm(p - q))  # noqa: E731
    return {
        "B0D0": d(dev.B[0], dev.D[0]),
        "A1C1": d(dev.A[1], dev.C[0]),
        "B0C1": d(dev.B[0], dev.C[0]),
        "A0D0": d(dev.A[0], dev.D[0]),
        "D0C1": d(dev.D[0], dev.C[0]),
        "C1D1": d(dev.C[0], dev.D[1]),
        "B0D1": d(dev.B[0], dev.D[1]),
        "A0C1": d(dev.A[0], dev.C[0]),
        "B0B1": d(dev.B[0], dev.B[1]),
        "A0A1": d(dev.A[0], dev.A[1]),
    }


def _corner(x, y, opposite):
    """Angle between sides of squared lengths x, y opposite a side of squared length `opposite`."""
    den = 2.0 * math.sqrt(x * y)
    if den == 0:
        raise DegenerateError("zero-length edge")
    cosv = (x + y - opposite) / den
    if cosv > 1 + 1e-12 or cosv < -1 - 1e-12:
        raise DegenerateError("edge lengths violate the triangle inequality")
    return math.acos(min(1.0, max(-1.0, cosv)))


def angle_defect(spec: DesignSpec, real: Realization | None = None) -> tuple:
    """2*pi minus the five face angles at a D-vertex and at a C-vertex.

    Purely intrinsic: angles come from squared edge lengths, taken from the
    realization when given, otherwise from the design itself.
    """
    if real is None:
        q1, q2, q3, q4 = spec.Q1, spec.Q2, spec.Q3, spec.Q4
    else:
        q1, q2, q3 = (float(x) for x in squared_edge_lengths(spec, real))
        q4 = q1
    at_d = (
        _corner(q1, q3, q2)  # B_i D_i C_{i+1}
        + _corner(q2, q3, q4)  # D_i A_i C_{i+1}
        + _corner(q4, q3, q2)  # B_{i-1} C_i D_i
        + _corner(q4, q1, 1.0)  # B_{i-1} D_i B_i
        + _corner(q3, q2, q1)  # C_i A_i D_i
    )
    at_c = (
        _corner(q2, q3, q1)  # B_i D_i C_{i+1}
        + _corner(q2, q3, q4)  # B_i C_{i+1} D_{i+1}
        + _corner(q3, q4, q2)  # D_i A_i C_{i+1}
        + _corner(q4, q1, 1.0)  # A_i A_{i+1} C_{i+1}
        + _corner(q1, q3, q2)  # C_{i+1} A_{i+1} D_{i+1}
    )
    return 2 * math.pi - at_d, 2 * math.pi - at_c


# ---------------------------------------------------------------------------
# crease pattern SVG

SVG_STYLE = {
    "unit": 100.0,
    "margin": 20.0,
    "crease_width": 1.5,
    "boundary_width": 2.5,
    "dash": "6 3",
    "mountain_color": "#c0392b",
    "valley_color": "#2c3e8f",
    "boundary_color": "#000000",
}


def crease_assignment(spec: DesignSpec, real: Realization) -> dict:
    """Fold label per belt edge (vertex pair) of the folded state `real`.

    Labels are taken relative to the stored face orientation, which is the
    printed side of the sheet; a mirrored realization swaps every label.
    """
    angles = dihedral_angles(build_vertices(spec, real), reference="faces")
    return {edge: classify_fold(a) for edge, a in angles.items()}


def _key(edge):
    return (min(edge), max(edge))


def _cap_polygon(p, q, n, outward):
    """Regular n-gon on segment p->q, on the side given by the sign of `outward`."""
    p, q = np.asarray(p), np.asarray(q)
    pts = [p, q]
    d = q - p
    turn = 2 * math.pi / n * (1 if outward > 0 else -1)
    for _ in range(n - 2):
        c, s = math.cos(turn), math.sin(turn)
        d = np.array([c * d[0] - s * d[1], s * d[0] + c * d[1]])
        pts.append(pts[-1] + d)
    return pts


def crease_pattern(spec: DesignSpec, real: Realization, caps=None, style=None) -> str:
    """SVG 1.1 crease pattern; mountain folds solid, valley folds dashed.

    Caps (the two n-gons) are attached to the first unit cell when n > 3 by
    default; triangular caps are omitted.
    """
    st = dict(SVG_STYLE, **(style or {}))
    dev = develop(spec)
    labels = crease_assignment(spec, real)
    if caps is None:
        caps = spec.n > 3
    u, m = st["unit"], st["margin"]
    polys = []
    if caps:
        polys.append(_cap_polygon(dev.A[1], dev.A[0], spec.n, -1))
        polys.append(_cap_polygon(dev.B[0], dev.B[1], spec.n, -1))
    pts = np.vstack([dev.A, dev.B, dev.C, dev.D] + [np.array(p) for p in polys])
    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    width = (xmax - xmin) * u + 2 * m
    height = (ymax - ymin) * u + 2 * m

    def tx(p):
        return (p[0] - xmin) * u + m, (ymax - p[1]) * u + m

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3f}" '
        f'height="{height:.3f}" viewBox="0 0 {width:.3f} {height:.3f}">',
        f"<desc>sandglass crease pattern n={spec.n} Q1={spec.Q1!r} Q2={spec.Q2!r} Q3={spec.Q3!r} "
        f"state H={real.H!r} h={real.h!r} r={real.r!r}</desc>",
    ]
    for k, poly in enumerate(polys):
        coords = " ".join("%.4f,%.4f" % tx(p) for p in poly)
        lines.append(
            f'<polygon class="cap" points="{coords}" fill="none" stroke="{st["boundary_color"]}" '
            f'stroke-width="{st["boundary_width"]}"/>'
        )
    for cr in dev.boundary:
        (x1, y1), (x2, y2) = tx(cr.p), tx(cr.q)
        cls = "hinge skeleton" if caps and cr.label == "skeleton" and _touches_cap(cr, dev) else "boundary " + cr.label
        lines.append(
            f'<line class={quoteattr(cls)} x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" y2="{y2:.4f}" '
            f'stroke="{st["boundary_color"]}" stroke-width="{st["boundary_width"]}"/>'
        )
    for cr in dev.creases:
        fold = labels[_key(cr.edge)]
        (x1, y1), (x2, y2) = tx(cr.p), tx(cr.q)
        color = st["mountain_color"] if fold == "mountain" else st["valley_color"]
        dash = "" if fold == "mountain" else f' stroke-dasharray="{st["dash"]}"'
        lines.append(
            f'<line class="crease {cr.label} {fold}" x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" '
            f'y2="{y2:.4f}" stroke="{color}" stroke-width="{st["crease_width"]}"{dash}/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _touches_cap(cr, dev):
    ends = {tuple(cr.p), tuple(cr.q)}
    return ends in ({tuple(dev.A[0]), tuple(dev.A[1])}, {tuple(dev.B[0]), tuple(dev.B[1])})
