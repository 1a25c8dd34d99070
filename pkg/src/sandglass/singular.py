"""Shaky (infinitesimally flexible) sandglass designs.

Three independent detectors are provided: the closed-form shakiness quartic
in c = cos(pi/n), the discriminant of the r-quartic (realize module) and the
rank of first-order rigidity matrices, reduced to the symmetric flex family
or taken over the full framework.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, NoSolution, SingularSystem
from .geometry import DesignSpec, Realization, build_vertices, ring_positions, vertex_index
from .origami import origami_spec
from .realize import EmptySet, realize

RANK_TOL = 1e-7
SHAKY_Q2_RANGE = (1e-14, 1e2)


def shakiness_coefficients(Q1, Q2) -> tuple:
    """(w4, w3, w2, w1, w0) of the shakiness condition for an origami sandglass."""
    Q1 = np.asarray(Q1, dtype=float)
    Q2 = np.asarray(Q2, dtype=float)
    W = 4.0 * Q1 - 1.0
    if np.any(W <= 0):
        raise DomainError("shakiness condition needs Q1 > 1/4")
    if np.any(Q2 <= 0):
        raise DomainError("shakiness condition needs Q2 > 0")
    sW = np.sqrt(W)
    sq = np.sqrt(Q2)
    w4 = 128 * Q1**2 * Q2**2
    w3 = ((64 - 96 * Q1) * Q2**2.5 - 96 * Q1**2 * Q2**1.5) * sW + 64 * Q1 * (2 * Q1 - 1) * Q2**2
    w2 = (
        96 * (Q1**3 + (2 * Q2 + 5 / 16) * Q1**2 + (Q2**2 - 23 * Q2 / 8) * Q1 - 13 * Q2**2 / 48 + Q2 / 2) * Q2
        - 48 * sW * Q1 * (2 * Q1 - 1) * Q2**1.5
        - 24 * W**1.5 * Q2**2.5
    )
    w1 = 96 * (Q1**3 + (2 * Q2 - 3 / 4) * Q1**2 + (Q2**2 - Q2 - 5 / 32) * Q1 - Q2**2 / 4 + 7 * Q2 / 32) * Q2 - (
        8 * Q2**3.5
        - (15 + 36 * Q1 - 24 * Q1**2) * Q2**1.5
        + (24 * Q1 + 38) * Q2**2.5
        - (2 * Q1**2 - 8 * Q1**3) * sq
    ) * sW
    w0 = (
        (148 * Q2**2 + 35 * Q2) * Q1
        + 2 * Q2**3
        - 37 * Q2**2
        - Q2
        - 70 * Q1**2 * Q2
        - (8 * Q2**3.5 + (24 * Q1**2 - 12 * Q1 + 24) * Q2**1.5 + 6 * W * Q2**2.5 + (8 * Q1**3 - 6 * Q1**2 + Q1) * sq)
        * sW
    )
    return w4, w3, w2, w1, w0


def shakiness_residual(n: int, Q1, Q2, normalize: bool = True):
    """w4 c^4 + ... + w0 at c = cos(pi/n), divided by max|w_i| when `normalize`."""
    c = math.cos(math.pi / n)
    w = shakiness_coefficients(Q1, Q2)
    val = (((w[0] * c + w[1]) * c + w[2]) * c + w[3]) * c + w[4]
    if normalize:
        val = val / np.max(np.abs(np.stack(np.broadcast_arrays(*w))), axis=0)
    return val


def shaky_Q2_candidates(n: int, Q1: float, q2_range=SHAKY_Q2_RANGE, samples: int = 2001) -> list:
    """All sign changes of the shakiness residual on a log grid, bisected to full precision."""
    if not 4 * Q1 - 1 > 0:
        raise DomainError(f"Q1 must exceed 1/4, got {Q1}")
    grid = np.geomspace(q2_range[0], q2_range[1], samples)
    vals = shakiness_residual(n, Q1, grid, normalize=False)
    out = []
    for k in np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]:
        out.append(
            optimize.brentq(
                lambda q: float(shakiness_residual(n, Q1, q, normalize=False)),
                grid[k],
                grid[k + 1],
                xtol=1e-300,
                rtol=1e-15,
                maxiter=500,
            )
        )
    return out


@dataclass(frozen=True)
class ShakyDesign:
    spec: DesignSpec
    realization: Realization
    alternates: tuple  # further residual roots, whether or not they realize


def shaky_design(n: int, Q1: float, q2_range=SHAKY_Q2_RANGE) -> ShakyDesign:
    """Smallest Q2 on the shakiness locus whose origami design realizes as a double root."""
    cands = shaky_Q2_candidates(n, Q1, q2_range)
    if not cands:
        raise NoSolution(f"no shaky Q2 for n={n}, Q1={Q1}")
    for k, Q2 in enumerate(cands):
        try:
            spec = origami_spec(n, Q1, Q2)
            rs = realize(spec)
        except (EmptySet, DomainError, ValueError):
            continue
        doubles = [x for x, m in zip(rs.realizations, rs.multiplicity) if m == 2]
        if doubles:
            return ShakyDesign(spec, doubles[0], tuple(cands[:k] + cands[k + 1 :]))
    raise NoSolution(f"shakiness roots {cands} for n={n}, Q1={Q1} have no real double realization")


def solve_shaky_Q2(n: int, Q1: float, q2_range=SHAKY_Q2_RANGE) -> float:
    return shaky_design(n, Q1, q2_range).spec.Q2


# ---------------------------------------------------------------------------
# first-order rigidity

REDUCED_EDGES = ("B0D0", "B0D1", "A0D0", "B0C1", "D0C1", "C1D1")


def _rot(t):
    ct, st = math.cos(t), math.sin(t)
    return np.array([[ct, -st, 0.0], [st, ct, 0.0], [0.0, 0.0, 1.0]])


def _symmetric_velocity_basis(n):
    """Velocity of A0, B0, D0, C1, D1 as 3x3 matrices acting on (u, v, z)."""
    c, s = math.cos(math.pi / n), math.sin(math.pi / n)
    vA = np.array([[0, 0, 0], [0, 0, 0], [0, 0, 1.0]])
    vB = -vA
    vD = np.array([[1.0, 0, 0], [0, 0, 0], [0, 1.0, 0]])
    vC = np.array([[c, 0, 0], [s, 0, 0], [0, -1.0, 0]])
    vD1 = _rot(2 * math.pi / n) @ vD
    return vA, vB, vD, vC, vD1


def _key_points(real):
    n = real.spec.n
    A, B, C, D = ring_positions(n, real.H, real.h, real.r)
    return A[0], B[0], D[0], C[1 % n], D[1 % n]


def reduced_rigidity_matrix(real: Realization) -> np.ndarray:
    """6 x 3 first-order constraints on the symmetric flex (u, v, z); rows in REDUCED_EDGES order."""
    A0, B0, D0, C1, D1 = _key_points(real)
    vA, vB, vD, vC, vD1 = _symmetric_velocity_basis(real.spec.n)
    pairs = [(B0, D0, vB, vD), (B0, D1, vB, vD1), (A0, D0, vA, vD), (B0, C1, vB, vC), (D0, C1, vD, vC), (C1, D1, vC, vD1)]
    return np.array([(X - Y) @ (VX - VY) for X, Y, VX, VY in pairs])


def numerical_rank(M, tol: float = RANK_TOL) -> int:
    """Rank after scaling rows to unit length; singular values below tol count as zero."""
    M = np.asarray(M, dtype=float)
    norms = np.linalg.norm(M, axis=1)
    keep = norms > 0
    if not np.any(keep):
        return 0
    sv = np.linalg.svd(M[keep] / norms[keep, None], compute_uv=False)
    return int(np.sum(sv > tol))


def smallest_singular_value(M) -> float:
    M = np.asarray(M, dtype=float)
    norms = np.linalg.norm(M, axis=1)
    M = M[norms > 0] / norms[norms > 0, None]
    sv = np.linalg.svd(M, compute_uv=False)
    return float(sv[-1]) if M.shape[0] >= M.shape[1] else 0.0


def is_shaky(real: Realization, tol: float = RANK_TOL) -> bool:
    return numerical_rank(reduced_rigidity_matrix(real), tol) < 3


def belt_edges(n):
    """The 8n belt edges as (i, j, label) pairs of mesh vertex indices."""
    A, B, C, D, _, _ = vertex_index(n)
    out = []
    for i in range(n):
        out += [
            (B(i), D(i), "L1"),
            (A(i + 1), C(i + 1), "L1"),
            (B(i), C(i + 1), "L2"),
            (A(i), D(i), "L2"),
            (D(i), C(i + 1), "L3"),
            (C(i + 1), D(i + 1), "L3"),
            (B(i), D(i + 1), "L4"),
            (A(i), C(i + 1), "L4"),
        ]
    return out


def full_rigidity_matrix(real: Realization) -> np.ndarray:
    """8n x (6 + 6n) rigidity matrix with the A-polygon pinned.

    Columns: angular velocity w and translation t of the rigid B-polygon,
    then the velocities of C_0..C_{n-1}, then of D_0..D_{n-1}.
    """
    n = real.spec.n
    V = build_vertices(real.spec, real).vertices
    A, B, C, D, _, _ = vertex_index(n)
    M = np.zeros((8 * n, 6 + 6 * n))

    def col(idx):
        if 2 * n <= idx < 3 * n:
            return 6 + 3 * (idx - 2 * n)
        if 3 * n <= idx < 4 * n:
            return 6 + 3 * n + 3 * (idx - 3 * n)
        return None

    def add(row, X, Y, idx, sign):
        # contribution of the velocity of vertex idx (position X, other end Y)
        e = sign * (X - Y)
        if idx < n:
            return
        if idx < 2 * n:
            M[row, 0:3] += np.cross(X, e)
            M[row, 3:6] += e
            return
        k = col(idx)
        M[row, k : k + 3] += e

    for row, (i, j, _) in enumerate(belt_edges(n)):
        add(row, V[i], V[j], i, 1.0)
        add(row, V[j], V[i], j, 1.0)
    return M


def kernel(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of the row-normalized matrix."""
    M = np.asarray(M, dtype=float)
    M = M / np.linalg.norm(M, axis=1)[:, None]
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > tol))
    return vt[rank:].T


def kernel_dimension(M, tol: float = RANK_TOL) -> int:
    return kernel(M, tol).shape[1]


# ---------------------------------------------------------------------------
# the symmetric infinitesimal flex


@dataclass(frozen=True)
class InfinitesimalFlex:
    u: float
    v: float
    z: float
    realization: Realization

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u, self.v, self.z])

    def scaled(self, lam: float) -> "InfinitesimalFlex":
        return InfinitesimalFlex(lam * self.u, lam * self.v, lam * self.z, self.realization)

    def key_velocities(self) -> dict:
        """Velocities of A0, B0, D0, C1 and D1."""
        vA, vB, vD, vC, vD1 = _symmetric_velocity_basis(self.realization.spec.n)
        x = self.vector
        return {"A0": vA @ x, "B0": vB @ x, "D0": vD @ x, "C1": vC @ x, "D1": vD1 @ x}

    def velocities(self) -> np.ndarray:
        """(4n, 3) velocity of every material vertex, orbit-expanded, mesh index order."""
        n = self.realization.spec.n
        kv = self.key_velocities()
        A, B, C, D, _, _ = vertex_index(n)
        out = np.zeros((4 * n, 3))
        for i in range(n):
            Rm = _rot(2 * math.pi * i / n)
            out[A(i)] = kv["A0"]
            out[B(i)] = kv["B0"]
            out[D(i)] = Rm @ kv["D0"]
            out[C(i + 1)] = Rm @ kv["C1"]
        return out

    def residuals(self) -> np.ndarray:
        """First-order length change of the six edge-class representatives."""
        return reduced_rigidity_matrix(self.realization) @ self.vector

    def full_vector(self) -> np.ndarray:
        """This flex in the column layout of full_rigidity_matrix (A-polygon at rest)."""
        n = self.realization.spec.n
        vel = self.velocities() - self.key_velocities()["A0"]
        x = np.zeros(6 + 6 * n)
        x[3:6] = vel[n]  # B moves as a pure translation
        x[6 : 6 + 3 * n] = vel[2 * n : 3 * n].ravel()
        x[6 + 3 * n :] = vel[3 * n : 4 * n].ravel()
        return x

    def edge_rates(self) -> tuple:
        """(d1, d2, d3): squared velocity differences along B0D0, B0C1, D0C1."""
        kv = self.key_velocities()
        d1 = float(np.sum((kv["B0"] - kv["D0"]) ** 2))
        d2 = float(np.sum((kv["B0"] - kv["C1"]) ** 2))
        d3 = float(np.sum((kv["D0"] - kv["C1"]) ** 2))
        return d1, d2, d3


def infinitesimal_flex(real: Realization, z: float = 1.0) -> InfinitesimalFlex:
    """Solve the A0D0 and B0D0 projection equations for (u, v) at cap speed z."""
    if z == 0:
        raise DomainError("cap speed z must be nonzero")
    A0, B0, D0, _, _ = _key_points(real)
    a = D0 - A0
    b = D0 - B0
    # (D0-A0).(0,0,z) = (D0-A0).(u,0,v);  (D0-B0).(0,0,-z) = (D0-B0).(u,0,v)
    M = np.array([[a[0], a[2]], [b[0], b[2]]])
    rhs = np.array([a[2] * z, -b[2] * z])
    scale = max(np.linalg.norm(a), np.linalg.norm(b)) ** 2
    if abs(np.linalg.det(M)) < 1e-12 * scale:
        raise SingularSystem("projection equations are rank deficient")
    u, v = np.linalg.solve(M, rhs)
    return InfinitesimalFlex(float(u), float(v), float(z), real)
