"""Extremal snapping designs, the strain-energy landscape and the snappability.

The energy of a symmetric configuration (H, h, r) is the normalized bar
strain energy density of the belt,

    E = sum_i m_i (Q_i - S_i)^2 / (8 L_i^3)  /  sum_i m_i L_i,   m = (4n, 2n, 2n),

with S_i the squared edge lengths of the configuration and L_i = sqrt(Q_i)
the undeformed lengths. Its mountain pass between the open and the closed
realization is a shaky configuration and E there is the snappability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateError,
    DomainError,
    EmptySet,
    NoPathConvergence,
    NoSolution,
    SaddleNotShaky,
    SelfIntersecting,
    VerificationFailed,
)
from .geometry import DesignSpec, Realization, build_vertices, ring_positions, self_intersections, tetra_volume, volume
from .origami import origami_spec
from .realize import quartic_discriminant, quartic_from_lengths, realize

CLOSED_TOL = 1e-9
SHAKY_SADDLE_TOL = 1e-6
EXTREMAL_RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------------------
# energy


class EnergyLandscape:
    """E(H, h, r) for a sandglass spec, with closed-form gradient and Hessian."""

    def __init__(self, spec: DesignSpec):
        self.spec = spec
        n, c, R = spec.n, spec.c, spec.R
        self.Q = np.array([spec.Q1, spec.Q2, spec.Q3])
        self.L = np.sqrt(self.Q)
        self.mult = np.array([4 * n, 2 * n, 2 * n], dtype=float)
        self.denominator = float(np.sum(self.mult * self.L))
        self.weights = self.mult / (8.0 * self.L**3) / self.denominator
        self._c, self._R = c, R
        # the S_i are quadratic, so their Hessians are constant
        self._hess_S = np.array(
            [
                [[2, -2, 0], [-2, 2, 0], [0, 0, 2]],
                [[2, 2, 0], [2, 2, 0], [0, 0, 2]],
                [[0, 0, 0], [0, 8, 0], [0, 0, 4 * (1 - c)]],
            ],
            dtype=float,
        )

    def lengths(self, X) -> np.ndarray:
        """Squared lengths (S1, S2, S3) for configurations X[..., 3]."""
        X = np.asarray(X, dtype=float)
        H, h, r = X[..., 0], X[..., 1], X[..., 2]
        c, R = self._c, self._R
        return np.stack(
            [R * R + r * r - 2 * R * r * c + (H - h) ** 2, (R - r) ** 2 + (H + h) ** 2, 2 * r * r * (1 - c) + 4 * h * h],
            -1,
        )

    def lengths_jacobian(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        H, h, r = X[..., 0], X[..., 1], X[..., 2]
        c, R = self._c, self._R
        z = np.zeros_like(H)
        return np.stack(
            [
                np.stack([2 * (H - h), -2 * (H - h), 2 * r - 2 * R * c], -1),
                np.stack([2 * (H + h), 2 * (H + h), -2 * (R - r)], -1),
                np.stack([z, 8 * h, 4 * r * (1 - c)], -1),
            ],
            -2,
        )

    def energy_of_lengths(self, S) -> np.ndarray:
        return np.sum(self.weights * (self.Q - np.asarray(S, dtype=float)) ** 2, -1)

    def energy(self, X):
        return self.energy_of_lengths(self.lengths(X))

    def gradient(self, X) -> np.ndarray:
        d = self.Q - self.lengths(X)
        return np.einsum("...i,...ij->...j", -2.0 * self.weights * d, self.lengths_jacobian(X))

    def hessian(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        J = self.lengths_jacobian(X)
        d = self.Q - self.lengths(X)
        return 2.0 * np.einsum("i,ij,ik->jk", self.weights, J, J) - 2.0 * np.einsum("i,ijk->jk", self.weights * d, self._hess_S)


def snappability_of_lengths(spec: DesignSpec, S) -> float:
    """Strain energy density of a configuration with squared lengths S (sigma at the saddle)."""
    return float(EnergyLandscape(spec).energy_of_lengths(S))


# ---------------------------------------------------------------------------
# extremal designs


def extremal_residual(n: int, Q1, Q2):
    """Left-hand side of the extremal-snap condition exactly as printed (c = cos(pi/n))."""
    c = math.cos(math.pi / n)
    W = 4 * Q1 - 1
    return (
        4 * c * Q2 * Q1
        - 2 * c * Q2**2
        - 2 * Q1**2
        - 28 * Q2 * Q1
        - 2 * Q2**2
        + Q1
        + 5 * Q2
        - 2 * c * Q1**2
        + W**1.5 * np.sqrt(Q2)
        + 8 * Q2**1.5 * np.sqrt(W)
        + 4 * Q1 * np.sqrt(Q2) * np.sqrt(W)
    )


def extremal_quartic(n: int, Q1: float) -> np.ndarray:
    """Descending coefficients of the extremal condition as a quartic in y = sqrt(Q2)."""
    c = math.cos(math.pi / n)
    W = 4 * Q1 - 1
    sW = math.sqrt(W)
    return np.array(
        [-2 * c - 2, 8 * sW, 4 * c * Q1 - 28 * Q1 + 5, W**1.5 + 4 * Q1 * sW, Q1 - 2 * Q1**2 - 2 * c * Q1**2]
    )


def extremal_candidates(n: int, Q1: float) -> list:
    """All Q2 = y^2 from positive real roots y, ascending, each back-checked against the printed form."""
    if not 4 * Q1 - 1 > 0:
        raise DomainError(f"extremal designs need Q1 > 1/4, got {Q1}")
    coeffs = extremal_quartic(n, Q1)
    p, dp = np.poly1d(coeffs), np.poly1d(np.polyder(coeffs))
    out = []
    for y in np.roots(coeffs):
        if abs(y.imag) > 1e-8 * (1 + abs(y)) or y.real <= 0:
            continue
        y = float(y.real)
        for _ in range(6):
            d = dp(y)
            if d == 0:
                break
            y -= p(y) / d
        if y <= 0:
            continue
        Q2 = y * y
        if abs(extremal_residual(n, Q1, Q2)) < EXTREMAL_RESIDUAL_TOL * max(1.0, Q1 * Q1, Q2 * Q2):
            out.append(Q2)
    return sorted(out)


@dataclass(frozen=True)
class ClosedState:
    closed: bool
    factor: str | None  # "2Hrs+h" (dihedral 0) or "2rs-1" (dihedral pi)
    tetra_volume: float
    factor_values: tuple

    def __bool__(self):
        return self.closed

    @property
    def dihedral(self):
        return {"2Hrs+h": 0.0, "2rs-1": math.pi}.get(self.factor)


def closed_state_check(real: Realization, tol: float = CLOSED_TOL) -> ClosedState:
    """Coplanarity of A0, B0, D0, C1 and which factor of (2rs - 1)(2Hrs + h) vanishes."""
    n = real.spec.n
    s = real.spec.s
    A, B, C, D = ring_positions(n, real.H, real.h, real.r)
    vol = tetra_volume(A[0], B[0], D[0], C[1 % n])
    f_fold = 2 * real.H * real.r * s + real.h
    f_flat = 2 * real.r * s - 1
    factor = None
    if abs(f_fold) < tol:
        factor = "2Hrs+h"
    elif abs(f_flat) < tol:
        factor = "2rs-1"
    return ClosedState(abs(vol) < tol and factor is not None, factor, vol, (f_fold, f_flat))


@dataclass(frozen=True)
class SnapPair:
    spec: DesignSpec
    open: Realization
    closed: Realization
    closed_state: ClosedState
    open_contacts: tuple
    closed_contacts: tuple


def find_pair(spec: DesignSpec) -> SnapPair:
    """Closed realization plus an intersection-free open one."""
    rs = realize(spec)
    closed = [x for x in rs if closed_state_check(x)]
    others = [x for x in rs if not closed_state_check(x)]
    if not closed:
        raise VerificationFailed(f"no closed realization among {len(rs)}")
    if not others:
        raise VerificationFailed("the closed realization has no snapping partner")
    cl = closed[0]
    for op in others:
        contacts = self_intersections(build_vertices(spec, op))
        if not contacts:
            cc = self_intersections(build_vertices(spec, cl))
            return SnapPair(spec, op, cl, closed_state_check(cl), tuple(contacts), tuple(cc))
    raise SelfIntersecting("every open candidate self-intersects")


def extremal_Q2(n: int, Q1: float, verify: bool = True) -> float:
    """Lowest extremal branch; with `verify`, also require a closed/open pair."""
    cands = extremal_candidates(n, Q1)
    if not cands:
        raise NoSolution(f"no extremal Q2 for n={n}, Q1={Q1}")
    Q2 = cands[0]
    if verify:
        try:
            find_pair(origami_spec(n, Q1, Q2))
        except (EmptySet, DegenerateError, SelfIntersecting, VerificationFailed) as exc:
            raise VerificationFailed(f"Q2={Q2!r}: {exc}") from exc
    return Q2


# ---------------------------------------------------------------------------
# saddle search


def _reparametrize(X, s):
    d = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(X, axis=0), axis=1))])
    d /= d[-1]
    return np.stack([np.interp(s, d, X[:, j]) for j in range(X.shape[1])], -1)


def string_method(landscape: EnergyLandscape, a, b, nodes=64, dt=0.5, tol=1e-9, max_iter=5000):
    """Minimum energy path between a and b.

    Gradient steps are preconditioned with the inverse of the mean Hessian of
    the two minima; the string is redistributed by arc length after each step.
    Returns (path, iterations).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    Minv = np.linalg.inv(0.5 * (landscape.hessian(a) + landscape.hessian(b)))
    s = np.linspace(0.0, 1.0, nodes)
    X = a + (b - a) * s[:, None]
    for it in range(1, max_iter + 1):
        Y = X.copy()
        Y[1:-1] -= dt * landscape.gradient(X[1:-1]) @ Minv.T
        Y = _reparametrize(Y, s)
        if not np.all(np.isfinite(Y)):
            raise NoPathConvergence("string diverged")
        if np.max(np.abs(Y - X)) < tol:
            return Y, it
        X = Y
    raise NoPathConvergence(f"string did not converge in {max_iter} iterations")


def newton_critical_point(landscape, x, tol=1e-12, max_iter=200):
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        g = landscape.gradient(x)
        if np.linalg.norm(g) < tol:
            return x
        x = x - np.linalg.solve(landscape.hessian(x), g)
        if not np.all(np.isfinite(x)):
            break
    g = landscape.gradient(x)
    if np.all(np.isfinite(x)) and np.linalg.norm(g) < tol:
        return x
    raise NoPathConvergence(f"Newton refinement stalled at |grad E| = {np.linalg.norm(g):.3e}")


@dataclass
class SnapResult:
    spec: DesignSpec
    open: Realization
    closed: Realization
    saddle: np.ndarray  # (H, h, r)
    saddle_lengths: np.ndarray  # (S1, S2, S3)
    sigma: float
    path: np.ndarray  # (nodes, 3), open -> closed, saddle node replaced by the refined saddle
    saddle_index: int
    grad_norm: float
    hessian_eigenvalues: np.ndarray
    saddle_discriminant: float
    string_iterations: int
    flags: dict = field(default_factory=dict)

    @property
    def saddle_shaky(self) -> bool:
        return abs(self.saddle_discriminant) < SHAKY_SADDLE_TOL

    def path_energy(self) -> np.ndarray:
        return EnergyLandscape(self.spec).energy(self.path)

    def volumes(self) -> tuple:
        return volume(build_vertices(self.spec, self.open)), volume(build_vertices(self.spec, self.closed))

    def appendix_measures(self) -> dict:
        """Height (2H), waist |r| and volume change from closed to open state.

        Height and waist changes are relative to the n-gon radius R, the
        volume change relative to the closed volume.
        """
        R = self.spec.R
        v_open, v_closed = self.volumes()
        return {
            "V_open": v_open,
            "V_closed": v_closed,
            "rel_dheight": (2 * self.open.H - 2 * self.closed.H) / R,
            "rel_dwaist": (abs(self.open.r) - abs(self.closed.r)) / R,
            "rel_dvol": (v_open - v_closed) / v_closed,
        }


def find_saddle(landscape: EnergyLandscape, real_a: Realization, real_b: Realization, nodes: int = 64) -> SnapResult:
    """Mountain pass from real_a (open) to real_b (closed) and its refinement."""
    a, b = real_a.coords, real_b.coords
    if np.allclose(a, b, atol=1e-9):
        raise DomainError("endpoints coincide")
    path, iters = string_method(landscape, a, b, nodes=nodes)
    e = landscape.energy(path)
    k = int(np.argmax(e))
    if k in (0, nodes - 1):
        raise NoPathConvergence("energy along the path has no interior maximum")
    x = newton_critical_point(landscape, path[k])
    ev = np.linalg.eigvalsh(landscape.hessian(x))
    if int(np.sum(ev < 0)) != 1:
        raise NoPathConvergence(f"critical point has Hessian eigenvalues {ev}, not a saddle")
    path = path.copy()
    path[k] = x
    S = landscape.lengths(x)
    spec = landscape.spec
    disc = quartic_discriminant(quartic_from_lengths(spec.n, *S))
    res = SnapResult(
        spec=spec,
        open=real_a,
        closed=real_b,
        saddle=x,
        saddle_lengths=S,
        sigma=float(landscape.energy(x)),
        path=path,
        saddle_index=k,
        grad_norm=float(np.linalg.norm(landscape.gradient(x))),
        hessian_eigenvalues=ev,
        saddle_discriminant=disc,
        string_iterations=iters,
    )
    if not res.saddle_shaky:
        raise SaddleNotShaky(f"saddle lengths {S} give discriminant {disc:.3e}")
    return res


def path_is_monotone(energies, k, rtol=1e-12) -> bool:
    """Energy rises up to node k and falls after it (rounding tolerance relative to the peak)."""
    tol = rtol * max(float(np.max(energies)), 1e-300)
    return bool(np.all(np.diff(energies[: k + 1]) >= -tol) and np.all(np.diff(energies[k:]) <= tol))


def snap_pair(n: int, Q1: float, Q2: float | None = None) -> SnapResult:
    """Extremal design at Q1 (lowest branch unless Q2 is given), its pair and saddle."""
    if Q2 is None:
        Q2 = extremal_Q2(n, Q1, verify=False)
    spec = origami_spec(n, Q1, Q2)
    pair = find_pair(spec)
    res = find_saddle(EnergyLandscape(spec), pair.open, pair.closed)
    res.flags.update(
        open_intersection_free=not pair.open_contacts,
        closed_touching=bool(pair.closed_contacts) and all(c.touching for c in pair.closed_contacts),
        closed_factor=pair.closed_state.factor,
        closed_tetra_volume=pair.closed_state.tetra_volume,
        saddle_shaky=res.saddle_shaky,
        monotone_path=path_is_monotone(res.path_energy(), res.saddle_index),
    )
    return res


FAILURE_CODES = {
    NoSolution: "NO_EXTREMAL_Q2",
    EmptySet: "NO_REALIZATION",
    DegenerateError: "NO_REALIZATION",
    DomainError: "NO_REALIZATION",
    VerificationFailed: "NO_REALIZATION",
    SelfIntersecting: "SELF_INTERSECTING",
    NoPathConvergence: "NO_SADDLE",
    SaddleNotShaky: "SADDLE_NOT_SHAKY",
}


def failure_code(exc: BaseException) -> str:
    for cls, code in FAILURE_CODES.items():
        if isinstance(exc, cls):
            return code
    raise exc


def survey_branches(n: int, Q1: float) -> list:
    """Outcome of the snap analysis on every extremal branch: (Q2, "OK" or failure code)."""
    out = []
    for Q2 in extremal_candidates(n, Q1):
        try:
            snap_pair(n, Q1, Q2)
            out.append((Q2, "OK"))
        except tuple(FAILURE_CODES) as exc:
            out.append((Q2, failure_code(exc)))
    return out
