"""
Enumeration of the symmetric realizations (H, h, r) of a sandglass design.

The three distance equations are reduced to a quartic in r:

    h^2(r) = (Q3 - 2(1-c) r^2) / 4
    P(r)   = Q2 - Q1 + 2 R r (1-c)              (= 4 H h)
    K(r)   = (Q1+Q2)/2 - R^2 - r^2 + R r (1+c)  (= H^2 + h^2)

    P^2 + 16 h^4 - 16 h^2 K = 0

Each admissible real root gives h = +sqrt(h^2), H = P / (4h), polished by
Newton's method on the raw system and mapped to the canonical mirror copy.
`scan_realizations` is an independent solver that never forms the quartic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import optimize

from .errors import DegenerateError, DomainError, EmptySet
from .geometry import (
    RESIDUAL_TOL,
    DesignSpec,
    Realization,
    build_vertices,
    constraint_residuals,
    face_areas,
)

DOUBLE_ROOT_TOL = 1e-10
DOUBLE_GAP = 1e-3
IMAG_TOL = 1e-6
DEDUP_TOL = 1e-7


@dataclass(frozen=True)
class RealizationSet:
    realizations: tuple
    multiplicity: tuple  # 1 = simple root in r, 2 = double root
    residuals: tuple
    degenerate: tuple
    discriminant: float  # of the normalized r-quartic

    def __len__(self):
        return len(self.realizations)

    def __iter__(self):
        return iter(self.realizations)

    def __getitem__(self, k):
        return self.realizations[k]

    @property
    def has_double_root(self):
        return any(m == 2 for m in self.multiplicity)


def _parts(n, Q1, Q2, Q3):
    """Ascending coefficient arrays of h^2(r), P(r), K(r)."""
    c = math.cos(math.pi / n)
    R = 1.0 / (2.0 * math.sin(math.pi / n))
    h2 = np.array([Q3 / 4.0, 0.0, -(1.0 - c) / 2.0])
    P = np.array([Q2 - Q1, 2.0 * R * (1.0 - c)])
    K = np.array([(Q1 + Q2) / 2.0 - R * R, R * (1.0 + c), -1.0])
    return h2, P, K


def quartic_from_lengths(n, Q1, Q2, Q3) -> np.ndarray:
    """r-quartic coefficients, descending degree, for arbitrary Q1, Q2, Q3."""
    h2, P, K = _parts(n, Q1, Q2, Q3)
    asc = npoly.polyadd(npoly.polymul(P, P), 16.0 * npoly.polymul(h2, h2))
    asc = npoly.polysub(asc, 16.0 * npoly.polymul(h2, K))
    asc = np.pad(asc, (0, 5 - len(asc)))
    return asc[::-1].copy()


def r_quartic_coefficients(spec: DesignSpec) -> np.ndarray:
    _require_sandglass(spec)
    return quartic_from_lengths(spec.n, spec.Q1, spec.Q2, spec.Q3)


def normalized(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    m = np.max(np.abs(coeffs))
    return coeffs / m if m > 0 else coeffs


def quartic_discriminant(coeffs) -> float:
    """Discriminant of a quartic (descending coefficients) after max-abs normalization."""
    a, b, c, d, e = normalized(coeffs)
    return float(
        256 * a**3 * e**3
        - 192 * a**2 * b * d * e**2
        - 128 * a**2 * c**2 * e**2
        + 144 * a**2 * c * d**2 * e
        - 27 * a**2 * d**4
        + 144 * a * b**2 * c * e**2
        - 6 * a * b**2 * d**2 * e
        - 80 * a * b * c**2 * d * e
        + 18 * a * b * c * d**3
        + 16 * a * c**4 * e
        - 4 * a * c**3 * d**2
        - 27 * b**4 * e**2
        + 18 * b**3 * c * d * e
        - 4 * b**3 * d**3
        - 4 * b**2 * c**3 * e
        + b**2 * c**2 * d**2
    )


def _require_sandglass(spec):
    if not spec.is_sandglass:
        raise DomainError("symmetric realizations need the sandglass condition Q1 = Q4")


def _jacobian(spec, x):
    H, h, r = x
    c, R = spec.c, spec.R
    return np.array(
        [
            [2 * (H - h), -2 * (H - h), 2 * r - 2 * R * c],
            [2 * (H + h), 2 * (H + h), -2 * (R - r)],
            [0.0, 8 * h, 4 * r * (1 - c)],
        ]
    )


def polish(spec: DesignSpec, x, iters=30):
    """Newton on S(x) = Q; least-squares steps keep it usable at double roots."""
    x = np.asarray(x, dtype=float).copy()
    best = x.copy()
    best_res = np.max(np.abs(constraint_residuals(spec, x)))
    for _ in range(iters):
        q = constraint_residuals(spec, x)
        step = np.linalg.lstsq(_jacobian(spec, x), q, rcond=1e-14)[0]
        x = x + step
        res = np.max(np.abs(constraint_residuals(spec, x)))
        if res < best_res:
            best, best_res = x.copy(), res
        if res < 1e-15 or np.max(np.abs(step)) < 1e-16:
            break
    return best, best_res


def _polish_root(coeffs, r, iters=8):
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(iters):
        d = dp(r)
        if d == 0:
            break
        step = p(r) / d
        if not math.isfinite(step) or abs(step) > 1e-3 * (1 + abs(r)):
            break
        r -= step
        if abs(step) < 1e-16 * (1 + abs(r)):
            break
    return r


def is_degenerate(spec, real, tol=1e-12) -> bool:
    return bool(np.any(face_areas(build_vertices(spec, real))[: 6 * spec.n] < tol))


def realize(spec: DesignSpec) -> RealizationSet:
    _require_sandglass(spec)
    n = spec.n
    coeffs = quartic_from_lengths(n, spec.Q1, spec.Q2, spec.Q3)
    disc = quartic_discriminant(coeffs)
    h2c, Pc, Kc = _parts(n, spec.Q1, spec.Q2, spec.Q3)
    roots = np.roots(coeffs)
    dcoeffs = np.polyder(coeffs)
    found = []
    for k, z in enumerate(roots):
        if abs(z.imag) > IMAG_TOL * (1 + abs(z.real)):
            continue
        others = np.delete(roots, k)
        gap = float(np.min(np.abs(others - z))) if len(others) else math.inf
        double = abs(disc) < DOUBLE_ROOT_TOL and gap < DOUBLE_GAP
        if double:
            # a double root of the quartic is a simple root of its derivative
            w = others[np.argmin(np.abs(others - z))]
            r = _polish_root(dcoeffs, float((z.real + w.real) / 2))
        else:
            r = _polish_root(coeffs, float(z.real))
        h2 = npoly.polyval(r, h2c)
        if h2 < -1e-9:
            continue
        h = math.sqrt(max(h2, 0.0))
        P = npoly.polyval(r, Pc)
        if h > 1e-7:
            H = P / (4.0 * h)
        else:
            K = npoly.polyval(r, Kc)
            if K < -1e-9:
                continue
            H = math.sqrt(max(K, 0.0))
        x = np.array([H, h, r])
        res = float(np.max(np.abs(constraint_residuals(spec, x))))
        # at a double root Newton drifts toward one of the two nearby simple
        # roots of the rounded design, so keep the derivative root when it fits
        if not double or res >= RESIDUAL_TOL:
            x, res = polish(spec, x)
        if res >= RESIDUAL_TOL:
            continue
        real = Realization.from_coords(x, spec).canonical()
        found.append((real, 2 if double else 1, res))
    unique = []
    for real, mult, res in found:
        for k, (u, um, ur) in enumerate(unique):
            if np.max(np.abs(u.coords - real.coords)) < DEDUP_TOL:
                unique[k] = (u, 2, min(ur, res))
                break
        else:
            unique.append((real, mult, res))
    if not unique:
        raise EmptySet(f"no real symmetric realization for {spec}")
    unique.sort(key=lambda t: (-t[0].H, t[0].r))
    return RealizationSet(
        realizations=tuple(u[0] for u in unique),
        multiplicity=tuple(u[1] for u in unique),
        residuals=tuple(u[2] for u in unique),
        degenerate=tuple(is_degenerate(spec, u[0]) for u in unique),
        discriminant=disc,
    )


def scan_realizations(spec: DesignSpec, samples: int = 20000) -> list:
    """Independent solver: scan the q3 = 0 ellipse in (r, h), then polish.

    On the ellipse r = rmax cos(phi), h = hmax sin(phi); q2 gives the two
    branches H = -h +/- sqrt(Q2 - (R - r)^2) and sign changes (or near-zero
    local minima) of q1 along phi seed a Newton polish of the full system.
    """
    _require_sandglass(spec)
    if spec.Q3 <= 0:
        raise DegenerateError("Q3 must be positive")
    c, R = spec.c, spec.R
    rmax = math.sqrt(spec.Q3 / (2.0 * (1.0 - c)))
    hmax = math.sqrt(spec.Q3) / 2.0
    phi = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)

    def point(t, sign):
        r = rmax * np.cos(t)
        h = hmax * np.sin(t)
        arg = spec.Q2 - (R - r) ** 2
        H = -h + sign * np.sqrt(np.maximum(arg, 0.0))
        return H, h, r, arg

    def q1(t, sign):
        H, h, r, _ = point(t, sign)
        return spec.Q1 - (R * R + r * r - 2 * R * r * c + (H - h) ** 2)

    seeds = []
    for sign in (1.0, -1.0):
        f = q1(phi, sign)
        ok = point(phi, sign)[3] >= 0
        a = np.abs(f)
        for k in range(samples):
            m = (k + 1) % samples
            t1 = phi[m] if m else 2 * math.pi
            if ok[k] != ok[m]:
                # branch point: the admissible arc ends inside this interval
                tb = optimize.brentq(lambda t: point(t, sign)[3], phi[k], t1, xtol=1e-15)
                tk = phi[k] if ok[k] else t1
                fb, fk = q1(tb, sign), q1(tk, sign)
                if fb == 0.0:
                    seeds.append((tb, sign))
                elif fb * fk < 0:
                    seeds.append((optimize.brentq(q1, min(tb, tk), max(tb, tk), args=(sign,), xtol=1e-15), sign))
                elif abs(fb) < 1e-4:
                    seeds.append((tb, sign))
                continue
            if not ok[k]:
                continue
            if f[k] == 0.0:
                seeds.append((phi[k], sign))
            elif f[k] * f[m] < 0:
                seeds.append((optimize.brentq(q1, phi[k], t1, args=(sign,), xtol=1e-15), sign))
            if a[k] <= a[k - 1] and a[k] <= a[m] and a[k] < 1e-4:
                seeds.append((phi[k], sign))

    found = []
    for t, sign in seeds:
        H, h, r, _ = point(t, sign)
        sol = optimize.root(
            lambda x: constraint_residuals(spec, x),
            (float(H), float(h), float(r)),
            jac=lambda x: -_jacobian(spec, x),
            method="lm",
            options={"xtol": 1e-15, "ftol": 1e-15},
        )
        x, res = polish(spec, sol.x)
        if res >= RESIDUAL_TOL:
            continue
        real = Realization.from_coords(x, spec).canonical()
        if all(np.max(np.abs(u.coords - real.coords)) >= 1e-6 for u in found):
            found.append(real)
    found.sort(key=lambda u: (-u.H, u.r))
    return found
