"""Shakeability: curvature of the snappability along the normalized infinitesimal flex.

Moving the squared lengths along S_i(t) = Q_i + t d_i, where d_i is the
squared velocity difference over edge class i, the strain energy density is
quadratic in t and its second derivative at t = 0 is the shakeability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoSolution, SandglassError, ZeroFlex
from .geometry import DesignSpec, Realization
from .singular import InfinitesimalFlex, infinitesimal_flex, shaky_design
from .snap import EnergyLandscape


def _mean_relative_rate(spec: DesignSpec, d) -> float:
    """Mean relative instantaneous change of the squared edge lengths over all 8n belt edges."""
    n = spec.n
    d1, d2, d3 = d
    return (4 * n * d1 / spec.Q1 + 2 * n * d2 / spec.Q2 + 2 * n * d3 / spec.Q3) / (8 * n)


def _max_relative_rate(spec: DesignSpec, d) -> float:
    d1, d2, d3 = d
    return max(d1 / spec.Q1, d2 / spec.Q2, d3 / spec.Q3)


NORMALIZATIONS = {
    "mean-relative": _mean_relative_rate,
    "max-relative": _max_relative_rate,
}
DEFAULT_NORMALIZATION = "mean-relative"


def normalize_flex(flex: InfinitesimalFlex, normalization: str = DEFAULT_NORMALIZATION) -> InfinitesimalFlex:
    """Positive rescaling so that the chosen rate functional equals 1.

    Every d_i scales with the square of the flex, so the factor is unique.
    """
    try:
        rate = NORMALIZATIONS[normalization]
    except KeyError:
        raise DomainError(f"unknown normalization {normalization!r}; choose from {sorted(NORMALIZATIONS)}") from None
    m = rate(flex.realization.spec, flex.edge_rates())
    if not (m > 0 and math.isfinite(m)):
        raise ZeroFlex("flex does not change any edge length to first order")
    return flex.scaled(1.0 / math.sqrt(m))


def sigma_along_flex(spec: DesignSpec, d, t):
    """Strain energy density at squared lengths Q_i + t d_i."""
    t = np.asarray(t, dtype=float)
    Q = np.array([spec.Q1, spec.Q2, spec.Q3])
    S = Q + t[..., None] * np.asarray(d, dtype=float)
    return EnergyLandscape(spec).energy_of_lengths(S)


def shakeability(spec: DesignSpec, d) -> float:
    """Closed form of sigma''(0) for the rates d = (d1, d2, d3)."""
    n = spec.n
    L1, L2, L3 = math.sqrt(spec.Q1), math.sqrt(spec.Q2), math.sqrt(spec.Q3)
    d1, d2, d3 = d
    bracket = 4 * n * d1**2 / (8 * L1**3) + 2 * n * d2**2 / (8 * L2**3) + 2 * n * d3**2 / (8 * L3**3)
    return 2.0 * bracket / (4 * n * L1 + 2 * n * L2 + 2 * n * L3)


def shakeability_fd(spec: DesignSpec, d, step: float = 1e-4) -> float:
    """Central second difference of sigma(t) at t = 0."""
    sp, s0, sm = sigma_along_flex(spec, d, [step, 0.0, -step])
    return float((sp - 2 * s0 + sm) / step**2)


@dataclass(frozen=True)
class ShakeResult:
    spec: DesignSpec
    realization: Realization
    flex: InfinitesimalFlex  # normalized
    rates: tuple  # (d1, d2, d3)
    kappa: float
    normalization: str
    flex_residual: float  # max first-order length change over the six edge classes

    def surrogate_lengths(self, t) -> np.ndarray:
        Q = np.array([self.spec.Q1, self.spec.Q2, self.spec.Q3])
        return Q + np.asarray(t, dtype=float)[..., None] * np.asarray(self.rates)


def shake_realization(real: Realization, normalization: str = DEFAULT_NORMALIZATION) -> ShakeResult:
    flex = normalize_flex(infinitesimal_flex(real), normalization)
    d = flex.edge_rates()
    return ShakeResult(
        spec=real.spec,
        realization=real,
        flex=flex,
        rates=d,
        kappa=shakeability(real.spec, d),
        normalization=normalization,
        flex_residual=float(np.max(np.abs(flex.residuals()))),
    )


def shake_design(n: int, Q1: float, normalization: str = DEFAULT_NORMALIZATION) -> ShakeResult:
    design = shaky_design(n, Q1)
    return shake_realization(design.realization, normalization)


SHAKE_COLUMNS = (
    "n", "Q1", "Q2", "Q3", "H", "h", "r", "u", "v", "z", "d1", "d2", "d3", "kappa", "normalization", "failure",
)  # fmt: skip


def q1_grid(q1_min: float, q1_max: float, step: float) -> np.ndarray:
    """Grid q1_min + k*step, k = 1, 2, ... up to q1_max inclusive (left end excluded)."""
    if not step > 0:
        raise DomainError("step must be positive")
    count = int(math.floor((q1_max - q1_min) / step + 1e-9))
    return np.array([round(q1_min + k * step, 12) for k in range(1, count + 1)])


def sweep_shake(n: int, q1_min: float = 0.25, q1_max: float = 0.31, step: float = 0.001, normalization=DEFAULT_NORMALIZATION) -> list:
    """One dict per grid point; designs without a shaky solution carry a failure code."""
    rows = []
    for Q1 in q1_grid(q1_min, q1_max, step):
        row = dict.fromkeys(SHAKE_COLUMNS, math.nan)
        row.update(n=n, Q1=float(Q1), normalization=normalization, failure="")
        try:
            res = shake_design(n, float(Q1), normalization)
        except NoSolution:
            row["failure"] = "NO_SHAKY_Q2"
        except SandglassError as exc:
            row["failure"] = type(exc).__name__
        else:
            row.update(
                Q2=res.spec.Q2,
                Q3=res.spec.Q3,
                H=res.realization.H,
                h=res.realization.h,
                r=res.realization.r,
                u=res.flex.u,
                v=res.flex.v,
                z=res.flex.z,
                d1=res.rates[0],
                d2=res.rates[1],
                d3=res.rates[2],
                kappa=res.kappa,
            )
        rows.append(row)
    return rows
