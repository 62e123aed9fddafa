"""Scalar figures of merit for splitting schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .scheme_core import ErrorCoefficients, TrotterScheme, compute_error_coefficients

INFINITE_EFFICIENCY = math.inf


@dataclass(frozen=True)
class MeritReport:
    err_n: float
    eff_n: float
    chi2: float = math.nan
    xbar: float = math.nan
    combined_err: float = math.nan
    ratio_r: float = 0.0
    omega0: float = math.nan
    pearson_rho: float = math.nan

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def err_n(coeffs: ErrorCoefficients, n: int) -> float:
    """Euclidean norm of the degree-(n+1) coefficients."""
    return float(np.linalg.norm(coeffs.leading(n)))


def eff_n(err: float, q: int, n: int) -> float:
    """1 / (q^n Err_n); infinite when the leading error vanishes."""
    if err < 0:
        raise DomainError("error must be nonnegative")
    if err == 0:
        return INFINITE_EFFICIENCY
    return 1.0 / (q ** n * err)


def chi_squared(coeffs: ErrorCoefficients, weights: dict[int, float],
                w0: float | None = None) -> float:
    """sum_k w_k Err_k^2 over even k in ``weights``.

    The k = 0 entry (or ``w0``) weights |nu-1|^2 + |sigma-1|^2, the term
    used when the sum rules are not eliminated.
    """
    weights = dict(weights)
    if w0 is not None:
        weights[0] = w0
    total = 0.0
    for k, w in weights.items():
        if w < 0:
            raise DomainError("weights must be nonnegative")
        if w == 0:
            continue
        if k == 0:
            total += w * (abs(coeffs.nu - 1) ** 2 + abs(coeffs.sigma - 1) ** 2)
        else:
            total += w * float(np.sum(np.abs(coeffs.leading(k)) ** 2))
    return total


def origin_distance(scheme: TrotterScheme) -> float:
    """Distance of the ramp parameters from the uniform point 1/(2q)."""
    c = scheme.ramp_c
    q = scheme.q
    return float(np.sqrt(2.0 * np.sum(np.abs(c - 1.0 / (2 * q)) ** 2)))


def combined_error(err: float, xbar: float, r: float) -> float:
    """sqrt(((1 - r) err)^2 + (r xbar)^2)."""
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"ratio r must lie in [0, 1], got {r}")
    return math.hypot((1.0 - r) * err, r * xbar)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DomainError("pearson needs two 1-d sequences of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0 or sy == 0:
        raise DomainError("correlation undefined for zero variance")
    return float(dx @ dy) / (sx * sy)


def experimental_efficiency(delta: float, t: float, q: int, h: float, n: int,
                            omega0: float) -> float:
    """t * Omega^n / delta with Omega = omega0 * q / h."""
    if h <= 0:
        raise DomainError("step must be positive")
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    if delta == 0:
        return INFINITE_EFFICIENCY
    omega = omega0 * q / h
    return t * omega ** n / delta


def calibrate_omega0(eff_theory: float, delta: float, t: float, q: int, h: float,
                     n: int) -> float:
    """Omega_0 for which the experimental efficiency equals ``eff_theory``."""
    if delta <= 0 or eff_theory <= 0:
        raise DomainError("calibration needs positive delta and efficiency")
    return (eff_theory * delta / t) ** (1.0 / n) * h / q


def parallel_error_family(lam: complex) -> tuple[complex, complex, complex]:
    """(alpha, beta, alpha - beta) for the q = 2 family

        exp(lam A) exp(B/2) exp((1 - 2 lam) A) exp(B/2) exp(lam A).

    Here beta multiplies [B,[A,B]] = -[B,[B,A]], so the series engine's
    beta (on [B,[B,A]]) is the negative of this one.  alpha - beta is the
    coefficient of the part of the error along [A,[A,B]] once the rest is
    written through [H,[H,B]] with H = A + B.
    """
    alpha = 1 / 12 - lam / 2 + lam ** 2 / 2
    beta = 1 / 24 - lam / 4
    return alpha, beta, alpha - beta


def parallel_family_scheme(lam: complex) -> TrotterScheme:
    a = np.array([lam, 1 - 2 * lam, lam])
    b = np.array([0.5, 0.5])
    return TrotterScheme(a, b, order=2, name=f"q2-family({lam})")


def parallel_family_roots() -> tuple[complex, complex]:
    """Zeros of alpha - beta = 1/24 - lam/4 + lam^2/2 (no real ones)."""
    # lam = 1/4 +- sqrt(1/16 - 1/12)
    im = 0.25 / math.sqrt(3.0)
    return complex(0.25, -im), complex(0.25, im)


def merit_report(scheme: TrotterScheme, n: int | None = None, r: float = 0.0,
                 weights: dict[int, float] | None = None) -> MeritReport:
    n = n or scheme.order
    if n not in (2, 4, 6):
        raise DomainError(f"merit report needs n in (2, 4, 6), got {n}")
    coeffs = compute_error_coefficients(scheme)
    e = err_n(coeffs, n)
    xbar = origin_distance(scheme)
    chi2 = chi_squared(coeffs, weights) if weights else math.nan
    return MeritReport(err_n=e, eff_n=eff_n(e, scheme.q, n), chi2=chi2, xbar=xbar,
                       combined_err=combined_error(e, xbar, r), ratio_r=r)
