"""Exact formulas for chi-squared field stationary-point statistics.

Everything here is closed-form: the height distribution of the field,
the dimensional prefactor of the density integral, the signed number
density (which is independent of the spectral shape gamma), the Monte
Carlo weight normalization, Haar volumes of the orthogonal groups, the
multivariate Gamma function, and the analytic limits for the extreme
height and gamma -> 0 regimes.  These are the oracles the Monte Carlo
machinery is tested against.

Internals are evaluated in log space; the normalization constant grows
like 2^(3N/2) Gamma_3((N-1)/2), which overflows naive arithmetic well
before N ~ 40.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError

__all__ = [
    "LimitKind",
    "chi2_pdf",
    "prefactor_alpha",
    "signed_expectation",
    "signed_density",
    "normalization_vn",
    "multivariate_gamma",
    "log_multivariate_gamma",
    "haar_volume",
    "limit_density",
]


class LimitKind(str, enum.Enum):
    """Analytic limit regimes for the per-class number densities."""

    MAXIMA_LARGE_NU = "maxima-large-nu"
    MINIMA_SMALL_NU = "minima-small-nu"
    GAMMA0_EXTREMUM = "gamma0-extremum"
    GAMMA0_SADDLE = "gamma0-saddle"


def _check_n_fields(n_fields: int, minimum: int = 1) -> int:
    if int(n_fields) != n_fields or n_fields < minimum:
        raise ParameterError(f"number of fields must be an integer >= {minimum}, got {n_fields}")
    return int(n_fields)


def chi2_pdf(n_fields: int, nu_bar):
    """Probability density of the dimensionless height nu_bar = sqrt(Phi)/sigma0.

    nu_bar^2 follows a chi-squared law with ``n_fields`` degrees of
    freedom; in nu_bar itself the density is
    nu_bar^(N-1) e^(-nu_bar^2/2) / (2^(N/2-1) Gamma(N/2)) for nu_bar > 0
    and exactly zero below.  Vectorized over ``nu_bar``.
    """
    n = _check_n_fields(n_fields)
    nu = np.asarray(nu_bar, dtype=float)
    log_norm = (n / 2.0 - 1.0) * math.log(2.0) + gammaln(n / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (n - 1.0) * np.log(nu) - 0.5 * nu * nu - log_norm
        out = np.where(nu > 0.0, np.exp(logpdf), 0.0)
    if np.ndim(nu_bar) == 0:
        return float(out)
    return out


def prefactor_alpha(sigma0: float, sigma1: float, nu_bar: float) -> float:
    """Dimensional prefactor (6 pi)^(-3/2) (sigma1/sigma0)^3 / nu_bar^3."""
    if sigma0 <= 0 or sigma1 <= 0:
        raise ParameterError("sigma0 and sigma1 must be positive")
    if nu_bar <= 0:
        raise ParameterError(f"nu_bar must be positive, got {nu_bar}")
    return (6.0 * math.pi) ** -1.5 * (sigma1 / sigma0) ** 3 / nu_bar**3


def signed_expectation(n_fields: int, nu_bar):
    """Polynomial expectation of the signed Hessian determinant.

    (N-1)(N-2)(N-3) - 3(N-1)^2 nu_bar^2 + 3 N nu_bar^4 - nu_bar^6,
    valid for any number of fields.  Vectorized over ``nu_bar``.
    """
    n = _check_n_fields(n_fields)
    nu = np.asarray(nu_bar, dtype=float)
    nu2 = nu * nu
    out = (n - 1) * (n - 2) * (n - 3) - 3.0 * (n - 1) ** 2 * nu2 + 3.0 * n * nu2**2 - nu2**3
    if np.ndim(nu_bar) == 0:
        return float(out)
    return out


def signed_density(n_fields: int, nu_bar, sigma0: float = 1.0, sigma1: float = 1.0):
    """Closed-form signed stationary-point density per unit nu_bar.

    Counts points with 1 or 3 positive Hessian eigenvalues positively and
    the rest negatively; independent of gamma.  Restricted to
    ``n_fields >= 4``: below that the field develops topological defects
    and this density is not offered.  Vectorized over ``nu_bar``; zero
    for nu_bar < 0.
    """
    n = _check_n_fields(n_fields)
    if n < 4:
        raise ParameterError(
            f"signed density requires at least 4 fields (defect-dominated below), got {n}"
        )
    if sigma0 <= 0 or sigma1 <= 0:
        raise ParameterError("sigma0 and sigma1 must be positive")
    nu = np.asarray(nu_bar, dtype=float)
    log_norm = (n / 2.0 - 1.0) * math.log(2.0) + 1.5 * math.log(6.0 * math.pi) + gammaln(n / 2.0)
    scale = (sigma1 / sigma0) ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        # nu^(N-4): exactly 1 at nu=0 when N=4, 0 when N>4
        power = np.where(
            (nu == 0.0) & (n == 4), 1.0, np.exp((n - 4.0) * np.log(np.abs(nu)))
        )
        envelope = scale * power * np.exp(-0.5 * nu * nu - log_norm)
        out = np.where(nu >= 0.0, envelope * signed_expectation(n, nu), 0.0)
    if np.ndim(nu_bar) == 0:
        return float(out)
    return out


def log_multivariate_gamma(m: int, x: float) -> float:
    """log Gamma_m(x) = m(m-1)/4 log pi + sum_i log Gamma(x - (i-1)/2)."""
    if int(m) != m or m < 1:
        raise ParameterError(f"multivariate Gamma order must be a positive integer, got {m}")
    total = 0.25 * m * (m - 1) * math.log(math.pi)
    for i in range(1, int(m) + 1):
        arg = x - 0.5 * (i - 1)
        if arg <= 0 and arg == math.floor(arg):
            raise ParameterError(f"Gamma pole at argument {arg} (order {m}, x={x})")
        if arg <= 0:
            raise ParameterError(
                f"multivariate Gamma restricted to positive arguments, got {arg}"
            )
        total += gammaln(arg)
    return total


def multivariate_gamma(m: int, x: float) -> float:
    """Gamma_m(x) = pi^(m(m-1)/4) prod_i Gamma(x - (i-1)/2)."""
    return math.exp(log_multivariate_gamma(m, x))


def normalization_vn(n_fields: int, gamma: float) -> float:
    """Normalization of the 9-dimensional Monte Carlo weight integral.

    2^(3(N-1)/2) / (5^(5/2) 3^3) * pi * sqrt(1 - gamma^2) * Gamma_3((N-1)/2).
    """
    n = _check_n_fields(n_fields, minimum=4)
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie strictly inside (0, 1), got {gamma}")
    log_v = (
        1.5 * (n - 1) * math.log(2.0)
        - 2.5 * math.log(5.0)
        - 3.0 * math.log(3.0)
        + math.log(math.pi)
        + 0.5 * math.log1p(-gamma * gamma)
        + log_multivariate_gamma(3, 0.5 * (n - 1))
    )
    return math.exp(log_v)


def haar_volume(group: str, n: int) -> float:
    """Haar volume of O(n) or SO(n).

    Vol[O(n)] = 2^n pi^(n(n+1)/4) / prod_{j=1}^n Gamma(j/2); the special
    orthogonal group has exactly half that volume.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"group dimension must be a positive integer, got {n}")
    name = str(group).upper()
    if name not in ("O", "SO"):
        raise ParameterError(f"group must be 'O' or 'SO', got {group!r}")
    log_v = n * math.log(2.0) + 0.25 * n * (n + 1) * math.log(math.pi)
    log_v -= sum(gammaln(0.5 * j) for j in range(1, int(n) + 1))
    if name == "SO":
        log_v -= math.log(2.0)
    return math.exp(log_v)


# gamma->0 coefficients: (29 sqrt2 -/+ 12 sqrt3) / (4 * 5^(3/2) * sqrt(pi))
_G0_EXTREMUM = (29.0 * math.sqrt(2.0) - 12.0 * math.sqrt(3.0)) / (4.0 * 5.0**1.5 * math.sqrt(math.pi))
_G0_SADDLE = (29.0 * math.sqrt(2.0) + 12.0 * math.sqrt(3.0)) / (4.0 * 5.0**1.5 * math.sqrt(math.pi))


def limit_density(
    kind: LimitKind,
    n_fields: int,
    nu_bar,
    gamma: float | None = None,
    sigma0: float = 1.0,
    sigma1: float = 1.0,
):
    """Closed-form limit approximations to the per-class densities.

    * ``maxima-large-nu``: alpha * pdf * nu_bar^6 (maxima dominate at
      large heights).
    * ``minima-small-nu``: alpha * pdf * (N-1)(N-2)(N-3) (minima dominate
      near nu_bar = 0; leading power nu_bar^(N-4)).
    * ``gamma0-extremum`` / ``gamma0-saddle``: the slowly-decaying-tail
      limit, diverging as 1/gamma^3, with the same shape in nu_bar for
      every class; saddles outnumber extrema by a fixed factor ~= 3.055.

    gamma is required (and must lie in (0, 1)) only for the two gamma -> 0
    kinds.  Vectorized over ``nu_bar``.
    """
    kind = LimitKind(kind)
    n = _check_n_fields(n_fields, minimum=4)
    if sigma0 <= 0 or sigma1 <= 0:
        raise ParameterError("sigma0 and sigma1 must be positive")
    nu = np.asarray(nu_bar, dtype=float)
    pdf = chi2_pdf(n, nu)
    scale = (6.0 * math.pi) ** -1.5 * (sigma1 / sigma0) ** 3

    if kind in (LimitKind.MAXIMA_LARGE_NU, LimitKind.MINIMA_SMALL_NU):
        if gamma is not None and not 0.0 < gamma < 1.0:
            raise ParameterError(f"gamma must lie in (0, 1) when given, got {gamma}")
        with np.errstate(divide="ignore", invalid="ignore"):
            if kind is LimitKind.MAXIMA_LARGE_NU:
                out = np.where(nu > 0.0, scale * pdf * nu**3, 0.0)
            else:
                # combined form stays finite at nu_bar = 0 (constant for N = 4)
                const = (n - 1) * (n - 2) * (n - 3)
                log_norm = (n / 2.0 - 1.0) * math.log(2.0) + gammaln(n / 2.0)
                power = np.where(
                    (nu == 0.0) & (n == 4), 1.0, np.exp((n - 4.0) * np.log(np.abs(nu)))
                )
                out = np.where(
                    nu >= 0.0, scale * const * power * np.exp(-0.5 * nu * nu - log_norm), 0.0
                )
    else:
        if gamma is None or not 0.0 < gamma < 1.0:
            raise ParameterError(
                f"the gamma->0 limits need gamma strictly inside (0, 1), got {gamma}"
            )
        coeff = _G0_EXTREMUM if kind is LimitKind.GAMMA0_EXTREMUM else _G0_SADDLE
        out = scale * coeff * pdf / gamma**3

    if np.ndim(nu_bar) == 0:
        return float(out)
    return out
