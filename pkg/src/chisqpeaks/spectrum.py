"""Isotropic power spectra and their spectral moments.

Every moment uses the radial convention

    sigma_n^2 = 4 pi * Integral_0^inf dk k^(2n+2) P(k),

so sigma_0^2 is the per-field variance, sigma_1^2 the total gradient
variance and sigma_2^2 the curvature variance scale.  The dimensionless
shape parameter

    gamma = sigma_1^2 / (sigma_0 * sigma_2)

lies in (0, 1] by Cauchy-Schwarz, saturating only for a delta-shell
spectrum.  Analytic families carry exact antiderivatives; tabulated
spectra are interpolated linearly in ln k (zero outside the table) and
integrated exactly segment by segment.  Adaptive quadrature is provided
as an independent cross-check path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad as _scipy_quad
from scipy.special import erf, gamma as _gamma_fn

from .errors import DivergentMomentError, NumericalError, ParameterError

__all__ = [
    "QuadratureConfig",
    "SpectralMoments",
    "TopHatSpectrum",
    "PowerLawGaussianSpectrum",
    "GaussianShellSpectrum",
    "TabulatedSpectrum",
    "PowerSpectrum",
    "moment",
    "moment_quadrature",
    "spectral_params",
    "load_table",
    "parse_spectrum",
]

# gamma within this distance of 1 is flagged degenerate rather than fed to
# 1/(1-gamma^2) downstream
DEGENERATE_GAMMA_TOL = 1e-9
# gamma above 1 by more than this signals inconsistent moment integration
GAMMA_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the adaptive-quadrature cross-check path."""

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_subdivisions: int = 200


@dataclass(frozen=True)
class SpectralMoments:
    """The only spectrum data the density machinery consumes.

    ``degenerate`` is set when gamma is within ``DEGENERATE_GAMMA_TOL`` of
    the delta-shell boundary gamma = 1.
    """

    sigma0: float
    sigma1: float
    sigma2: float
    gamma: float
    degenerate: bool = False


@dataclass(frozen=True)
class TopHatSpectrum:
    """P(k) = amplitude for 0 <= k <= k_max, zero above."""

    amplitude: float
    k_max: float

    def __post_init__(self):
        if self.amplitude < 0 or self.k_max <= 0:
            raise ParameterError("top-hat spectrum needs amplitude >= 0 and k_max > 0")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(k <= self.k_max, self.amplitude, 0.0)

    def moment_exact(self, n: int) -> float:
        m = 2 * n + 3
        return 4.0 * math.pi * self.amplitude * self.k_max**m / m

    def support_max(self) -> float:
        return self.k_max


@dataclass(frozen=True)
class PowerLawGaussianSpectrum:
    """P(k) = amplitude * k**index * exp(-k^2 / k_cut^2)."""

    amplitude: float
    index: float
    k_cut: float

    def __post_init__(self):
        if self.amplitude < 0 or self.k_cut <= 0:
            raise ParameterError("power-law spectrum needs amplitude >= 0 and k_cut > 0")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = self.amplitude * k**self.index * np.exp(-((k / self.k_cut) ** 2))
        # k = 0 with negative index would be inf; the moment integrand tames it
        return np.where(np.isfinite(p), p, 0.0)

    def moment_exact(self, n: int) -> float:
        # 4 pi A * Int k^(2n+2+index) e^(-k^2/kc^2) dk
        #   = 2 pi A kc^(2n+3+index) Gamma((2n+3+index)/2)
        p = 2 * n + 3 + self.index
        if p <= 0:
            raise DivergentMomentError(
                f"moment n={n} diverges at k->0 for spectral index {self.index}"
            )
        return 2.0 * math.pi * self.amplitude * self.k_cut**p * _gamma_fn(p / 2.0)

    def support_max(self) -> float:
        # point beyond which the cutoff suppresses P by more than ~1e-8
        return self.k_cut * math.sqrt(math.log(1e8))


@dataclass(frozen=True)
class GaussianShellSpectrum:
    """P(k) = amplitude * exp(-(k - k_0)^2 / (2 width^2)).

    The width -> 0 limit is the delta-shell spectrum with gamma -> 1.
    """

    amplitude: float
    k_0: float
    width: float

    def __post_init__(self):
        if self.amplitude < 0 or self.k_0 <= 0 or self.width <= 0:
            raise ParameterError("shell spectrum needs amplitude >= 0, k_0 > 0, width > 0")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return self.amplitude * np.exp(-((k - self.k_0) ** 2) / (2.0 * self.width**2))

    def moment_exact(self, n: int) -> float:
        # Substitute k = k_0 + w t; binomial expansion over half-Gaussian
        # moments I_j = Int_{-L}^inf t^j e^(-t^2/2) dt with L = k_0/w,
        # via the recursion I_j = (-L)^(j-1) e^(-L^2/2) + (j-1) I_(j-2).
        m = 2 * n + 2
        L = self.k_0 / self.width
        tail = math.exp(-0.5 * L * L)
        i_prev2 = math.sqrt(math.pi / 2.0) * (1.0 + erf(L / math.sqrt(2.0)))  # I_0
        i_prev1 = tail  # I_1
        moments = [i_prev2, i_prev1]
        for j in range(2, m + 1):
            moments.append((-L) ** (j - 1) * tail + (j - 1) * moments[j - 2])
        total = sum(
            math.comb(m, j) * self.k_0 ** (m - j) * self.width**j * moments[j]
            for j in range(m + 1)
        )
        return 4.0 * math.pi * self.amplitude * self.width * total

    def support_max(self) -> float:
        return self.k_0 + 6.0 * self.width


class TabulatedSpectrum:
    """Two-column (k, P) table, interpolated linearly in ln k.

    Hard zero outside the table range, which makes every moment converge.
    """

    def __init__(self, k: Sequence[float], p: Sequence[float]):
        k = np.asarray(k, dtype=float)
        p = np.asarray(p, dtype=float)
        if k.ndim != 1 or k.shape != p.shape or k.size < 2:
            raise ParameterError("tabulated spectrum needs matching 1-d k and P arrays, >= 2 rows")
        if not np.all(np.isfinite(k)) or not np.all(np.isfinite(p)):
            raise ParameterError("tabulated spectrum contains non-finite entries")
        if np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise ParameterError("tabulated k values must be positive and strictly increasing")
        if np.any(p < 0):
            raise ParameterError("tabulated P values must be non-negative")
        if not np.any(p > 0):
            raise ParameterError("tabulated spectrum is identically zero")
        self.k = k
        self.p = p

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        out = np.zeros_like(k, dtype=float)
        inside = (k >= self.k[0]) & (k <= self.k[-1])
        if np.any(inside):
            out[inside] = np.interp(np.log(k[inside]), np.log(self.k), self.p)
        return out

    def moment_exact(self, n: int) -> float:
        # per segment P(k) = P_i + beta_i ln(k/k_i); both pieces have
        # elementary antiderivatives against k^m
        m = 2 * n + 2
        k, p = self.k, self.p
        lnk = np.log(k)
        beta = np.diff(p) / np.diff(lnk)
        m1 = m + 1
        km1 = k**m1
        piece_const = p[:-1] * (km1[1:] - km1[:-1]) / m1
        # F(k) = k^(m+1) [ln(k/k_i)/(m+1) - 1/(m+1)^2]
        f_hi = km1[1:] * (np.diff(lnk) / m1 - 1.0 / m1**2)
        f_lo = km1[:-1] * (-1.0 / m1**2)
        piece_log = beta * (f_hi - f_lo)
        return 4.0 * math.pi * float(np.sum(piece_const + piece_log))

    def support_max(self) -> float:
        return float(self.k[-1])


PowerSpectrum = Union[
    TopHatSpectrum, PowerLawGaussianSpectrum, GaussianShellSpectrum, TabulatedSpectrum
]


def moment(spectrum: PowerSpectrum, n: int, quad: QuadratureConfig | None = None) -> float:
    """Return sigma_n^2 using the exact antiderivative for the spectrum.

    ``quad`` is accepted for interface symmetry with
    :func:`moment_quadrature`; the exact path has no quadrature error.
    """
    if n not in (0, 1, 2):
        raise ParameterError(f"moment order must be 0, 1 or 2, got {n}")
    return spectrum.moment_exact(n)


def moment_quadrature(spectrum: PowerSpectrum, n: int, quad: QuadratureConfig | None = None) -> float:
    """sigma_n^2 by adaptive quadrature; the independent cross-check path."""
    if n not in (0, 1, 2):
        raise ParameterError(f"moment order must be 0, 1 or 2, got {n}")
    quad = quad or QuadratureConfig()
    if isinstance(spectrum, PowerLawGaussianSpectrum) and 2 * n + 3 + spectrum.index <= 0:
        raise DivergentMomentError(
            f"moment n={n} diverges at k->0 for spectral index {spectrum.index}"
        )

    def integrand(k):
        return k ** (2 * n + 2) * float(spectrum(k))

    if isinstance(spectrum, TabulatedSpectrum):
        segments = list(zip(spectrum.k[:-1], spectrum.k[1:]))
    elif isinstance(spectrum, TopHatSpectrum):
        segments = [(0.0, spectrum.k_max)]
    else:
        segments = [(0.0, np.inf)]

    total, err = 0.0, 0.0
    for lo, hi in segments:
        val, abserr = _scipy_quad(
            integrand, lo, hi, epsabs=quad.abs_tol, epsrel=quad.rel_tol,
            limit=quad.max_subdivisions,
        )
        total += val
        err += abserr
    total *= 4.0 * math.pi
    err *= 4.0 * math.pi
    if err > max(quad.abs_tol, quad.rel_tol * abs(total)) * 10.0:
        raise NumericalError(
            f"quadrature tolerance not met for moment n={n}: error {err:.3e} on {total:.6e}"
        )
    return total


def spectral_params(spectrum: PowerSpectrum, quad: QuadratureConfig | None = None) -> SpectralMoments:
    """Compute (sigma0, sigma1, sigma2, gamma) with degeneracy flagging."""
    s0sq = moment(spectrum, 0, quad)
    s1sq = moment(spectrum, 1, quad)
    s2sq = moment(spectrum, 2, quad)
    if s0sq <= 0 or s1sq <= 0 or s2sq <= 0:
        raise ParameterError("spectrum has a vanishing moment; sigma_n must all be positive")
    sigma0, sigma1, sigma2 = math.sqrt(s0sq), math.sqrt(s1sq), math.sqrt(s2sq)
    gamma = s1sq / (sigma0 * sigma2)
    if gamma > 1.0 + GAMMA_CONSISTENCY_TOL:
        raise ParameterError(
            f"gamma = {gamma!r} exceeds 1: inconsistent moment integration"
        )
    degenerate = gamma > 1.0 - DEGENERATE_GAMMA_TOL
    if degenerate:
        gamma = min(gamma, 1.0)
    return SpectralMoments(sigma0, sigma1, sigma2, gamma, degenerate)


def load_table(path) -> TabulatedSpectrum:
    """Read a whitespace-separated two-column (k, P) file; '#' comments."""
    rows = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ParameterError(f"{path}:{line_no}: expected two columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ParameterError(f"{path}:{line_no}: non-numeric entry") from exc
    if not rows:
        raise ParameterError(f"{path}: empty spectrum table")
    arr = np.asarray(rows, dtype=float)
    return TabulatedSpectrum(arr[:, 0], arr[:, 1])


_FAMILY_ARITY = {"tophat": 2, "powerlaw": 3, "shell": 3}


def parse_spectrum(text: str) -> PowerSpectrum:
    """Parse a CLI family descriptor, e.g. ``tophat:1,1`` or ``powerlaw:1,0,0.6``.

    Families: ``tophat:amplitude,k_max``,
    ``powerlaw:amplitude,index,k_cut``, ``shell:amplitude,k_0,width``.
    """
    name, _, argtext = text.partition(":")
    name = name.strip().lower()
    if name not in _FAMILY_ARITY:
        raise ParameterError(
            f"unknown spectrum family {name!r}; expected one of {sorted(_FAMILY_ARITY)}"
        )
    try:
        args = [float(a) for a in argtext.split(",")] if argtext else []
    except ValueError as exc:
        raise ParameterError(f"non-numeric spectrum parameter in {text!r}") from exc
    if len(args) != _FAMILY_ARITY[name]:
        raise ParameterError(
            f"{name} takes {_FAMILY_ARITY[name]} parameters, got {len(args)}"
        )
    if name == "tophat":
        return TopHatSpectrum(*args)
    if name == "powerlaw":
        return PowerLawGaussianSpectrum(*args)
    return GaussianShellSpectrum(*args)
