"""Analytic identity suite: every Monte Carlo pathway against exact values.

The integrand admits a family of exact expectations (polynomial moments
of the weight distribution), the weight integral has a closed form, and
the two matrix-measure reductions (symmetric 3x3 via eigenvalues,
rectangular 4x3 via a triangular factor) can each be checked by two
independent Monte Carlo estimates.  A corrupted weight exponent breaks
the signed identity, which is what the mutation hook is for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .closedform import log_multivariate_gamma, normalization_vn, signed_expectation
from .integrators import (
    McConfig,
    VegasConfig,
    make_obs_scaled_eigen_det,
    make_obs_signed_det,
    mh_expectation,
    obs_det_m,
    obs_min_eigenvalue,
    vegas_expectation,
    vegas_weight_integral,
)

__all__ = ["IdentityResult", "run_identity_suite", "symmetric_measure_check", "rectangular_measure_check"]


@dataclass
class IdentityResult:
    """Outcome of one identity check."""

    name: str
    formula: str
    method: str
    expected: float
    value: float
    std_error: float

    @property
    def z(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.value == self.expected else math.inf
        return (self.value - self.expected) / self.std_error

    def passed(self, z_threshold: float = 4.0) -> bool:
        return abs(self.z) < z_threshold

    def line(self, z_threshold: float = 4.0) -> str:
        status = "pass" if self.passed(z_threshold) else "FAIL"
        return (
            f"[{status}] {self.name} ({self.method}): {self.value:.6g} "
            f"vs {self.expected:.6g} (z = {self.z:+.2f})  {self.formula}"
        )


def symmetric_measure_check(seed: int = 0, n_samples: int = 400_000) -> IdentityResult:
    """Eigenvalue-measure identity for symmetric 3x3 matrices.

    Int (dH) g(H) over the 6 independent entries equals
    (1 / (2^3 3!)) Vol[O(3)] Int dLam Delta(Lam) g(Lam) for rotation
    invariant g; here g(H) = exp(-Tr H^2 / 2).  Both sides are estimated
    by importance sampling from standard normals.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC3]))
    # left side: entries h11,h22,h33,h12,h13,h23 ~ N(0,1); the off-diagonal
    # double count in Tr H^2 leaves a non-trivial average
    off = rng.normal(size=(n_samples, 3))
    lhs_samples = (2.0 * math.pi) ** 3 * np.exp(-0.5 * (off * off).sum(axis=1))
    lhs = float(lhs_samples.mean())
    lhs_se = float(lhs_samples.std(ddof=1) / math.sqrt(n_samples))
    # right side: eigenvalues ~ N(0,1)^3, Gaussian weight cancels against
    # the sampling density leaving the repulsion factor
    lam = rng.normal(size=(n_samples, 3))
    delta = np.abs(
        (lam[:, 0] - lam[:, 1]) * (lam[:, 0] - lam[:, 2]) * (lam[:, 1] - lam[:, 2])
    )
    vol_o3 = 16.0 * math.pi**2
    factor = vol_o3 / 48.0 * (2.0 * math.pi) ** 1.5
    rhs = float(factor * delta.mean())
    rhs_se = float(factor * delta.std(ddof=1) / math.sqrt(n_samples))
    return IdentityResult(
        name="symmetric-eigen-measure",
        formula="Int(dH) g = Vol[O(3)]/48 Int(dLam) Delta(Lam) g, g = exp(-TrH^2/2)",
        method="plain-mc",
        expected=rhs,
        value=lhs,
        std_error=math.hypot(lhs_se, rhs_se),
    )


def rectangular_measure_check(
    seed: int = 0, n_lhs: int = 400_000, n_rhs: int = 1_000_000
) -> IdentityResult:
    """Triangular-factor measure identity for 4x3 matrices.

    E_(A ~ N(0,1)^(4x3))[g(A^T A)] equals the triangular-parameter form
    with density a^3 b^2 c (abc)^(n-4) and prefactor
    8 pi^(3n/2) / Gamma_3(n/2), n = 4; here g(M) = exp(-Tr M / 2), for
    which the right side reduces to (pi/32) E[a^3 b^2 c] under
    half-Gaussian sampling of the diagonal.
    """
    n = 4
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD4]))
    a_mat = rng.normal(size=(n_lhs, n, 3))
    lhs_samples = np.exp(-0.5 * (a_mat * a_mat).sum(axis=(1, 2)))
    lhs = float(lhs_samples.mean())
    lhs_se = float(lhs_samples.std(ddof=1) / math.sqrt(n_lhs))

    # right side: a,b,c ~ |N(0, 1/2)|, d,e,f ~ N(0, 1/2); the exp(-Tr M)
    # integrand cancels against the sampling density, leaving
    # (2 pi)^(-6) * 8 pi^(3n/2)/Gamma_3(n/2) * (pi^3/8) * E[a^3 b^2 c]
    abc = np.abs(rng.normal(scale=math.sqrt(0.5), size=(n_rhs, 3)))
    weights = abc[:, 0] ** 3 * abc[:, 1] ** 2 * abc[:, 2]
    prefactor = (
        (2.0 * math.pi) ** -6.0
        * 8.0
        * math.pi ** (1.5 * n)
        / math.exp(log_multivariate_gamma(3, n / 2.0))
        * math.pi**3
        / 8.0
    )
    rhs = float(prefactor * weights.mean())
    rhs_se = float(prefactor * weights.std(ddof=1) / math.sqrt(n_rhs))
    return IdentityResult(
        name="rectangular-triangular-measure",
        formula="E[g(AtA)] = 8 pi^(3n/2)/Gamma_3(n/2) (dT)-form, n=4, g = exp(-TrM/2)",
        method="plain-mc",
        expected=rhs,
        value=lhs,
        std_error=math.hypot(lhs_se, rhs_se),
    )


def run_identity_suite(
    seed: int = 0,
    samples_scale: float = 1.0,
    z_threshold: float = 4.0,
    weight_exponent_scale: float = 1.0,
) -> list[IdentityResult]:
    """Run every identity with both estimators where applicable.

    ``samples_scale`` shrinks/grows all sample counts; the default sizes
    keep each Monte Carlo error well under the separation the threshold
    needs.  ``weight_exponent_scale`` corrupts the exponent Q (mutation
    hook; anything but 1.0 must make the signed identities fail).
    """
    gamma, nu_bar = 0.6, 1.0
    mh_cfg = McConfig(
        seed=seed,
        n_samples=max(int(300_000 * samples_scale), 2_000),
        n_burn_in=1_000,
        weight_exponent_scale=weight_exponent_scale,
    )
    vg_cfg = VegasConfig(
        seed=seed,
        n_evals_per_iteration=max(int(20_000 * samples_scale), 500),
        weight_exponent_scale=weight_exponent_scale,
    )
    results = []

    for n_fields in (4, 5, 6):
        expected = float((n_fields - 1) * (n_fields - 2) * (n_fields - 3))
        formula = "<det M> = (N-1)(N-2)(N-3)"
        for method, runner in (("mh", mh_expectation), ("vegas", vegas_expectation)):
            est = runner(obs_det_m, n_fields, gamma, nu_bar, mh_cfg if method == "mh" else vg_cfg)
            results.append(
                IdentityResult(f"det-M N={n_fields}", formula, method, expected, est.value, est.std_error)
            )

    expected_min = -3.0 / math.sqrt(10.0 * math.pi) - gamma * nu_bar / 3.0
    for method, runner in (("mh", mh_expectation), ("vegas", vegas_expectation)):
        est = runner(obs_min_eigenvalue, 4, gamma, nu_bar, mh_cfg if method == "mh" else vg_cfg)
        results.append(
            IdentityResult(
                "min-eigenvalue",
                "<min lam> = -3/sqrt(10 pi) - gamma nu_bar/3",
                method,
                expected_min,
                est.value,
                est.std_error,
            )
        )

    for nb in (0.5, 1.0, 2.0):
        expected = 3.0 * nb**4 - nb**6
        g = make_obs_scaled_eigen_det(nb, gamma)
        for method, runner in (("mh", mh_expectation), ("vegas", vegas_expectation)):
            est = runner(g, 4, gamma, nb, mh_cfg if method == "mh" else vg_cfg)
            results.append(
                IdentityResult(
                    f"scaled-eigen-det nu={nb}",
                    "<det(3 nu/gamma Lam)> = 3 nu^4 - nu^6",
                    method,
                    expected,
                    est.value,
                    est.std_error,
                )
            )

    for n_fields, nb in ((4, 0.5), (4, 1.0), (4, 2.0), (4, 4.0), (5, 1.0), (5, 2.0)):
        expected = signed_expectation(n_fields, nb)
        est = vegas_expectation(make_obs_signed_det(nb, gamma), n_fields, gamma, nb, vg_cfg)
        results.append(
            IdentityResult(
                f"signed-det N={n_fields} nu={nb}",
                "<det(3 nu/gamma Lam + M)> = (N-1)(N-2)(N-3) - 3(N-1)^2 nu^2 + 3N nu^4 - nu^6",
                "vegas",
                expected,
                est.value,
                est.std_error,
            )
        )
    est = mh_expectation(make_obs_signed_det(1.0, gamma), 4, gamma, 1.0, mh_cfg)
    results.append(
        IdentityResult(
            "signed-det N=4 nu=1.0",
            "<det(3 nu/gamma Lam + M)> = (N-1)(N-2)(N-3) - 3(N-1)^2 nu^2 + 3N nu^4 - nu^6",
            "mh",
            signed_expectation(4, 1.0),
            est.value,
            est.std_error,
        )
    )

    for n_fields in (4, 6):
        for g in (0.3, 0.9):
            est = vegas_weight_integral(n_fields, g, 1.0, replace(vg_cfg, seed=seed + 1))
            results.append(
                IdentityResult(
                    f"weight-normalization N={n_fields} gamma={g}",
                    "V_N = 2^(3(N-1)/2)/(5^(5/2) 3^3) pi sqrt(1-gamma^2) Gamma_3((N-1)/2)",
                    "vegas",
                    normalization_vn(n_fields, g),
                    est.value,
                    est.std_error,
                )
            )

    n_meas = max(int(400_000 * samples_scale), 10_000)
    results.append(symmetric_measure_check(seed, n_meas))
    results.append(rectangular_measure_check(seed, n_meas, max(int(1_000_000 * samples_scale), 10_000)))
    return results
