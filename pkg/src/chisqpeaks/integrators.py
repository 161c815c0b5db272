"""Two independent estimators of the normalized sampling expectation.

Both estimate

    <g>_MC = (1/V_N) (1/6) Int dLam dT  Delta(Lam) a^2 b (abc)^(N-4)
             exp(-Q/2) g(Lam, M)

for observables g over the 9-dimensional sample space, returning value
plus standard error.  The Metropolis-Hastings sampler runs an ensemble
of vectorized chains directly on the ordered-eigenvalue wedge; the VEGAS
integrator importance-samples the unordered space through a per-dimension
adaptive grid composed with an arctangent map to the infinite domain, and
estimates the normalization from the same sample stream (so <1> = 1
holds identically).  Sampling is in the eigenvalue coordinates, not the
shell coordinates, which converge slower.

Observables are batch callables ``g(lam, tri) -> (n,) array`` with
``lam`` of shape (n, 3) in ascending order and ``tri`` of shape (n, 6);
adapt a single :class:`~chisqpeaks.integrand.SampleState` function by
broadcasting if needed.

Everything is deterministic for a fixed (seed, configuration) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, ParameterError
from .integrand import (
    DEGENERATE,
    StationaryClass,
    classify_minors,
    hessian_minors_batch,
    log_weight_batch,
    q_exponent_batch,
)

__all__ = [
    "Estimate",
    "McConfig",
    "VegasConfig",
    "SuiteResult",
    "mh_expectation",
    "vegas_expectation",
    "vegas_weight_integral",
    "expectation_suite",
    "obs_one",
    "obs_det_m",
    "obs_min_eigenvalue",
    "make_obs_scaled_eigen_det",
    "make_obs_signed_det",
]

_LOG6 = math.log(6.0)


@dataclass
class Estimate:
    """Monte Carlo value with standard error and run diagnostics."""

    value: float
    std_error: float
    n_samples: int
    diagnostics: dict = field(default_factory=dict)

    def z_score(self, expected: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.value == expected else math.inf
        return (self.value - expected) / self.std_error


@dataclass(frozen=True)
class McConfig:
    """Metropolis-Hastings ensemble configuration.

    ``n_samples`` counts kept samples across all chains; ``n_burn_in`` is
    per chain.  ``proposal_scales`` overrides the nine per-coordinate
    step widths (lam1..3, a, b, c, d, e, f); by default the eigenvalue
    steps shrink as 0.5 / (1 + gamma nu_bar / 3) and the triangular steps
    are 0.5.  ``weight_exponent_scale`` multiplies the exponent Q and
    exists only as a corruption hook for the self-test's mutation check.
    """

    seed: int = 0
    n_samples: int = 200_000
    n_burn_in: int = 2_000
    n_chains: int = 64
    proposal_scales: tuple | None = None
    n_batches: int = 16
    rhat_threshold: float = 1.1
    weight_exponent_scale: float = 1.0

    def __post_init__(self):
        if self.n_samples <= 0 or self.n_chains <= 0 or self.n_burn_in < 0:
            raise ParameterError("n_samples and n_chains must be positive, n_burn_in >= 0")
        if self.n_batches < 2:
            raise ParameterError("batch-means variance needs at least 2 batches")
        if self.proposal_scales is not None:
            scales = np.asarray(self.proposal_scales, dtype=float)
            if scales.shape != (9,) or np.any(scales <= 0):
                raise ParameterError("proposal_scales must be 9 positive step widths")


@dataclass(frozen=True)
class VegasConfig:
    """Adaptive importance-sampling configuration.

    The first ``n_warmup_iterations`` adapt the grid and are discarded;
    the remaining iterations keep adapting (damped by ``damping``) and
    feed the estimates.
    """

    seed: int = 0
    n_iterations: int = 12
    n_evals_per_iteration: int = 10_000
    n_bins: int = 64
    damping: float = 1.5
    n_warmup_iterations: int = 4
    chi2_threshold: float = 5.0
    weight_exponent_scale: float = 1.0

    def __post_init__(self):
        if self.n_bins < 2:
            raise ParameterError("grid needs at least 2 bins per dimension")
        if self.n_iterations < 2:
            raise ParameterError("need at least 2 iterations (one adapt + one measure)")
        if not 0 <= self.n_warmup_iterations < self.n_iterations:
            raise ParameterError("warmup iterations must leave at least one measurement iteration")
        if self.n_evals_per_iteration < 2:
            raise ParameterError("need at least 2 evaluations per iteration")
        if self.damping < 0:
            raise ParameterError("damping must be non-negative")


@dataclass
class SuiteResult:
    """Per-class expectation estimates drawn from one sample stream.

    ``signed`` is derived from the four class estimates as
    min - saddle1 + saddle2 - max at every level (per sample, per
    accumulator, per estimate), so that combination identity is exact by
    construction.  ``class_sums`` exposes the raw accumulated per-class
    numerator sums and ``signed_sum`` their alternating combination.
    """

    minimum: Estimate
    saddle_one_neg: Estimate
    saddle_two_neg: Estimate
    maximum: Estimate
    signed: Estimate
    n_samples: int
    n_degenerate: int
    diagnostics: dict
    class_sums: np.ndarray
    signed_sum: float

    def by_class(self, cls: StationaryClass) -> Estimate:
        return (self.minimum, self.saddle_one_neg, self.saddle_two_neg, self.maximum)[int(cls)]


# ---------------------------------------------------------------------------
# observables


def obs_one(lam, tri):
    return np.ones(lam.shape[0])


def obs_det_m(lam, tri):
    """det(M) = (abc)^2."""
    return (tri[:, 0] * tri[:, 1] * tri[:, 2]) ** 2


def obs_min_eigenvalue(lam, tri):
    return lam[:, 0]


def make_obs_scaled_eigen_det(nu_bar: float, gamma: float) -> Callable:
    """det((3 nu_bar / gamma) diag(lam)) = (3 nu_bar / gamma)^3 lam1 lam2 lam3."""
    s3 = (3.0 * nu_bar / gamma) ** 3

    def g(lam, tri):
        return s3 * lam.prod(axis=1)

    return g


def make_obs_signed_det(nu_bar: float, gamma: float) -> Callable:
    """Signed determinant det((3 nu_bar / gamma) diag(lam) + M)."""

    def g(lam, tri):
        return hessian_minors_batch(lam, tri, nu_bar, gamma)[2]

    return g


def _wrap_observable(g: Callable):
    def eval_fn(lam, tri):
        vals = np.asarray(g(lam, tri), dtype=float)
        return vals.reshape(lam.shape[0], 1), 0

    return eval_fn


def _suite_eval_fn(nu_bar: float, gamma: float, tol: float):
    """Five numerator columns: |det| masked per class plus the all-class total.

    Degenerate samples contribute zero everywhere and are counted.
    """

    def eval_fn(lam, tri):
        m1, m2, m3, norm = hessian_minors_batch(lam, tri, nu_bar, gamma)
        codes = classify_minors(m1, m2, m3, norm, tol)
        absdet = np.abs(m3)
        cols = np.zeros((lam.shape[0], 5))
        good = codes != DEGENERATE
        for cls in StationaryClass:
            mask = codes == cls
            cols[mask, int(cls)] = absdet[mask]
        cols[good, 4] = absdet[good]
        return cols, int(np.count_nonzero(~good))

    return eval_fn


def _check_params(n_fields: int, gamma: float, nu_bar: float):
    if int(n_fields) != n_fields or n_fields < 4:
        raise ParameterError(f"estimators require an integer n_fields >= 4, got {n_fields}")
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie strictly inside (0, 1), got {gamma}")
    if nu_bar <= 0:
        raise ParameterError(f"nu_bar must be positive, got {nu_bar}")


# ---------------------------------------------------------------------------
# Metropolis-Hastings ensemble


def _default_proposal_scales(gamma: float, nu_bar: float) -> np.ndarray:
    lam_scale = 0.5 / (1.0 + gamma * nu_bar / 3.0)
    return np.array([lam_scale] * 3 + [0.5] * 6)


def _mh_run(eval_fn, n_obs, n_fields, gamma, nu_bar, cfg: McConfig):
    """Run the chain ensemble; returns per-column sums, batch sums and diagnostics."""
    _check_params(n_fields, gamma, nu_bar)
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & (2**63 - 1), 0x6D68]))
    n_chains = cfg.n_chains
    steps = -(-cfg.n_samples // n_chains)
    steps = -(-steps // cfg.n_batches) * cfg.n_batches  # equal-size batches
    scales = (
        np.asarray(cfg.proposal_scales, dtype=float)
        if cfg.proposal_scales is not None
        else _default_proposal_scales(gamma, nu_bar)
    )
    q_scale = cfg.weight_exponent_scale

    # overdispersed but weight-positive initial states
    lam = np.sort(rng.normal(-gamma * nu_bar / 3.0, 1.0, (n_chains, 3)), axis=1)
    abc = np.abs(rng.normal(1.2, 0.4, (n_chains, 3))) + 0.2
    def_ = rng.normal(0.0, 1.0, (n_chains, 3))
    tri = np.concatenate([abc, def_], axis=1)

    def log_target(lam_arr, tri_arr):
        lw = log_weight_batch(lam_arr, tri_arr, n_fields)
        return lw - 0.5 * q_scale * q_exponent_batch(lam_arr, tri_arr, nu_bar, gamma)

    logw = log_target(lam, tri)
    n_accept = 0
    n_proposed = 0
    n_degenerate = 0
    batch_sums = np.zeros((n_chains, cfg.n_batches, n_obs))
    # split-halves accumulators for the R-hat mixing diagnostic (9 coords)
    seg_sum = np.zeros((n_chains, 2, 9))
    seg_sq = np.zeros((n_chains, 2, 9))

    total_steps = cfg.n_burn_in + steps
    for step in range(total_steps):
        prop_lam = np.sort(lam + rng.normal(size=(n_chains, 3)) * scales[:3], axis=1)
        prop_tri = np.empty_like(tri)
        prop_tri[:, :3] = np.abs(tri[:, :3] + rng.normal(size=(n_chains, 3)) * scales[3:6])
        prop_tri[:, 3:] = tri[:, 3:] + rng.normal(size=(n_chains, 3)) * scales[6:9]
        prop_logw = log_target(prop_lam, prop_tri)
        with np.errstate(divide="ignore"):
            accept = np.log(rng.random(n_chains)) < prop_logw - logw
        lam[accept] = prop_lam[accept]
        tri[accept] = prop_tri[accept]
        logw[accept] = prop_logw[accept]
        n_proposed += n_chains
        n_accept += int(np.count_nonzero(accept))

        kept = step - cfg.n_burn_in
        if kept < 0:
            continue
        vals, n_deg = eval_fn(lam, tri)
        n_degenerate += n_deg
        batch_sums[:, kept * cfg.n_batches // steps, :] += vals
        state = np.concatenate([lam, tri], axis=1)
        seg = 0 if kept < steps // 2 else 1
        seg_sum[:, seg, :] += state
        seg_sq[:, seg, :] += state * state

    if n_accept == 0:
        raise NumericalError(
            "zero acceptance over the whole run; proposal scales are pathological"
        )

    seg_len = steps // 2
    seg_mean = seg_sum / seg_len
    seg_var = seg_sq / seg_len - seg_mean**2
    within = np.mean(seg_var.reshape(-1, 9), axis=0) * seg_len / max(seg_len - 1, 1)
    between = np.var(seg_mean.reshape(-1, 9), axis=0, ddof=1) * seg_len
    with np.errstate(divide="ignore", invalid="ignore"):
        r_hat = np.sqrt((seg_len - 1) / seg_len + between / (within * seg_len))
    r_hat_max = float(np.nanmax(r_hat))

    diagnostics = {
        "acceptance_rate": n_accept / n_proposed,
        "r_hat": r_hat_max,
        "burn_in_converged": bool(r_hat_max <= cfg.rhat_threshold),
        "n_degenerate": n_degenerate,
        "n_chains": n_chains,
        "steps_per_chain": steps,
    }
    return batch_sums, steps * n_chains, n_degenerate, diagnostics


def _batch_estimate(batch_sums_flat: np.ndarray, batch_size: int, n_total: int) -> tuple:
    """Mean and batch-means standard error from equal-size batch sums."""
    means = batch_sums_flat / batch_size
    value = float(batch_sums_flat.sum() / n_total)
    n_batches = means.size
    se = float(np.sqrt(np.var(means, ddof=1) / n_batches))
    return value, se


def mh_expectation(g, n_fields: int, gamma: float, nu_bar: float, cfg: McConfig) -> Estimate:
    """Estimate <g>_MC with the Metropolis-Hastings ensemble.

    The standard error comes from batch means (``n_chains * n_batches``
    equal-size batches); poor mixing is flagged through the split R-hat
    diagnostic but the estimate is still returned.
    """
    batch_sums, n_total, _, diagnostics = _mh_run(
        _wrap_observable(g), 1, n_fields, gamma, nu_bar, cfg
    )
    batch_size = n_total // batch_sums[:, :, 0].size
    value, se = _batch_estimate(batch_sums[:, :, 0].ravel(), batch_size, n_total)
    return Estimate(value, se, n_total, diagnostics)


# ---------------------------------------------------------------------------
# VEGAS


class _AdaptiveGrid:
    """Separable per-dimension importance grid on the unit cube."""

    def __init__(self, ndim: int, n_bins: int):
        self.ndim = ndim
        self.n_bins = n_bins
        self.edges = np.tile(np.linspace(0.0, 1.0, n_bins + 1), (ndim, 1))

    def sample(self, u: np.ndarray):
        """Map uniforms (n, ndim) through the grid; returns y, log-jacobian, bin indices."""
        z = u * self.n_bins
        idx = np.minimum(z.astype(np.int64), self.n_bins - 1)
        frac = z - idx
        # gather per-dimension edges: edges has shape (ndim, n_bins+1)
        lo = np.stack([self.edges[d, idx[:, d]] for d in range(self.ndim)], axis=1)
        hi = np.stack([self.edges[d, idx[:, d] + 1] for d in range(self.ndim)], axis=1)
        width = hi - lo
        y = lo + frac * width
        with np.errstate(divide="ignore"):
            log_jac = np.sum(np.log(self.n_bins * width), axis=1)
        return y, log_jac, idx

    def update(self, mass: np.ndarray, damping: float):
        """Rebuild bin edges so each bin carries equal damped mass.

        ``mass`` holds the per-dimension, per-bin accumulated f^2 weights.
        Smoothing plus the (1-s)/log(1/s) compression keep the adaptation
        stable; a small floor prevents bins from collapsing to zero width.
        """
        for d in range(self.ndim):
            m = mass[d]
            if m.sum() <= 0.0:
                continue
            sm = np.empty_like(m)
            sm[1:-1] = (m[:-2] + m[1:-1] + m[2:]) / 3.0
            sm[0] = (m[0] + m[1]) / 2.0
            sm[-1] = (m[-2] + m[-1]) / 2.0
            s = sm / sm.sum()
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(s > 0, ((1.0 - s) / np.log(1.0 / np.where(s > 0, s, 1.0))) ** damping, 0.0)
            if damping == 0.0:
                r = np.ones_like(s)
            r = np.maximum(r, 1e-10 * r.max())
            cum = np.concatenate([[0.0], np.cumsum(r)])
            cum /= cum[-1]
            self.edges[d] = np.interp(
                np.linspace(0.0, 1.0, self.n_bins + 1), cum, self.edges[d]
            )
            self.edges[d, 0] = 0.0
            self.edges[d, -1] = 1.0


def _infinite_map(y: np.ndarray, centers: np.ndarray, scales: np.ndarray, positive: np.ndarray):
    """Per-coordinate monotone map from (0,1) onto the physical domain.

    Unbounded coordinates use center + scale * tan(pi (y - 1/2)); the
    positive triangular diagonals use scale * tan(pi y / 2).
    """
    x = np.empty_like(y)
    log_jac = np.zeros(y.shape[0])
    for d in range(y.shape[1]):
        if positive[d]:
            t = 0.5 * math.pi * y[:, d]
            x[:, d] = scales[d] * np.tan(t)
            with np.errstate(divide="ignore"):
                log_jac += math.log(0.5 * math.pi * scales[d]) - 2.0 * np.log(np.cos(t))
        else:
            t = math.pi * (y[:, d] - 0.5)
            x[:, d] = centers[d] + scales[d] * np.tan(t)
            with np.errstate(divide="ignore"):
                log_jac += math.log(math.pi * scales[d]) - 2.0 * np.log(np.abs(np.cos(t)))
    return x, log_jac


_POSITIVE_DIMS = np.array([False] * 3 + [True] * 3 + [False] * 3)


def _vegas_maps(gamma: float, nu_bar: float):
    # eigenvalue mass sits near Tr(Lam) = -gamma nu_bar (the soft constraint
    # in Q); the triangular coordinates are near-unit Gaussians
    centers = np.array([-gamma * nu_bar / 3.0] * 3 + [0.0] * 6)
    scales = np.array([0.7] * 3 + [1.0] * 6)
    return centers, scales


def _vegas_run(eval_fn, n_obs, n_fields, gamma, nu_bar, cfg: VegasConfig):
    """Adaptive-importance run; returns per-observable ratio statistics and
    weight-integral statistics over the measurement iterations."""
    _check_params(n_fields, gamma, nu_bar)
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & (2**63 - 1), 0x7667]))
    grid = _AdaptiveGrid(9, cfg.n_bins)
    centers, scales = _vegas_maps(gamma, nu_bar)
    q_scale = cfg.weight_exponent_scale
    n = cfg.n_evals_per_iteration

    ratios = []  # (n_iters, n_obs)
    ratio_vars = []
    num_means = []
    den_means = []
    den_vars = []
    n_degenerate = 0

    for iteration in range(cfg.n_iterations):
        u = rng.random((n, 9))
        y, log_jac_grid, idx = grid.sample(u)
        x, log_jac_map = _infinite_map(y, centers, scales, _POSITIVE_DIMS)
        lam = np.sort(x[:, :3], axis=1)
        tri = x[:, 3:]
        with np.errstate(invalid="ignore", over="ignore"):
            logw = (
                log_weight_batch(lam, tri, n_fields)
                - 0.5 * q_scale * q_exponent_batch(lam, tri, nu_bar, gamma)
                + log_jac_grid
                + log_jac_map
                - _LOG6
            )
            den = np.where(np.isfinite(logw), np.exp(logw), 0.0)
        active = den > 0.0
        if not np.any(active):
            raise NumericalError("all-zero integrand: every sample carried zero weight")

        # adapt on the weight (importance) distribution per dimension
        mass = np.zeros((9, cfg.n_bins))
        den_sq = den * den
        for d in range(9):
            np.add.at(mass[d], idx[:, d], den_sq)
        grid.update(mass, cfg.damping)

        if iteration < cfg.n_warmup_iterations:
            continue

        # only samples with nonzero weight contribute (or can be degenerate)
        vals_active, n_deg = eval_fn(lam[active], tri[active])
        n_degenerate += n_deg
        vals = np.zeros((n, vals_active.shape[1]))
        vals[active] = vals_active
        num = den[:, None] * vals
        den_mean = den.mean()
        den_var = den.var(ddof=1) / n
        num_mean = num.mean(axis=0)
        num_var = num.var(axis=0, ddof=1) / n
        cov = ((num - num_mean) * (den - den_mean)[:, None]).sum(axis=0) / ((n - 1) * n)
        ratio = num_mean / den_mean
        ratio_var = np.maximum(
            (num_var - 2.0 * ratio * cov + ratio * ratio * den_var) / den_mean**2, 0.0
        )
        ratios.append(ratio)
        ratio_vars.append(ratio_var)
        num_means.append(num_mean)
        den_means.append(den_mean)
        den_vars.append(den_var)

    return {
        "ratios": np.asarray(ratios),
        "ratio_vars": np.asarray(ratio_vars),
        "num_means": np.asarray(num_means),
        "den_means": np.asarray(den_means),
        "den_vars": np.asarray(den_vars),
        "n_measure": len(ratios) * n,
        "n_total": cfg.n_iterations * n,
        "n_degenerate": n_degenerate,
    }


def _combine_iterations(values: np.ndarray, variances: np.ndarray, weights: np.ndarray | None = None):
    """Weighted combination across iterations with a consistency chi2/dof.

    ``weights=None`` means inverse-variance weights from ``variances``.
    """
    m = values.shape[0]
    if weights is None:
        if np.max(variances) == 0.0:
            value = float(values.mean())
            return value, 0.0, 0.0
        floor = np.max(variances) * 1e-12
        weights = 1.0 / np.maximum(variances, floor)
    wsum = weights.sum()
    value = float((weights * values).sum() / wsum)
    var = float((weights**2 * variances).sum() / wsum**2)
    if m > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            chi2 = float(np.sum(np.where(variances > 0, (values - value) ** 2 / np.where(variances > 0, variances, 1.0), 0.0)))
        chi2_dof = chi2 / (m - 1)
    else:
        chi2_dof = 0.0
    return value, math.sqrt(var), chi2_dof


def vegas_expectation(g, n_fields: int, gamma: float, nu_bar: float, cfg: VegasConfig) -> Estimate:
    """Estimate <g>_MC by adaptive importance sampling.

    The normalization integral is estimated from the same samples and
    divided out per iteration, so g = 1 returns exactly 1.  Iterations
    are combined with inverse-variance weights; the scatter among them
    feeds the chi2/dof consistency diagnostic (flagged above the
    configured threshold, never fatal).
    """
    stats = _vegas_run(_wrap_observable(g), 1, n_fields, gamma, nu_bar, cfg)
    value, se, chi2_dof = _combine_iterations(stats["ratios"][:, 0], stats["ratio_vars"][:, 0])
    diagnostics = {
        "chi2_dof": chi2_dof,
        "iterations_consistent": bool(chi2_dof <= cfg.chi2_threshold),
        "n_degenerate": stats["n_degenerate"],
        "n_evals_total": stats["n_total"],
    }
    return Estimate(value, se, stats["n_measure"], diagnostics)


def vegas_weight_integral(n_fields: int, gamma: float, nu_bar: float, cfg: VegasConfig) -> Estimate:
    """Unnormalized 9-dimensional weight integral (the <1> normalization).

    Cross-checks :func:`chisqpeaks.closedform.normalization_vn`, which is
    independent of nu_bar.
    """
    stats = _vegas_run(_wrap_observable(obs_one), 1, n_fields, gamma, nu_bar, cfg)
    value, se, chi2_dof = _combine_iterations(stats["den_means"], stats["den_vars"])
    diagnostics = {
        "chi2_dof": chi2_dof,
        "iterations_consistent": bool(chi2_dof <= cfg.chi2_threshold),
        "n_evals_total": stats["n_total"],
    }
    return Estimate(value, se, stats["n_measure"], diagnostics)


# ---------------------------------------------------------------------------
# per-class suite


def _suite_from_class_stats(values, errors, n_total, n_degenerate, diagnostics, class_sums):
    signed_value = values[0] - values[1] + values[2] - values[3]
    signed_se = math.sqrt(errors[0] ** 2 + errors[1] ** 2 + errors[2] ** 2 + errors[3] ** 2)
    signed_sum = class_sums[0] - class_sums[1] + class_sums[2] - class_sums[3]
    estimates = [
        Estimate(values[i], errors[i], n_total, diagnostics) for i in range(4)
    ]
    return SuiteResult(
        minimum=estimates[0],
        saddle_one_neg=estimates[1],
        saddle_two_neg=estimates[2],
        maximum=estimates[3],
        signed=Estimate(signed_value, signed_se, n_total, diagnostics),
        n_samples=n_total,
        n_degenerate=n_degenerate,
        diagnostics=diagnostics,
        class_sums=class_sums,
        signed_sum=signed_sum,
    )


def expectation_suite(
    n_fields: int,
    gamma: float,
    nu_bar: float,
    cfg,
    classify_tol: float = 1e-12,
) -> SuiteResult:
    """All five class expectations of |det| f(class) from one sample stream.

    Dispatches on the configuration type (:class:`McConfig` runs the
    chain ensemble, :class:`VegasConfig` the adaptive integrator).  The
    VEGAS path combines iterations with one shared weight vector (from
    the all-classes total column) so the signed combination stays exact.

    The signed estimate's standard error adds the four class errors in
    quadrature; for VEGAS it is a mildly conservative bound since the
    class columns are drawn from the same stream.
    """
    eval_fn = _suite_eval_fn(nu_bar, gamma, classify_tol)
    if isinstance(cfg, McConfig):
        batch_sums, n_total, n_degenerate, diagnostics = _mh_run(
            eval_fn, 5, n_fields, gamma, nu_bar, cfg
        )
        batch_size = n_total // batch_sums[:, :, 0].size
        values, errors = [], []
        for j in range(4):
            v, se = _batch_estimate(batch_sums[:, :, j].ravel(), batch_size, n_total)
            values.append(v)
            errors.append(se)
        # signed error from the batch scatter of the combined column
        signed_batches = (
            batch_sums[:, :, 0] - batch_sums[:, :, 1] + batch_sums[:, :, 2] - batch_sums[:, :, 3]
        )
        _, signed_se = _batch_estimate(signed_batches.ravel(), batch_size, n_total)
        class_sums = batch_sums.sum(axis=(0, 1))[:4]
        result = _suite_from_class_stats(
            values, errors, n_total, n_degenerate, diagnostics, class_sums
        )
        result.signed.std_error = signed_se
        return result

    if isinstance(cfg, VegasConfig):
        stats = _vegas_run(eval_fn, 5, n_fields, gamma, nu_bar, cfg)
        # shared weights from the total (all-classes) column keep the
        # signed = min - s1 + s2 - max combination exact after weighting
        ref_vars = stats["ratio_vars"][:, 4]
        if np.max(ref_vars) == 0.0:
            weights = np.ones_like(ref_vars)
        else:
            weights = 1.0 / np.maximum(ref_vars, np.max(ref_vars) * 1e-12)
        values, errors, chi2s = [], [], []
        for j in range(4):
            v, se, chi2 = _combine_iterations(
                stats["ratios"][:, j], stats["ratio_vars"][:, j], weights
            )
            values.append(v)
            errors.append(se)
            chi2s.append(chi2)
        signed_ratios = (
            stats["ratios"][:, 0] - stats["ratios"][:, 1]
            + stats["ratios"][:, 2] - stats["ratios"][:, 3]
        )
        signed_var_proxy = stats["ratio_vars"][:, :4].sum(axis=1)
        _, signed_se, signed_chi2 = _combine_iterations(signed_ratios, signed_var_proxy, weights)
        chi2_dof = max(chi2s + [signed_chi2])
        diagnostics = {
            "chi2_dof": chi2_dof,
            "iterations_consistent": bool(chi2_dof <= cfg.chi2_threshold),
            "n_degenerate": stats["n_degenerate"],
            "n_evals_total": stats["n_total"],
        }
        # accumulated per-class numerator means over measurement iterations
        class_sums = stats["num_means"][:, :4].sum(axis=0)
        result = _suite_from_class_stats(
            values, errors, stats["n_measure"], stats["n_degenerate"], diagnostics, class_sums
        )
        result.signed.std_error = signed_se
        return result

    raise ParameterError(f"unknown integrator configuration type {type(cfg).__name__}")
