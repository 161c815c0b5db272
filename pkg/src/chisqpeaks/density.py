"""Per-class stationary-point number densities and height sweeps.

Each density is the closed-form prefactor alpha(sigma0, sigma1, nu_bar)
times the height distribution times a Monte Carlo class expectation from
:func:`chisqpeaks.integrators.expectation_suite`.  Densities are per
unit nu_bar in units of sigma1^3/sigma0^3 (an inverse volume); divide by
sigma0 for densities per unit nu.

A sweep dispatches grid points to a worker pool; every point derives its
own generator seed from (master seed, point index), so results are
independent of the worker count and byte-identical across reruns.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from io import StringIO

import numpy as np

from . import __version__
from .closedform import chi2_pdf, prefactor_alpha, signed_density
from .errors import ParameterError
from .integrators import Estimate, McConfig, VegasConfig, expectation_suite

__all__ = [
    "CLASS_KINDS",
    "DensityRecord",
    "SweepSpec",
    "ConsistencyReport",
    "default_grid",
    "density_point",
    "density_sweep",
    "consistency_check",
    "records_to_csv",
    "manifest_json",
]

CLASS_KINDS = ("minimum", "saddle_one_neg", "saddle_two_neg", "maximum", "signed")


@dataclass(frozen=True)
class DensityRecord:
    """One (height, class) row of a sweep table."""

    nu_bar: float
    kind: str
    density: float
    std_error: float
    n_samples: int


@dataclass(frozen=True)
class SweepSpec:
    """Inputs of a density sweep over a nu_bar grid."""

    n_fields: int
    gamma: float
    sigma0: float = 1.0
    sigma1: float = 1.0
    nu_bar_grid: tuple = ()
    config: McConfig | VegasConfig = VegasConfig()

    def __post_init__(self):
        if int(self.n_fields) != self.n_fields or self.n_fields < 4:
            raise ParameterError(
                f"sweeps require an integer n_fields >= 4, got {self.n_fields}"
            )
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ParameterError("sigma0 and sigma1 must be positive")
        grid = tuple(float(v) for v in self.nu_bar_grid)
        if any(v <= 0 for v in grid):
            raise ParameterError("every nu_bar grid value must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError("nu_bar grid must be strictly increasing")
        object.__setattr__(self, "nu_bar_grid", grid)


def default_grid(nu_min: float = 0.05, nu_max: float = 8.0, count: int = 80) -> tuple:
    """Log-spaced default covering the interesting dynamic range."""
    if count < 1 or nu_min <= 0 or nu_max <= nu_min:
        raise ParameterError("grid needs nu_max > nu_min > 0 and count >= 1")
    if count == 1:
        return (float(nu_min),)
    return tuple(np.geomspace(nu_min, nu_max, count))


def _scaled(est: Estimate, factor: float) -> tuple:
    return factor * est.value, abs(factor) * est.std_error


def density_point(
    n_fields: int,
    gamma: float,
    sigma0: float,
    sigma1: float,
    nu_bar: float,
    cfg,
) -> list[DensityRecord]:
    """Five density records (four classes plus signed) at one height.

    The constant prefactor propagates errors linearly; the signed row is
    the exact alternating combination of the class rows.
    """
    suite = expectation_suite(n_fields, gamma, nu_bar, cfg)
    factor = prefactor_alpha(sigma0, sigma1, nu_bar) * chi2_pdf(n_fields, nu_bar)
    estimates = (
        suite.minimum,
        suite.saddle_one_neg,
        suite.saddle_two_neg,
        suite.maximum,
        suite.signed,
    )
    records = []
    for kind, est in zip(CLASS_KINDS, estimates):
        value, err = _scaled(est, factor)
        records.append(DensityRecord(float(nu_bar), kind, value, err, est.n_samples))
    return records


def _derive_seed(master_seed: int, index: int) -> int:
    words = np.random.SeedSequence([int(master_seed) & (2**63 - 1), index]).generate_state(2)
    return int(words[0]) | (int(words[1]) << 32)


def _point_task(args):
    spec, nu_bar, index = args
    cfg = dataclasses.replace(spec.config, seed=_derive_seed(spec.config.seed, index))
    try:
        return index, density_point(
            spec.n_fields, spec.gamma, spec.sigma0, spec.sigma1, nu_bar, cfg
        ), None
    except Exception as exc:  # per-point failures recorded, sweep continues
        return index, None, f"{type(exc).__name__}: {exc}"


def density_sweep(spec: SweepSpec, n_threads: int = 1):
    """Run every grid point; returns (records, meta).

    Point failures are recorded in ``meta['failures']`` and the sweep
    continues.  Records come back in grid order regardless of worker
    scheduling.
    """
    start = time.perf_counter()
    tasks = [(spec, nu, i) for i, nu in enumerate(spec.nu_bar_grid)]
    results = {}
    failures = {}
    if n_threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_threads) as pool:
            for index, recs, err in pool.map(_point_task, tasks):
                results[index] = recs
                if err:
                    failures[spec.nu_bar_grid[index]] = err
    else:
        for task in tasks:
            index, recs, err = _point_task(task)
            results[index] = recs
            if err:
                failures[spec.nu_bar_grid[index]] = err
    records = []
    for i in range(len(tasks)):
        if results.get(i):
            records.extend(results[i])
    meta = {
        "wall_clock_s": time.perf_counter() - start,
        "n_points": len(tasks),
        "n_failed": len(failures),
        "failures": failures,
    }
    return records, meta


@dataclass
class ConsistencyReport:
    """Signed-density self-consistency of a sweep table."""

    nu_bars: list
    z_scores: list
    max_abs_z: float
    z_threshold: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"signed-density consistency: {status} "
            f"(max |z| = {self.max_abs_z:.2f} over {len(self.z_scores)} points, "
            f"threshold {self.z_threshold:g})"
        )


def consistency_check(
    records: list,
    n_fields: int,
    sigma0: float = 1.0,
    sigma1: float = 1.0,
    z_threshold: float = 4.0,
) -> ConsistencyReport:
    """Compare each grid point's signed Monte Carlo row to the closed form.

    The 4-sigma default threshold is deliberately wide to absorb the
    multiplicity of a full sweep (a correct 160-point run crosses it with
    probability ~1%).  Raises on tables missing classes at any point.
    """
    by_nu = {}
    for rec in records:
        by_nu.setdefault(rec.nu_bar, {})[rec.kind] = rec
    nu_bars, z_scores = [], []
    for nu_bar in sorted(by_nu):
        rows = by_nu[nu_bar]
        missing = [k for k in CLASS_KINDS if k not in rows]
        if missing:
            raise ParameterError(
                f"incomplete table at nu_bar = {nu_bar}: missing {missing}"
            )
        signed = rows["signed"]
        expected = signed_density(n_fields, nu_bar, sigma0, sigma1)
        if signed.std_error > 0:
            z = (signed.density - expected) / signed.std_error
        else:
            z = 0.0 if signed.density == expected else np.inf
        nu_bars.append(nu_bar)
        z_scores.append(float(z))
    max_abs = max((abs(z) for z in z_scores), default=0.0)
    return ConsistencyReport(nu_bars, z_scores, max_abs, z_threshold, max_abs < z_threshold)


# ---------------------------------------------------------------------------
# emission


def records_to_csv(records: list, manifest: dict | None = None) -> str:
    """Deterministic CSV text; the manifest is embedded as '#' comments.

    Floats are rendered with shortest round-trip repr, so identical
    inputs and seeds yield byte-identical output.
    """
    out = StringIO()
    if manifest is not None:
        out.write("# chisqpeaks density table\n")
        out.write("# config: " + json.dumps(manifest, sort_keys=True, default=str) + "\n")
    out.write("nu_bar,class,density,std_error,n_samples\n")
    for rec in records:
        out.write(
            f"{rec.nu_bar!r},{rec.kind},{rec.density!r},{rec.std_error!r},{rec.n_samples}\n"
        )
    return out.getvalue()


def manifest_json(run_config: dict, seed: int, wall_clock_s: float, extra: dict | None = None) -> str:
    """Reproducibility manifest: inputs, seed, versions, wall clock."""
    manifest = {
        "run_config": run_config,
        "seed": seed,
        "versions": {
            "chisqpeaks": __version__,
            "numpy": np.__version__,
        },
        "wall_clock_s": wall_clock_s,
    }
    if extra:
        manifest.update(extra)
    return json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n"
