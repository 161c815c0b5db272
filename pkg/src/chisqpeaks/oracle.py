"""Independent end-to-end validation on periodic field lattices.

Gaussian component fields are synthesized spectrally so their lattice
covariances honor the target power spectrum, squared and summed into the
chi-squared field, and its stationary points are found by brute-force
sign-change enumeration with discrete-Hessian classification.  Binned
counts per class are then compared against the predicted density curves.

Lattice localization is inherently approximate: near-degenerate
saddle/extremum confusion at the few-percent level is expected, which is
why the comparison tolerances are set at the ten-percent scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError
from .integrand import DEGENERATE, StationaryClass, classify_matrices
from .spectrum import moment

__all__ = [
    "FieldLattice",
    "PeakCatalog",
    "CompareReport",
    "synthesize_fields",
    "chi2_lattice",
    "count_stationary",
    "compare",
    "measured_moments_spectral",
    "correlation_length",
]

# minimum lattice points per correlation length before synthesis refuses
MIN_POINTS_PER_CORRLEN = 8.0


@dataclass
class FieldLattice:
    """Periodic scalar field sampled on an n^3 grid."""

    values: np.ndarray
    box_size: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ParameterError(f"lattice must be a cubic 3-d array, got shape {v.shape}")
        if self.box_size <= 0:
            raise ParameterError("box size must be positive")
        self.values = v

    @property
    def grid_points(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return self.box_size / self.grid_points


@dataclass
class PeakCatalog:
    """Classified stationary points of one chi-squared realization."""

    indices: np.ndarray
    classes: np.ndarray
    nu_bar: np.ndarray
    box_volume: float
    grid_points: int
    n_degenerate: int = 0
    diagnostics: dict = field(default_factory=dict)

    def counts(self) -> dict:
        return {
            cls.name.lower(): int(np.count_nonzero(self.classes == cls))
            for cls in StationaryClass
        }

    def signed_count(self) -> int:
        c = self.counts()
        return c["minimum"] - c["saddle_one_neg"] + c["saddle_two_neg"] - c["maximum"]

    def to_csv(self) -> str:
        lines = ["index_x,index_y,index_z,class,nu_bar"]
        names = {int(cls): cls.name.lower() for cls in StationaryClass}
        for (i, j, k), cls, nu in zip(self.indices, self.classes, self.nu_bar):
            lines.append(f"{i},{j},{k},{names[int(cls)]},{nu!r}")
        return "\n".join(lines) + "\n"


def correlation_length(spectrum) -> float:
    """Characteristic wavelength 2 pi sqrt(3/2) sigma0/sigma1 of the gradient field.

    Equals 2 pi / k_cut for the default validation family.
    """
    s0sq = moment(spectrum, 0)
    s1sq = moment(spectrum, 1)
    return 2.0 * math.pi * math.sqrt(1.5 * s0sq / s1sq)


def _wavenumbers(n: int, box_size: float) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(n, d=box_size / n)


def synthesize_fields(spectrum, n_fields: int, grid_points: int, box_size: float, seed: int) -> list:
    """Draw independent periodic Gaussian fields with the given spectrum.

    Spectral synthesis: Hermitian coefficients with variance
    P(k) (2 pi / L)^3 per mode, so the lattice variance reproduces
    sigma0^2 = Int d^3k P(k) and every derivative covariance follows.
    """
    if int(n_fields) != n_fields or n_fields < 1:
        raise ParameterError(f"need a positive integer number of fields, got {n_fields}")
    if grid_points < 4:
        raise ParameterError("grid must have at least 4 points per side")
    n = int(grid_points)
    s0sq = moment(spectrum, 0)
    if s0sq == 0.0:
        return [FieldLattice(np.zeros((n, n, n)), box_size) for _ in range(int(n_fields))]

    spacing = box_size / n
    k_nyquist = math.pi / spacing
    if spectrum.support_max() > k_nyquist:
        raise ParameterError(
            f"under-resolved spectrum: support extends to {spectrum.support_max():.4g} "
            f"but the lattice Nyquist wavenumber is {k_nyquist:.4g}"
        )
    ppc = correlation_length(spectrum) / spacing
    if ppc < MIN_POINTS_PER_CORRLEN:
        raise ParameterError(
            f"grid too small: {ppc:.2f} points per correlation length "
            f"(need >= {MIN_POINTS_PER_CORRLEN:g})"
        )

    k1 = _wavenumbers(n, box_size)
    kmag = np.sqrt(
        k1[:, None, None] ** 2 + k1[None, :, None] ** 2 + k1[None, None, :] ** 2
    )
    amplitude = np.sqrt(spectrum(kmag) * (2.0 * math.pi / box_size) ** 3)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x1A77]))
    fields = []
    for _ in range(int(n_fields)):
        white = rng.normal(size=(n, n, n))
        coeff = np.fft.fftn(white) * amplitude
        values = np.fft.ifftn(coeff).real * n**1.5
        fields.append(FieldLattice(values, box_size))
    return fields


def chi2_lattice(fields: list) -> FieldLattice:
    """Pointwise sum of squares of the component fields."""
    if not fields:
        raise ParameterError("need at least one component field")
    shape = fields[0].values.shape
    box = fields[0].box_size
    for f in fields[1:]:
        if f.values.shape != shape or f.box_size != box:
            raise ParameterError("grid mismatch between component fields")
    total = np.zeros(shape)
    for f in fields:
        total += f.values**2
    return FieldLattice(total, box)


def measured_moments_spectral(lattice: FieldLattice):
    """(sigma0^2, sigma1^2, sigma2^2) of one realization via exact spectral
    derivatives: |grad phi|^2 averages to sigma1^2 and (laplacian phi)^2
    to sigma2^2."""
    v = lattice.values
    n = lattice.grid_points
    k1 = _wavenumbers(n, lattice.box_size)
    vhat = np.fft.fftn(v)
    s0sq = float(np.mean((v - v.mean()) ** 2))
    s1sq = 0.0
    kaxes = (k1[:, None, None], k1[None, :, None], k1[None, None, :])
    for ax in range(3):
        grad = np.fft.ifftn(1j * kaxes[ax] * vhat).real
        s1sq += float(np.mean(grad**2))
    k2 = kaxes[0] ** 2 + kaxes[1] ** 2 + kaxes[2] ** 2
    lap = np.fft.ifftn(-k2 * vhat).real
    s2sq = float(np.mean(lap**2))
    return s0sq, s1sq, s2sq


def _pool(arr: np.ndarray, reducer) -> np.ndarray:
    """Reduce each 2x2x2 cell (indexed by its lower corner) separably."""
    out = arr
    for ax in range(3):
        out = reducer(out, np.roll(out, -1, ax))
    return out


def count_stationary(phi: FieldLattice, sigma0: float, classify_tol: float = 1e-9) -> PeakCatalog:
    """Enumerate and classify stationary points of a lattice field.

    A 2x2x2 cell brackets a stationary point when every component of the
    centered-difference gradient changes sign across it; classification
    uses the leading minors of the cell-averaged discrete Hessian.  With
    determinant-sign bookkeeping this makes the signed count a discrete
    degree sum, so it vanishes on the torus up to bracketing noise.
    Maxima are additionally cross-checked against 26-neighbor dominance
    (agreement reported in the diagnostics).
    """
    if sigma0 <= 0:
        raise ParameterError("sigma0 must be positive")
    f = phi.values
    grads = [(np.roll(f, -1, ax) - np.roll(f, 1, ax)) / 2.0 for ax in range(3)]
    if all(not np.any(g) for g in grads):
        raise NumericalError("non-smooth field: gradient vanishes everywhere")
    # candidate cells: every gradient component takes both signs on the
    # 2x2x2 corners (exact zeros count as negative, so a zero sitting on
    # a corner fires exactly one adjacent cell)
    stat = np.ones(f.shape, dtype=bool)
    for g in grads:
        sign = np.where(g > 0.0, 1.0, -1.0)
        stat &= (_pool(sign, np.minimum) < 0.0) & (_pool(sign, np.maximum) > 0.0)
    frac = stat.mean()
    if frac > 0.5:
        raise NumericalError(
            f"non-smooth field: {frac:.1%} of cells look stationary; "
            "the lattice does not resolve the field"
        )

    idx = np.argwhere(stat)
    m = len(idx)
    hess = np.empty((m, 3, 3))
    for ax in range(3):
        second = _pool(np.roll(f, -1, ax) - 2.0 * f + np.roll(f, 1, ax), np.add) / 8.0
        hess[:, ax, ax] = second[stat]
    for ax_a, ax_b in ((0, 1), (0, 2), (1, 2)):
        cross = (
            np.roll(f, (-1, -1), (ax_a, ax_b))
            - np.roll(f, (-1, 1), (ax_a, ax_b))
            - np.roll(f, (1, -1), (ax_a, ax_b))
            + np.roll(f, (1, 1), (ax_a, ax_b))
        ) / 4.0
        cross = _pool(cross, np.add) / 8.0
        hess[:, ax_a, ax_b] = hess[:, ax_b, ax_a] = cross[stat]

    # Newton step from each candidate's cell center estimates where the
    # gradient vanishes; the zero is assigned to the cell containing the
    # estimate and duplicates collapse, so each stationary point is
    # counted exactly once even when it sits near a cell face
    grad_c = np.stack([_pool(g, np.add)[stat] / 8.0 for g in grads], axis=1)
    hnorm = np.max(np.abs(hess.reshape(m, 9)), axis=1) if m else np.zeros(0)
    dets = np.linalg.det(hess) if m else np.zeros(0)
    solvable = np.abs(dets) > 1e-12 * (1.0 + hnorm) ** 3
    hess_safe = np.where(solvable[:, None, None], hess, np.eye(3))
    with np.errstate(all="ignore"):
        step = np.linalg.solve(hess_safe, -grad_c[..., None])[..., 0]
    local = solvable & np.all(np.abs(step) <= 1.0, axis=1) & np.all(np.isfinite(step), axis=1)
    idx, hess, grad_c, step = idx[local], hess[local], grad_c[local], step[local]
    n_grid = f.shape[0]
    target = np.mod(np.floor(idx + 0.5 + step), n_grid).astype(np.int64)
    # prefer the most local estimate for each target cell
    order = np.argsort(np.max(np.abs(step), axis=1), kind="stable")
    target, idx, hess, grad_c, step = (
        target[order], idx[order], hess[order], grad_c[order], step[order],
    )
    flat = (target[:, 0] * n_grid + target[:, 1]) * n_grid + target[:, 2]
    _, first = np.unique(flat, return_index=True)
    keep = np.sort(first)
    idx, hess, grad_c, step = target[keep], hess[keep], grad_c[keep], step[keep]
    cell_corner = np.mod(np.floor(np.argwhere(stat)[local][order][keep] + 0.0), n_grid)
    offset = (np.argwhere(stat)[local][order][keep] + 0.5 + step) - idx  # position within cell

    codes = classify_matrices(hess, classify_tol)
    good = codes != DEGENERATE
    n_degenerate = int(np.count_nonzero(~good))

    # 26-neighbor dominance cross-check for maxima
    dominated = np.ones(f.shape, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                if dx == dy == dz == 0:
                    continue
                dominated &= f > np.roll(f, (dx, dy, dz), (0, 1, 2))
    dom_cell = _pool(dominated, np.logical_or)
    max_mask = np.zeros(f.shape, dtype=bool)
    max_cells = idx[good & (codes == StationaryClass.MAXIMUM)]
    max_mask[tuple(max_cells.T)] = True
    diagnostics = {
        "n_candidates": m,
        "n_dominance_maxima": int(dominated.sum()),
        "n_hessian_maxima": int(len(max_cells)),
        "n_maxima_agree": int(np.count_nonzero(max_mask & dom_cell)),
        "stationary_fraction": float(frac),
    }

    # quadratic-model field value at the refined stationary position
    f_center = _pool(f, np.add)[stat][good] / 8.0
    g_good, h_good, s_good = grad_c[good], hess[good], step[good]
    refined = (
        f_center
        + np.einsum("ij,ij->i", g_good, s_good)
        + 0.5 * np.einsum("ij,ijk,ik->i", s_good, h_good, s_good)
    )
    heights = np.sqrt(np.maximum(refined, 0.0)) / sigma0
    return PeakCatalog(
        indices=idx[good],
        classes=codes[good],
        nu_bar=heights,
        box_volume=phi.box_size**3,
        grid_points=phi.grid_points,
        n_degenerate=n_degenerate,
        diagnostics=diagnostics,
    )


@dataclass
class CompareReport:
    """Lattice counts against predicted density curves."""

    per_class: dict
    signed_count: int
    total_count: int
    signed_poisson_z: float
    bin_edges: np.ndarray
    histograms: dict
    n_catalogs: int

    def to_json(self) -> str:
        payload = {
            "per_class": self.per_class,
            "signed_count": self.signed_count,
            "total_count": self.total_count,
            "signed_poisson_z": self.signed_poisson_z,
            "n_catalogs": self.n_catalogs,
            "bin_edges": list(map(float, self.bin_edges)),
            "histograms": {
                k: {kk: list(map(float, vv)) for kk, vv in v.items()}
                for k, v in self.histograms.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_CLASS_NAMES = {int(cls): cls.name.lower() for cls in StationaryClass}


def compare(catalogs, predicted_records, n_bins: int = 20, min_count: int = 25) -> CompareReport:
    """Binned per-class counts/volume against the predicted density table.

    ``catalogs`` may be a single catalog or a list (seeds aggregate).
    The predicted table must span the catalog height range; classes with
    fewer than ``min_count`` total points raise insufficient-statistics.
    """
    if isinstance(catalogs, PeakCatalog):
        catalogs = [catalogs]
    if not catalogs:
        raise ParameterError("no catalogs to compare")
    volume = sum(c.box_volume for c in catalogs)
    all_nu = np.concatenate([c.nu_bar for c in catalogs])
    all_cls = np.concatenate([c.classes for c in catalogs])
    if all_nu.size == 0:
        raise NumericalError("insufficient statistics: catalogs contain no stationary points")

    by_kind = {}
    for rec in predicted_records:
        if rec.kind == "signed":
            continue
        by_kind.setdefault(rec.kind, []).append(rec)
    missing = [c.name.lower() for c in StationaryClass if c.name.lower() not in by_kind]
    if missing:
        raise ParameterError(f"predicted table is missing classes {missing}")

    grids = {k: np.array([r.nu_bar for r in sorted(v, key=lambda r: r.nu_bar)]) for k, v in by_kind.items()}
    curves = {k: np.array([r.density for r in sorted(v, key=lambda r: r.nu_bar)]) for k, v in by_kind.items()}
    grid = next(iter(grids.values()))
    nu_max = float(all_nu.max())
    if grid[0] > max(float(all_nu.min()), 1e-3) or grid[-1] < nu_max:
        raise ParameterError(
            f"predicted table range [{grid[0]:.3g}, {grid[-1]:.3g}] does not span "
            f"catalog heights [{all_nu.min():.3g}, {nu_max:.3g}]"
        )

    edges = np.linspace(0.0, nu_max * 1.0001, n_bins + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    per_class = {}
    histograms = {}
    for cls in StationaryClass:
        name = cls.name.lower()
        sel = all_cls == cls
        observed = int(np.count_nonzero(sel))
        if observed < min_count:
            raise NumericalError(
                f"insufficient statistics: class {name} has {observed} points "
                f"(need >= {min_count})"
            )
        predicted_total = float(np.trapezoid(curves[name], grids[name]) * volume)
        counts, _ = np.histogram(all_nu[sel], bins=edges)
        width = edges[1] - edges[0]
        histograms[name] = {
            "observed_density": counts / (volume * width),
            "poisson_error": np.sqrt(np.maximum(counts, 1.0)) / (volume * width),
            "predicted_density": np.interp(centers, grids[name], curves[name]),
        }
        per_class[name] = {
            "observed": observed,
            "predicted": predicted_total,
            "ratio": observed / predicted_total if predicted_total > 0 else math.inf,
            "poisson_rel_error": 1.0 / math.sqrt(observed),
        }

    signed = sum(c.signed_count() for c in catalogs)
    total = int(all_cls.size)
    return CompareReport(
        per_class=per_class,
        signed_count=int(signed),
        total_count=total,
        signed_poisson_z=float(signed / math.sqrt(total)),
        bin_edges=edges,
        histograms=histograms,
        n_catalogs=len(catalogs),
    )
