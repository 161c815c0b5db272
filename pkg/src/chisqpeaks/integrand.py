"""Geometry of the 9-dimensional density integrand.

A sample point consists of an ordered eigenvalue triple (lam1 <= lam2 <=
lam3) of the scaled second-derivative matrix and six triangular-factor
parameters (a, b, c > 0; d, e, f real) that parametrize the gradient
Gram matrix M = T^T T.  The integrand weight is

    Delta(Lam) * a^2 b (abc)^(N-4) * exp(-Q/2)

with Delta the eigenvalue-repulsion factor and Q the quadratic exponent
below.  Stationary points are classified through the sign pattern of the
matrix (3 nu_bar / gamma) Lam + M, whose eigenvalue signs match those of
the field Hessian.

Batch kernels operate on arrays of shape (n, 3) and (n, 6); the scalar
operations wrap them for single samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DegenerateGammaError, DegenerateHessianError, ParameterError

__all__ = [
    "EigenTriple",
    "TriangularParams",
    "SampleState",
    "ShellCoords",
    "StationaryClass",
    "DEGENERATE",
    "CLASSIFY_TOL",
    "m_from_t",
    "q_exponent",
    "log_measure_weight",
    "hessian_proxy",
    "classify",
    "classify_matrices",
    "shell_from_eigen",
    "eigen_from_shell",
    "shell_jacobian",
    "m_matrix_batch",
    "q_exponent_batch",
    "log_weight_batch",
    "hessian_minors_batch",
    "classify_minors",
]


class StationaryClass(IntEnum):
    """Stationary-point type by number of negative Hessian eigenvalues."""

    MINIMUM = 0
    SADDLE_ONE_NEG = 1
    SADDLE_TWO_NEG = 2
    MAXIMUM = 3


# batch classification code for samples inside the degeneracy tolerance band
DEGENERATE = -1
# default minor tolerance; minor k is compared against tol * (1 + maxnorm)^k
CLASSIFY_TOL = 1e-12


@dataclass(frozen=True)
class EigenTriple:
    """Ordered eigenvalues of the scaled second-derivative matrix.

    Construction sorts rather than rejects; the ordering absorbs the 1/6
    permutation symmetry factor of the eigenvalue measure.
    """

    lam1: float
    lam2: float
    lam3: float

    def __post_init__(self):
        lams = sorted((float(self.lam1), float(self.lam2), float(self.lam3)))
        object.__setattr__(self, "lam1", lams[0])
        object.__setattr__(self, "lam2", lams[1])
        object.__setattr__(self, "lam3", lams[2])

    def as_array(self) -> np.ndarray:
        return np.array([self.lam1, self.lam2, self.lam3])


@dataclass(frozen=True)
class TriangularParams:
    """Upper-triangular factor parameters of the gradient Gram matrix."""

    a: float
    b: float
    c: float
    d: float = 0.0
    e: float = 0.0
    f: float = 0.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.c <= 0:
            raise ParameterError("triangular diagonal entries a, b, c must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e, self.f])


@dataclass(frozen=True)
class SampleState:
    """One 9-dimensional integration point."""

    eigen: EigenTriple
    tri: TriangularParams


@dataclass(frozen=True)
class ShellCoords:
    """(X, r, theta) reparametrization of the eigenvalue triple."""

    x_coord: float
    r: float
    theta: float


def _check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise DegenerateGammaError(f"gamma must lie strictly inside (0, 1), got {gamma}")
    return float(gamma)


# ---------------------------------------------------------------------------
# batch kernels


def m_matrix_batch(tri: np.ndarray) -> np.ndarray:
    """Gram matrices M = T^T T for triangular parameters of shape (n, 6)."""
    a, b, c, d, e, f = (tri[:, i] for i in range(6))
    m = np.empty(tri.shape[:1] + (3, 3))
    m[:, 0, 0] = a * a
    m[:, 0, 1] = m[:, 1, 0] = a * d
    m[:, 0, 2] = m[:, 2, 0] = a * f
    m[:, 1, 1] = b * b + d * d
    m[:, 1, 2] = m[:, 2, 1] = b * e + d * f
    m[:, 2, 2] = c * c + e * e + f * f
    return m


def q_exponent_batch(lam: np.ndarray, tri: np.ndarray, nu_bar: float, gamma: float) -> np.ndarray:
    """Quadratic exponent Q of the sampling weight; symmetric in the eigenvalues."""
    tr = lam.sum(axis=1)
    tr2 = (lam * lam).sum(axis=1)
    shifted = gamma * nu_bar + tr
    return (
        (tri * tri).sum(axis=1)
        + shifted * shifted / (1.0 - gamma * gamma)
        + 2.5 * (3.0 * tr2 - tr * tr)
    )


def log_weight_batch(lam_sorted: np.ndarray, tri: np.ndarray, n_fields: int) -> np.ndarray:
    """log of the measure factor Delta(Lam) a^2 b (abc)^(N-4).

    Expects ascending eigenvalues; -inf flags the measure-zero coincident
    configurations.  Exponentiation is deferred to the estimators so the
    (abc)^(N-4) factor cannot overflow at large N.
    """
    d21 = lam_sorted[:, 1] - lam_sorted[:, 0]
    d31 = lam_sorted[:, 2] - lam_sorted[:, 0]
    d32 = lam_sorted[:, 2] - lam_sorted[:, 1]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    with np.errstate(divide="ignore"):
        log_delta = np.log(d21) + np.log(d31) + np.log(d32)
        la, lb, lc = np.log(a), np.log(b), np.log(c)
    return log_delta + 2.0 * la + lb + (n_fields - 4.0) * (la + lb + lc)


def hessian_minors_batch(lam: np.ndarray, tri: np.ndarray, nu_bar: float, gamma: float):
    """Leading principal minors (m1, m2, m3) of (3 nu_bar/gamma) diag(lam) + M,
    plus the matrix max-norm used for degeneracy scaling.

    m3 is the signed determinant whose sign pattern drives the class
    bookkeeping: sign(m3) = (-1)^(number of negative eigenvalues).
    """
    s = 3.0 * nu_bar / gamma
    a, b, c, d, e, f = (tri[:, i] for i in range(6))
    h11 = s * lam[:, 0] + a * a
    h22 = s * lam[:, 1] + b * b + d * d
    h33 = s * lam[:, 2] + c * c + e * e + f * f
    h12 = a * d
    h13 = a * f
    h23 = b * e + d * f
    m1 = h11
    m2 = h11 * h22 - h12 * h12
    m3 = (
        h11 * (h22 * h33 - h23 * h23)
        - h12 * (h12 * h33 - h23 * h13)
        + h13 * (h12 * h23 - h22 * h13)
    )
    norm = np.max(
        np.abs(np.stack([h11, h22, h33, h12, h13, h23], axis=1)), axis=1
    )
    return m1, m2, m3, norm


def classify_minors(m1, m2, m3, norm, tol: float = CLASSIFY_TOL) -> np.ndarray:
    """Class codes from leading minors; DEGENERATE (-1) inside the tolerance band.

    Minor k is compared against tol * (1 + maxnorm)^k so the band scales
    with the k-th power of the matrix magnitude.
    """
    scale = 1.0 + norm
    t1 = tol * scale
    t2 = tol * scale * scale
    t3 = t2 * scale
    codes = np.full(np.shape(m1), DEGENERATE, dtype=np.int8)
    ok = (np.abs(m1) > t1) & (np.abs(m2) > t2) & (np.abs(m3) > t3)
    is_min = ok & (m1 > 0) & (m2 > 0) & (m3 > 0)
    is_max = ok & (m1 < 0) & (m2 > 0) & (m3 < 0)
    rest = ok & ~is_min & ~is_max
    codes[is_min] = StationaryClass.MINIMUM
    codes[is_max] = StationaryClass.MAXIMUM
    codes[rest & (m3 > 0)] = StationaryClass.SADDLE_TWO_NEG
    codes[rest & (m3 < 0)] = StationaryClass.SADDLE_ONE_NEG
    return codes


def classify_matrices(h: np.ndarray, tol: float = CLASSIFY_TOL) -> np.ndarray:
    """Class codes for a batch (n, 3, 3) of symmetric matrices."""
    h = np.asarray(h, dtype=float)
    m1 = h[..., 0, 0]
    m2 = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] ** 2
    m3 = np.linalg.det(h)
    norm = np.max(np.abs(h.reshape(h.shape[:-2] + (9,))), axis=-1)
    return classify_minors(m1, m2, m3, norm, tol)


# ---------------------------------------------------------------------------
# scalar operations


def m_from_t(tri: TriangularParams) -> np.ndarray:
    """Gram matrix M = T^T T; positive definite, det(M) = a^2 b^2 c^2."""
    return m_matrix_batch(tri.as_array()[None, :])[0]


def q_exponent(state: SampleState, nu_bar: float, gamma: float) -> float:
    """Quadratic exponent Q >= 0 of the sampling weight at one state."""
    _check_gamma(gamma)
    return float(
        q_exponent_batch(
            state.eigen.as_array()[None, :], state.tri.as_array()[None, :], nu_bar, gamma
        )[0]
    )


def log_measure_weight(state: SampleState, n_fields: int) -> float:
    """log measure weight at one state; -inf when eigenvalues coincide."""
    if int(n_fields) != n_fields or n_fields < 4:
        raise ParameterError(f"measure weight needs an integer n_fields >= 4, got {n_fields}")
    return float(
        log_weight_batch(
            state.eigen.as_array()[None, :], state.tri.as_array()[None, :], int(n_fields)
        )[0]
    )


def hessian_proxy(state: SampleState, nu_bar: float, gamma: float) -> np.ndarray:
    """(3 nu_bar / gamma) diag(lam) + M: same eigenvalue signs as the Hessian."""
    if nu_bar <= 0:
        raise ParameterError(f"nu_bar must be positive, got {nu_bar}")
    _check_gamma(gamma)
    return (3.0 * nu_bar / gamma) * np.diag(state.eigen.as_array()) + m_from_t(state.tri)


def classify(h: np.ndarray, tol: float = CLASSIFY_TOL) -> StationaryClass:
    """Classify one symmetric 3x3 matrix by its leading principal minors.

    All minors positive -> minimum; signs (-, +, -) -> maximum; otherwise
    the determinant sign separates the two saddle types.  Raises
    :class:`DegenerateHessianError` when any minor falls inside the
    tolerance band — such samples are reported, never guessed.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (3, 3):
        raise ParameterError(f"expected a 3x3 matrix, got shape {h.shape}")
    if not np.allclose(h, h.T):
        raise ParameterError("classification needs a symmetric matrix")
    if tol <= 0:
        raise ParameterError("tolerance must be positive")
    code = int(classify_matrices(h[None, :, :], tol)[0])
    if code == DEGENERATE:
        raise DegenerateHessianError("a leading minor lies inside the degeneracy band")
    return StationaryClass(code)


# ---------------------------------------------------------------------------
# shell coordinates


def shell_from_eigen(eigen: EigenTriple, nu_bar: float, gamma: float) -> ShellCoords:
    """Map an ordered triple to (X, r, theta); theta lands in [0, pi/3]."""
    _check_gamma(gamma)
    l1, l2, l3 = eigen.lam1, eigen.lam2, eigen.lam3
    x_coord = (gamma * nu_bar + l1 + l2 + l3) / math.sqrt(1.0 - gamma * gamma)
    x = 0.5 * math.sqrt(5.0) * (2.0 * l3 - l2 - l1)
    y = 0.5 * math.sqrt(15.0) * (l2 - l1)
    r = math.hypot(x, y)
    theta = math.atan2(y, x) if r > 0 else 0.0
    return ShellCoords(x_coord, r, theta)


def eigen_from_shell(shell: ShellCoords, nu_bar: float, gamma: float) -> EigenTriple:
    """Inverse of :func:`shell_from_eigen` on r >= 0, theta in [0, pi/3]."""
    _check_gamma(gamma)
    if shell.r < 0:
        raise ParameterError("shell radius must be non-negative")
    if not 0.0 <= shell.theta <= math.pi / 3.0 + 1e-12:
        raise ParameterError("shell angle must lie in [0, pi/3]")
    base = (shell.x_coord * math.sqrt(1.0 - gamma * gamma) - gamma * nu_bar) / 3.0
    amp = 2.0 * shell.r / (3.0 * math.sqrt(5.0))
    l1 = base - amp * math.sin(shell.theta + math.pi / 6.0)
    l2 = base + amp * math.sin(shell.theta - math.pi / 6.0)
    l3 = base + amp * math.cos(shell.theta)
    return EigenTriple(l1, l2, l3)


def shell_jacobian(r: float, gamma: float) -> float:
    """|d(lam1, lam2, lam3) / d(X, r, theta)| = 2 sqrt(3) sqrt(1-gamma^2) r / 45."""
    _check_gamma(gamma)
    return 2.0 * math.sqrt(3.0) * math.sqrt(1.0 - gamma * gamma) * r / 45.0
