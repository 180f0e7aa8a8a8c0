"""Dense symmetric-matrix numerics.

This module gathers the small linear-algebra kernels used by the estimators
and the data generators: trace powers of covariance-like matrices (with the
Gram duality shortcut when the dimension exceeds the number of rows),
entrywise norms, correlation conversion, symmetric square roots, Haar
orthogonal sampling, the Gaussian quadratic-form moments ``g_k`` and the
standard normal distribution function.

Every function is pure; random draws consume an explicit
:class:`numpy.random.Generator`.

Typical usage:
    import numpy as np
    from elliptical_gof import numkit

    rng = np.random.default_rng(7)
    data = rng.standard_normal((50, 200))
    cov = data.T @ data / 50
    summary = numkit.trace_powers(cov, data)
    print(summary.nu2, numkit.g_k(cov, 4))
"""

import logging
from dataclasses import dataclass
from typing import Final, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import (
    DegenerateCovariateError,
    NotPositiveSemidefiniteError,
    ValidationError,
)

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: p x p symmetric real matrix (covariance, correlation, sample covariance).
SymMatrix: TypeAlias = NDArray[np.float64]
#: n x p observation matrix, rows are observations.
DataMatrix: TypeAlias = NDArray[np.float64]

#: Relative tolerance for the symmetry check.
SYMMETRY_RTOL: Final[float] = 1e-12
#: Eigenvalues below this fraction of the largest are clamped to zero.
PSD_CLAMP_RTOL: Final[float] = 1e-12
#: Eigenvalues below minus this fraction of the largest reject the input.
PSD_REJECT_RTOL: Final[float] = 1e-8


@dataclass(frozen=True)
class SpectralSummary:
    """Trace powers and entrywise norms of a symmetric matrix.

    Attributes:
        nu1: Trace of the matrix.
        nu2: Trace of the second power.
        nu3: Trace of the third power.
        nu4: Trace of the fourth power.
        frob4: Sum of the fourth powers of the entries.
        frob2: Sum of the squares of the entries.

    """

    nu1: float
    nu2: float
    nu3: float
    nu4: float
    frob4: float
    frob2: float

    @property
    def traces(self) -> tuple[float, float, float, float]:
        """Trace powers as a tuple ``(nu1, nu2, nu3, nu4)``."""
        return (self.nu1, self.nu2, self.nu3, self.nu4)


def as_data_matrix(data: ArrayLike) -> DataMatrix:
    """Validate an observation matrix.

    Args:
        data: Array-like with one observation per row.

    Returns:
        A two dimensional float64 array.

    Raises:
        ValidationError: If the array is not two dimensional or not finite.

    """
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        msg = f"Data matrix must be two dimensional, got {matrix.ndim} dims"
        raise ValidationError(msg)
    if not np.all(np.isfinite(matrix)):
        msg = "Data matrix has non-finite entries"
        raise ValidationError(msg)
    return matrix


def check_symmetric(matrix: ArrayLike) -> SymMatrix:
    """Validate a symmetric matrix and return its symmetrized copy.

    Args:
        matrix: Square array-like.

    Returns:
        ``(S + S^T) / 2`` as a float64 array.

    Raises:
        ValidationError: If the matrix is not square, not finite or not
            symmetric to a relative tolerance of ``1e-12``.

    """
    sym = np.asarray(matrix, dtype=np.float64)
    if sym.ndim != 2 or sym.shape[0] != sym.shape[1] or sym.shape[0] == 0:
        msg = f"Matrix must be square and non-empty, got shape {sym.shape}"
        raise ValidationError(msg)
    if not np.all(np.isfinite(sym)):
        msg = "Matrix has non-finite entries"
        raise ValidationError(msg)
    scale = float(np.max(np.abs(sym)))
    if float(np.max(np.abs(sym - sym.T))) > SYMMETRY_RTOL * scale:
        msg = "Matrix is not symmetric"
        raise ValidationError(msg)
    return (sym + sym.T) / 2.0


def _power_traces(sym: SymMatrix) -> tuple[float, float, float, float]:
    """Trace powers of a symmetric matrix with a single multiply."""
    square = sym @ sym
    return (
        float(np.trace(sym)),
        float(np.sum(sym * sym)),
        float(np.sum(square * sym)),
        float(np.sum(square * square)),
    )


def gram_trace_powers(data: DataMatrix) -> tuple[float, float, float, float]:
    """Trace powers of ``X^T X / m`` computed on the smaller Gram side.

    When the dimension exceeds the number of rows the ``m x m`` matrix
    ``X X^T / m`` shares the nonzero spectrum of ``X^T X / m``.

    Args:
        data: ``m x p`` observation matrix.

    Returns:
        ``(nu1, nu2, nu3, nu4)``.

    """
    rows, dim = data.shape
    if dim > rows:
        gram = data @ data.T / rows
    else:
        gram = data.T @ data / rows
    return _power_traces((gram + gram.T) / 2.0)


def trace_powers(
    sym: ArrayLike,
    data: DataMatrix | None = None,
) -> SpectralSummary:
    """Compute trace powers and entrywise norms of a symmetric matrix.

    Args:
        sym: Symmetric ``p x p`` matrix.
        data: Optional ``m x p`` factor with ``sym = data^T data / m``. When
            given and ``p > m`` the trace powers use the Gram matrix.

    Returns:
        The spectral summary of ``sym``.

    Raises:
        ValidationError: If ``sym`` is not symmetric or ``data`` does not
            match its dimension.

    """
    matrix = check_symmetric(sym)
    if data is not None:
        factor = as_data_matrix(data)
        if factor.shape[1] != matrix.shape[0]:
            msg = (
                f"Factor has {factor.shape[1]} columns but matrix has "
                f"dimension {matrix.shape[0]}"
            )
            raise ValidationError(msg)
        if factor.shape[1] > factor.shape[0]:
            nus = gram_trace_powers(factor)
        else:
            nus = _power_traces(matrix)
    else:
        nus = _power_traces(matrix)
    return SpectralSummary(
        *nus,
        frob4=entrywise_norm_pow(matrix, 4),
        frob2=entrywise_norm_pow(matrix, 2),
    )


def entrywise_norm_pow(matrix: ArrayLike, q: int) -> float:
    """Return the entrywise ``l_q`` norm raised to the power ``q``.

    Args:
        matrix: Real matrix.
        q: Either 2 or 4.

    Returns:
        ``sum_ij |M_ij|^q``.

    Raises:
        ValidationError: If ``q`` is not 2 or 4.

    """
    if q not in {2, 4}:
        msg = f"Entrywise norm power must be 2 or 4, got {q}"
        raise ValidationError(msg)
    values = np.asarray(matrix, dtype=np.float64)
    squares = values * values
    if q == 2:
        return float(np.sum(squares))
    return float(np.sum(squares * squares))


def correlation_matrix(sym: ArrayLike) -> SymMatrix:
    """Convert a covariance-like matrix into its correlation matrix.

    Args:
        sym: Symmetric matrix with positive diagonal.

    Returns:
        Matrix with entries ``S_ij / sqrt(S_ii S_jj)`` and unit diagonal.

    Raises:
        DegenerateCovariateError: If a diagonal entry is not positive.

    """
    matrix = check_symmetric(sym)
    diag = np.diag(matrix)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        msg = f"Covariate {int(bad[0])} has non-positive variance"
        raise DegenerateCovariateError(msg)
    scale = 1.0 / np.sqrt(diag)
    corr = matrix * scale[:, None] * scale[None, :]
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def g_k_from_traces(
    traces: tuple[float, float, float, float],
    k: int,
) -> float:
    """Evaluate ``E((z^T M z)^k)`` from the trace powers of ``M``.

    Args:
        traces: ``(nu1, nu2, nu3, nu4)`` of ``M``.
        k: Moment order, 2, 3 or 4.

    Returns:
        The Gaussian quadratic-form moment.

    Raises:
        ValidationError: If ``k`` is not 2, 3 or 4.

    """
    nu1, nu2, nu3, nu4 = traces
    if k == 2:
        return 2.0 * nu2 + nu1**2
    if k == 3:
        return 8.0 * nu3 + 6.0 * nu2 * nu1 + nu1**3
    if k == 4:
        return (
            48.0 * nu4
            + 32.0 * nu3 * nu1
            + 12.0 * nu2**2
            + 12.0 * nu2 * nu1**2
            + nu1**4
        )
    msg = f"g_k is only available for k in {{2, 3, 4}}, got {k}"
    raise ValidationError(msg)


def g_k(sym: ArrayLike, k: int) -> float:
    """Evaluate ``g_k(S) = E((z^T S z)^k)`` for a standard normal ``z``.

    Args:
        sym: Symmetric matrix.
        k: Moment order, 2, 3 or 4.

    Returns:
        The moment, computed from the trace powers of ``sym``.

    """
    return g_k_from_traces(trace_powers(sym).traces, k)


def threshold(x: float, t: float) -> float:
    """Clamp ``x`` to magnitude ``t`` keeping its sign.

    Args:
        x: Real number.
        t: Nonnegative clamp level.

    Returns:
        ``sgn(x) * min(|x|, t)``.

    Raises:
        ValidationError: If ``t`` is negative.

    """
    if t < 0:
        msg = f"Threshold level must be nonnegative, got {t}"
        raise ValidationError(msg)
    return float(np.sign(x) * min(abs(x), t))


def sym_sqrt(sym: ArrayLike) -> SymMatrix:
    """Symmetric square root of a positive semidefinite matrix.

    Args:
        sym: Symmetric PSD matrix.

    Returns:
        Symmetric ``A`` with ``A @ A == sym`` up to round-off.

    Raises:
        NotPositiveSemidefiniteError: If an eigenvalue is below
            ``-1e-8`` times the largest one.

    """
    matrix = check_symmetric(sym)
    eigvals, eigvecs = np.linalg.eigh(matrix)
    top = float(np.max(np.abs(eigvals)))
    if top == 0.0:
        return np.zeros_like(matrix)
    if float(eigvals[0]) < -PSD_REJECT_RTOL * top:
        msg = f"Matrix is not positive semidefinite: eigenvalue {eigvals[0]}"
        raise NotPositiveSemidefiniteError(msg)
    clamped = eigvals < PSD_CLAMP_RTOL * top
    if np.any(clamped):
        logger.debug("Clamp %d eigenvalues to zero", int(np.sum(clamped)))
    eigvals = np.where(clamped, 0.0, eigvals)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def haar_orthogonal(p: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Draw a Haar distributed ``p x p`` orthogonal matrix.

    Args:
        p: Dimension.
        rng: Random generator.

    Returns:
        Orthogonal matrix from the QR factorization of a Gaussian matrix
        with the sign of ``diag(R)`` folded into ``Q``.

    Raises:
        ValidationError: If ``p`` is smaller than one.

    """
    if p < 1:
        msg = f"Dimension must be positive, got {p}"
        raise ValidationError(msg)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def normal_cdf(z: float) -> float:
    """Standard normal distribution function."""
    return float(special.ndtr(z))


def normal_quantile(u: float) -> float:
    """Standard normal quantile function.

    Args:
        u: Probability in the open interval ``(0, 1)``.

    Returns:
        ``Phi^{-1}(u)``.

    Raises:
        ValidationError: If ``u`` is outside ``(0, 1)``.

    """
    if not 0.0 < u < 1.0:
        msg = f"Quantile level must be in (0, 1), got {u}"
        raise ValidationError(msg)
    return float(special.ndtri(u))
