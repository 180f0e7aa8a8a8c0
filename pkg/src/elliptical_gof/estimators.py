"""Kurtosis estimators, the discrepancy statistic and its variance.

Two estimates of the common kurtosis of an elliptical vector are built on
separate halves of the sample: ``kappa_tilde`` averages the entrywise
kurtosis of the first half, ``kappa_check`` plugs estimates of
``var(||x||^2)``, ``tr(Sigma)`` and ``tr(Sigma^2)`` from the second half into
the coordinate-free kurtosis formula. Their rescaled difference ``T_n`` is
normalized by ``sigma_hat_n`` built from the full sample.

Every ratio follows the zero-denominator convention of
:func:`guarded_ratio`: a fraction whose denominator vanishes equals one.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ValidationError
from .numkit import (
    DataMatrix,
    SpectralSummary,
    SymMatrix,
    as_data_matrix,
    correlation_matrix,
    entrywise_norm_pow,
    g_k_from_traces,
    gram_trace_powers,
    threshold,
    trace_powers,
)

#: Create logger for this module.
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KurtosisPair:
    """The two competing kurtosis estimates.

    Attributes:
        kappa_tilde: Average entrywise kurtosis of the first half.
        kappa_check: Coordinate-free kurtosis estimate of the second half.
        half_size: Number of rows ``m = n / 2`` in each half.

    """

    kappa_tilde: float
    kappa_check: float
    half_size: int


@dataclass(frozen=True)
class VarianceEstimate:
    """Estimate of the variance of ``T_n`` and its ingredients.

    Attributes:
        sigma1_sq: Correlation part ``sigma_hat_{n,1}^2``.
        sigma2_sq: Trace part ``sigma_hat_{n,2}^2``.
        c_hat: Finite-sample correction of the correlation part.
        beta_hat: Eighth-moment ratio entering ``c_hat``.
        gamma_hat: Fourth/sixth-moment ratio entering ``c_hat``.
        t_p: Threshold level ``p^{-3/4} log(p)``.

    """

    sigma1_sq: float
    sigma2_sq: float
    c_hat: float
    beta_hat: float
    gamma_hat: float
    t_p: float

    @property
    def sigma_sq_total(self) -> float:
        """Sum of both variance parts."""
        return self.sigma1_sq + self.sigma2_sq


@dataclass(frozen=True)
class PopulationParams:
    """Population quantities behind the kurtosis identity.

    Attributes:
        varsigma_sq: ``var(||x||^2)``.
        nu: Spectral summary of the covariance matrix.
        kappa: Common kurtosis ``3 (varsigma^2 + nu1^2) / (nu1^2 + 2 nu2)``.

    """

    varsigma_sq: float
    nu: SpectralSummary
    kappa: float


def guarded_ratio(num: float, den: float) -> float:
    """Divide, returning one when the denominator vanishes."""
    if den == 0:
        return 1.0
    return float(num) / float(den)


def _guarded_divide(
    num: NDArray[np.float64],
    den: NDArray[np.float64],
) -> NDArray[np.float64]:
    return np.divide(num, den, out=np.ones_like(num), where=den != 0)


def _half_matrix(data: ArrayLike) -> DataMatrix:
    matrix = as_data_matrix(data)
    if matrix.shape[0] < 1 or matrix.shape[1] < 1:
        msg = f"Sample needs at least one row and column, got {matrix.shape}"
        raise ValidationError(msg)
    return matrix


def kappa_tilde(x_half: ArrayLike) -> float:
    """Average of the entrywise kurtosis estimates.

    Args:
        x_half: ``m x p`` half sample.

    Returns:
        ``(1/p) sum_j mean(x_j^4) / mean(x_j^2)^2``, each ratio guarded.

    """
    matrix = _half_matrix(x_half)
    squares = matrix * matrix
    second = np.mean(squares, axis=0)
    fourth = np.mean(squares * squares, axis=0)
    return float(np.mean(_guarded_divide(fourth, second * second)))


def varsigma_check(q: ArrayLike) -> float:
    """U-statistic ``(1 / (2 C(m,2))) sum_{i<i'} (q_i - q_i')^2``.

    The pairwise average equals the unbiased sample variance, which is
    evaluated in linear time.

    Args:
        q: Sequence of ``m >= 2`` reals, typically squared row norms.

    Returns:
        The sample variance with denominator ``m - 1``.

    Raises:
        ValidationError: If fewer than two values are given.

    """
    values = np.asarray(q, dtype=np.float64).ravel()
    if values.size < 2:
        msg = f"Variance needs at least two values, got {values.size}"
        raise ValidationError(msg)
    return float(np.var(values, ddof=1))


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        msg = f"Sample size must be even and at least 2, got {n}"
        raise ValidationError(msg)


def kappa_check(x_half: ArrayLike, n: int) -> float:
    """Coordinate-free kurtosis estimate from the second half.

    Args:
        x_half: ``n/2 x p`` half sample.
        n: Full sample size, even.

    Returns:
        ``3 (varsigma^2 + nu1^2) / (nu1^2 + 2 (nu2 - (2/n) nu1^2))``.

    Raises:
        ValidationError: If ``n`` is odd or the half does not have
            ``n / 2`` rows.

    """
    _check_even(n)
    matrix = _half_matrix(x_half)
    if matrix.shape[0] != n // 2:
        msg = f"Half sample must have {n // 2} rows, got {matrix.shape[0]}"
        raise ValidationError(msg)
    nu1, nu2, _, _ = gram_trace_powers(matrix)
    spread = varsigma_check(np.sum(matrix * matrix, axis=1))
    return guarded_ratio(
        3.0 * (spread + nu1**2),
        nu1**2 + 2.0 * (nu2 - (2.0 / n) * nu1**2),
    )


def kurtosis_pair(data: ArrayLike) -> KurtosisPair:
    """Evaluate both kurtosis estimates on the two halves of a sample.

    Args:
        data: ``n x p`` sample with even ``n``.

    Returns:
        ``kappa_tilde`` from rows ``1..n/2`` and ``kappa_check`` from rows
        ``n/2+1..n``.

    """
    matrix = as_data_matrix(data)
    n = matrix.shape[0]
    _check_even(n)
    half = n // 2
    return KurtosisPair(
        kappa_tilde=kappa_tilde(matrix[:half]),
        kappa_check=kappa_check(matrix[half:], n),
        half_size=half,
    )


def t_statistic(
    kappa_tilde: float,
    kappa_check: float,
    n: int,
    p: int,
) -> float:
    """Rescaled kurtosis discrepancy ``sqrt(pn/2) ((kt - kc)/3 + 4/n)``.

    Raises:
        ValidationError: If ``n`` is odd or ``p`` is not positive.

    """
    _check_even(n)
    if p < 1:
        msg = f"Dimension must be positive, got {p}"
        raise ValidationError(msg)
    return math.sqrt(p * n / 2.0) * (
        (kappa_tilde - kappa_check) / 3.0 + 4.0 / n
    )


@dataclass(frozen=True)
class _FullSample:
    """Full-sample quantities shared by the variance estimators."""

    n: int
    p: int
    cov: SymMatrix
    traces: tuple[float, float, float, float]
    sq_norms: NDArray[np.float64]

    @classmethod
    def from_data(cls, data: ArrayLike) -> "_FullSample":
        matrix = as_data_matrix(data)
        n, p = matrix.shape
        if n < 2 or p < 1:
            msg = f"Full sample needs n >= 2 and p >= 1, got {matrix.shape}"
            raise ValidationError(msg)
        cov = matrix.T @ matrix / n
        return cls(
            n=n,
            p=p,
            cov=cov,
            traces=trace_powers(cov, matrix).traces,
            sq_norms=np.sum(matrix * matrix, axis=1),
        )

    @property
    def nu2_corrected(self) -> float:
        nu1, nu2, _, _ = self.traces
        return nu2 - nu1**2 / self.n

    def beta_hat(self) -> float:
        nu1, nu2, _, _ = self.traces
        n = self.n
        den = g_k_from_traces(self.traces, 4) - (12.0 / n) * (
            nu1**4 + 2.0 * nu1**2 * nu2 - nu1**4 / n
        )
        return 1.0 - guarded_ratio(np.mean(self.sq_norms**4), den)

    def gamma_hat(self) -> float:
        nu1 = self.traces[0]
        n = self.n
        second = guarded_ratio(
            varsigma_check(self.sq_norms) - 2.0 * self.nu2_corrected,
            g_k_from_traces(self.traces, 2) - 2.0 * nu1**2 / n,
        )
        third = guarded_ratio(
            np.mean(self.sq_norms**3),
            0.5 * g_k_from_traces(self.traces, 3) - 3.0 * nu1**3 / n,
        )
        return 1.0 + second - third

    def sigma1_sq(self) -> tuple[float, float, float, float]:
        corr = correlation_matrix(self.cov)
        frob4 = entrywise_norm_pow(corr, 4)
        frob2 = entrywise_norm_pow(corr, 2)
        beta = self.beta_hat()
        gamma = self.gamma_hat()
        c_hat = correction_term(beta, gamma, frob4, frob2, self.p)
        return (8.0 / (3.0 * self.p)) * (frob4 - c_hat), c_hat, beta, gamma

    def sigma2_sq(self) -> float:
        nu1, _, _, nu4 = self.traces
        corrected = self.nu2_corrected
        return guarded_ratio(
            8.0 * self.p * (2.0 * nu4 + corrected**2),
            (nu1**2 + 2.0 * corrected) ** 2,
        )


def threshold_level(p: int) -> float:
    """Threshold ``t_p = p^{-3/4} log(p)`` with the natural logarithm."""
    return p**-0.75 * math.log(p)


def correction_term(
    beta: float,
    gamma: float,
    frob4: float,
    frob2: float,
    p: int,
) -> float:
    """Correction term ``c_hat`` of the correlation variance part.

    Args:
        beta: Value of ``beta_hat``.
        gamma: Value of ``gamma_hat``.
        frob4: ``||R_hat||_4^4``.
        frob2: ``||R_hat||_2^2``.
        p: Dimension fixing the threshold level ``t_p``.

    Returns:
        ``beta frob4 - 3 [1 - beta + gamma]_{t_p} frob2``.

    """
    clamped = threshold(1.0 - beta + gamma, threshold_level(p))
    return beta * frob4 - 3.0 * clamped * frob2


def beta_hat(data: ArrayLike) -> float:
    """Eighth-moment ratio ``beta_hat`` of the full sample."""
    return _FullSample.from_data(data).beta_hat()


def gamma_hat(data: ArrayLike) -> float:
    """Fourth/sixth-moment ratio ``gamma_hat`` of the full sample."""
    return _FullSample.from_data(data).gamma_hat()


def sigma1_sq_hat(data: ArrayLike) -> tuple[float, float, float, float]:
    """Correlation part of the variance estimate.

    Args:
        data: ``n x p`` full sample.

    Returns:
        ``(sigma1_sq, c_hat, beta_hat, gamma_hat)`` where
        ``sigma1_sq = (8 / 3p) (||R||_4^4 - c_hat)``.

    Raises:
        DegenerateCovariateError: If a column of the sample is zero.

    """
    return _FullSample.from_data(data).sigma1_sq()


def sigma2_sq_hat(data: ArrayLike) -> float:
    """Trace part of the variance estimate.

    Args:
        data: ``n x p`` full sample.

    Returns:
        ``8p (2 nu4 + b^2) / (nu1^2 + 2b)^2`` with ``b = nu2 - nu1^2 / n``.

    """
    return _FullSample.from_data(data).sigma2_sq()


def variance_estimate(data: ArrayLike) -> VarianceEstimate:
    """Estimate the variance of ``T_n`` in a single pass.

    Args:
        data: ``n x p`` full sample.

    Returns:
        Both variance parts with their ingredients.

    """
    sample = _FullSample.from_data(data)
    sigma1_sq, c_hat, beta, gamma = sample.sigma1_sq()
    estimate = VarianceEstimate(
        sigma1_sq=sigma1_sq,
        sigma2_sq=sample.sigma2_sq(),
        c_hat=c_hat,
        beta_hat=beta,
        gamma_hat=gamma,
        t_p=threshold_level(sample.p),
    )
    logger.debug(
        "Variance estimate sigma1^2=%.6g sigma2^2=%.6g",
        estimate.sigma1_sq,
        estimate.sigma2_sq,
    )
    return estimate


def sigma_sq_population(sigma: ArrayLike) -> tuple[float, float]:
    """Population variance parts ``(sigma_{n,1}^2, sigma_{n,2}^2)``.

    Args:
        sigma: Covariance matrix with positive diagonal.

    Returns:
        ``8 ||R||_4^4 / 3p`` and ``8p (2 nu4 + nu2^2) / (nu1^2 + 2 nu2)^2``.

    """
    summary = trace_powers(sigma)
    corr = correlation_matrix(sigma)
    p = corr.shape[0]
    sigma1_sq = 8.0 * entrywise_norm_pow(corr, 4) / (3.0 * p)
    sigma2_sq = guarded_ratio(
        8.0 * p * (2.0 * summary.nu4 + summary.nu2**2),
        (summary.nu1**2 + 2.0 * summary.nu2) ** 2,
    )
    return sigma1_sq, sigma2_sq


def population_params(
    sigma: ArrayLike,
    varsigma_sq: float,
) -> PopulationParams:
    """Population kurtosis from ``var(||x||^2)`` and ``Sigma``.

    Args:
        sigma: Covariance matrix.
        varsigma_sq: ``var(||x||^2)``, nonnegative.

    Returns:
        The parameters with ``kappa = 3 (varsigma^2 + nu1^2) /
        (nu1^2 + 2 nu2)``.

    Raises:
        ValidationError: If ``varsigma_sq`` is negative.

    """
    if varsigma_sq < 0:
        msg = f"Variance of the squared norm must be >= 0, got {varsigma_sq}"
        raise ValidationError(msg)
    summary = trace_powers(sigma)
    kappa = guarded_ratio(
        3.0 * (varsigma_sq + summary.nu1**2),
        summary.nu1**2 + 2.0 * summary.nu2,
    )
    return PopulationParams(varsigma_sq=varsigma_sq, nu=summary, kappa=kappa)


def population_kappa(sigma: ArrayLike, varsigma_sq: float) -> float:
    """Common kurtosis implied by the coordinate-free identity."""
    return population_params(sigma, varsigma_sq).kappa
