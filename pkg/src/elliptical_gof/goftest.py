"""End-to-end goodness-of-fit test for elliptical models.

The pipeline preprocesses the sample, splits it into two halves, evaluates
the competing kurtosis estimates and the variance estimate, and rejects the
elliptical null hypothesis at level ``alpha`` when
``|T_n| > sigma_hat_n * Phi^{-1}(1 - alpha / 2)``.

Typical usage:
    import numpy as np
    from elliptical_gof import TestOptions, run_test

    rng = np.random.default_rng(3)
    result = run_test(rng.standard_normal((400, 200)), TestOptions(alpha=0.05))
    print(result.z, result.p_value, result.reject)
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, ClassVar

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateCovariateError, ValidationError
from .estimators import (
    KurtosisPair,
    VarianceEstimate,
    kurtosis_pair,
    t_statistic,
    variance_estimate,
)
from .numkit import DataMatrix, as_data_matrix, normal_cdf, normal_quantile

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: Smallest sample size accepted by :func:`run_test`.
MIN_SAMPLE_SIZE = 4


@dataclass(frozen=True)
class TestOptions:
    """Options of the goodness-of-fit test.

    Attributes:
        alpha: Nominal level in ``(0, 1)``.
        center: Subtract the column means before testing.
        drop_odd_row: Drop the last row when the sample size is odd.
        shuffle_seed: Seed of an optional row shuffle, ``None`` keeps the
            row order.

    """

    __test__: ClassVar[bool] = False

    alpha: float = 0.05
    center: bool = False
    drop_odd_row: bool = False
    shuffle_seed: int | None = None

    def __post_init__(self) -> None:
        """Validate the options.

        Raises:
            ValidationError: If ``alpha`` is outside ``(0, 1)``.

        """
        if not 0.0 < self.alpha < 1.0:
            msg = f"Level alpha must be in (0, 1), got {self.alpha}"
            raise ValidationError(msg)


@dataclass(frozen=True)
class TestResult:
    """Outcome of the goodness-of-fit test.

    Attributes:
        t_n: Rescaled kurtosis discrepancy.
        sigma_hat: Estimated standard deviation of ``t_n``.
        z: Standardized statistic ``t_n / sigma_hat``.
        p_value: Two-sided p-value ``2 (1 - Phi(|z|))``.
        reject: Decision at level ``alpha``.
        kappa: Both kurtosis estimates.
        variance: Variance estimate and its ingredients.
        n_used: Sample size after preprocessing.
        p: Dimension.
        alpha: Nominal level.
        degenerate_scale: True when ``sigma_hat`` vanished and ``z`` fell
            back to ``t_n``.

    """

    __test__: ClassVar[bool] = False

    t_n: float
    sigma_hat: float
    z: float
    p_value: float
    reject: bool
    kappa: KurtosisPair
    variance: VarianceEstimate
    n_used: int
    p: int
    alpha: float
    degenerate_scale: bool = False

    def to_dict(self) -> dict[str, Any]:
        """Plain dictionary view, suitable for JSON output."""
        return asdict(self)


def preprocess(data: ArrayLike, opts: TestOptions) -> DataMatrix:
    """Prepare a sample for testing.

    Centering uses all rows; the odd row is dropped afterwards and the
    optional shuffle comes last.

    Args:
        data: ``n x p`` sample.
        opts: Test options.

    Returns:
        A new matrix, the input is never modified.

    """
    matrix = np.array(as_data_matrix(data), dtype=np.float64, copy=True)
    if opts.center and matrix.shape[0]:
        matrix -= matrix.mean(axis=0)
    if opts.drop_odd_row and matrix.shape[0] % 2:
        logger.debug("Drop last row to get an even sample size")
        matrix = matrix[:-1]
    if opts.shuffle_seed is not None:
        order = np.random.default_rng(opts.shuffle_seed).permutation(
            matrix.shape[0],
        )
        matrix = matrix[order]
    return matrix


def p_value(z: float) -> float:
    """Two-sided p-value ``2 (1 - Phi(|z|))``.

    Raises:
        ValidationError: If ``z`` is not finite.

    """
    if not math.isfinite(z):
        msg = f"Statistic must be finite, got {z}"
        raise ValidationError(msg)
    return 2.0 * normal_cdf(-abs(z))


def decision(
    t_n: float,
    sigma_hat: float,
    alpha: float,
) -> tuple[float, float, bool]:
    """Standardize ``t_n`` and apply the two-sided rejection rule.

    Args:
        t_n: Rescaled kurtosis discrepancy.
        sigma_hat: Estimated standard deviation, ``0`` when degenerate.
        alpha: Nominal level.

    Returns:
        ``(z, p_value, reject)``.

    """
    # A vanishing scale is replaced by one.
    z = float(t_n) / sigma_hat if sigma_hat > 0 else float(t_n)
    critical = normal_quantile(1.0 - alpha / 2.0)
    return z, p_value(z), abs(z) > critical


def _check_sample(matrix: DataMatrix) -> None:
    n = matrix.shape[0]
    if n < MIN_SAMPLE_SIZE:
        msg = f"Sample size must be at least {MIN_SAMPLE_SIZE}, got {n}"
        raise ValidationError(msg)
    if n % 2:
        msg = f"Sample size must be even, got {n}; enable drop_odd_row"
        raise ValidationError(msg)
    zero = np.flatnonzero(np.all(matrix == 0, axis=0))
    if zero.size:
        msg = f"Covariate {int(zero[0])} is identically zero"
        raise DegenerateCovariateError(msg)


def run_test(data: ArrayLike, opts: TestOptions | None = None) -> TestResult:
    """Run the elliptical goodness-of-fit test.

    Args:
        data: ``n x p`` sample, rows are observations.
        opts: Test options, defaults to level 0.05 without preprocessing.

    Returns:
        The test result.

    Raises:
        ValidationError: If the preprocessed sample is too small or odd.
        DegenerateCovariateError: If a column is identically zero.

    """
    if opts is None:
        opts = TestOptions()
    matrix = preprocess(data, opts)
    _check_sample(matrix)
    n, p = matrix.shape
    logger.debug("Run test on n=%d, p=%d", n, p)

    kappa = kurtosis_pair(matrix)
    variance = variance_estimate(matrix)
    t_n = t_statistic(kappa.kappa_tilde, kappa.kappa_check, n, p)
    total = variance.sigma_sq_total
    degenerate = not total > 0
    if degenerate:
        logger.warning("Variance estimate %.3g is not positive", total)
    sigma_hat = 0.0 if degenerate else math.sqrt(total)
    z, p_val, reject = decision(t_n, sigma_hat, opts.alpha)
    return TestResult(
        t_n=t_n,
        sigma_hat=sigma_hat,
        z=z,
        p_value=p_val,
        reject=reject,
        kappa=kappa,
        variance=variance,
        n_used=n,
        p=p,
        alpha=opts.alpha,
        degenerate_scale=degenerate,
    )
