"""Unit tests for numkit."""

import numpy as np
import pytest

from elliptical_gof import numkit
from elliptical_gof.errors import (
    DegenerateCovariateError,
    NotPositiveSemidefiniteError,
    ValidationError,
)


def test_trace_powers_of_identity() -> None:
    """Trace powers of the identity all equal the dimension."""
    summary = numkit.trace_powers(np.eye(3))
    assert summary.traces == pytest.approx((3, 3, 3, 3))
    assert summary.frob4 == pytest.approx(3)
    assert summary.frob2 == pytest.approx(3)


def test_trace_powers_of_diagonal() -> None:
    """Trace powers of diag(1, 2) are (3, 5, 9, 17)."""
    summary = numkit.trace_powers(np.diag([1.0, 2.0]))
    assert summary.traces == pytest.approx((3, 5, 9, 17))


def test_trace_powers_gram_path_matches_direct_path() -> None:
    """Gram and direct trace powers agree when p exceeds the row count."""
    rng = np.random.default_rng(11)
    data = rng.standard_normal((3, 5))
    cov = data.T @ data / 3
    direct = numkit.trace_powers(cov)
    dual = numkit.trace_powers(cov, data)
    assert dual.traces == pytest.approx(direct.traces, rel=1e-10)


def test_gram_trace_powers_tall_matrix() -> None:
    """A tall factor uses the p x p side and gives the same traces."""
    rng = np.random.default_rng(12)
    data = rng.standard_normal((9, 4))
    cov = data.T @ data / 9
    assert numkit.gram_trace_powers(data) == pytest.approx(
        numkit.trace_powers(cov).traces,
        rel=1e-10,
    )


def test_trace_powers_factor_dimension_mismatch() -> None:
    """A factor with the wrong column count must raise an exception."""
    with pytest.raises(ValidationError, match="Factor has 2 columns"):
        numkit.trace_powers(np.eye(3), np.ones((4, 2)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_trace_powers_bounds(seed: int) -> None:
    """Trace powers obey Cauchy-Schwarz and correlations a unit diagonal."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((15, 25)) * rng.exponential(size=25)
    cov = data.T @ data / 15
    p = cov.shape[0]
    summary = numkit.trace_powers(cov, data)
    assert summary.nu2 >= summary.nu1**2 / p * (1.0 - 1e-12)
    corr = numkit.trace_powers(numkit.correlation_matrix(cov))
    assert corr.nu1 == pytest.approx(p)
    assert corr.frob2 >= p
    assert corr.frob4 >= p
    assert corr.nu2 == pytest.approx(corr.frob2)


def test_check_symmetric_rejects_asymmetric() -> None:
    """An asymmetric matrix must raise an exception."""
    with pytest.raises(ValidationError, match="not symmetric"):
        numkit.check_symmetric([[1.0, 2.0], [0.0, 1.0]])


def test_check_symmetric_rejects_non_square() -> None:
    """A non-square matrix must raise an exception."""
    with pytest.raises(ValidationError, match="square"):
        numkit.check_symmetric(np.ones((2, 3)))


def test_as_data_matrix_rejects_nan() -> None:
    """Non-finite data must raise an exception."""
    with pytest.raises(ValidationError, match="non-finite"):
        numkit.as_data_matrix([[1.0, np.nan]])


def test_entrywise_norm_pow() -> None:
    """Entrywise norms match hand computations."""
    assert numkit.entrywise_norm_pow(np.eye(5), 4) == pytest.approx(5)
    assert numkit.entrywise_norm_pow(np.ones((2, 2)), 2) == pytest.approx(4)
    corr = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert numkit.entrywise_norm_pow(corr, 4) == pytest.approx(2.125)


def test_entrywise_norm_pow_rejects_other_powers() -> None:
    """Only the powers 2 and 4 are supported."""
    with pytest.raises(ValidationError, match="must be 2 or 4"):
        numkit.entrywise_norm_pow(np.eye(2), 3)


def test_correlation_matrix() -> None:
    """Correlation conversion normalizes by the diagonal."""
    np.testing.assert_allclose(
        numkit.correlation_matrix(np.diag([4.0, 9.0])),
        np.eye(2),
    )
    np.testing.assert_allclose(
        numkit.correlation_matrix([[4.0, 2.0], [2.0, 1.0]]),
        np.ones((2, 2)),
    )


def test_correlation_matrix_is_idempotent() -> None:
    """The correlation matrix of a correlation matrix is itself."""
    rng = np.random.default_rng(5)
    data = rng.standard_normal((20, 4)) * [1.0, 2.0, 3.0, 4.0]
    corr = numkit.correlation_matrix(data.T @ data / 20)
    np.testing.assert_allclose(numkit.correlation_matrix(corr), corr)
    assert np.all(np.abs(corr) <= 1.0)
    np.testing.assert_array_equal(np.diag(corr), np.ones(4))


def test_correlation_matrix_zero_variance() -> None:
    """A zero diagonal entry must raise an exception."""
    with pytest.raises(DegenerateCovariateError, match="Covariate 0"):
        numkit.correlation_matrix(np.diag([0.0, 1.0]))


def test_g_k_of_identity() -> None:
    """Gaussian quadratic-form moments of I_2 match chi-squared moments."""
    assert numkit.g_k(np.eye(2), 2) == pytest.approx(8)
    assert numkit.g_k(np.eye(2), 3) == pytest.approx(48)
    assert numkit.g_k(np.eye(2), 4) == pytest.approx(2 * 4 * 6 * 8)


def test_g_k_rejects_other_orders() -> None:
    """Orders outside 2..4 must raise an exception."""
    with pytest.raises(ValidationError, match="k in"):
        numkit.g_k(np.eye(2), 5)


@pytest.mark.parametrize(
    ("x", "t", "expected"),
    [(-5.0, 2.0, -2.0), (0.5, 2.0, 0.5), (3.0, 1.0, 1.0), (0.7, 0.0, 0.0)],
)
def test_threshold(x: float, t: float, expected: float) -> None:
    """Threshold clamps the magnitude and keeps the sign."""
    assert numkit.threshold(x, t) == pytest.approx(expected)
    assert numkit.threshold(-x, t) == pytest.approx(-expected)


def test_threshold_negative_level() -> None:
    """A negative threshold level must raise an exception."""
    with pytest.raises(ValidationError, match="nonnegative"):
        numkit.threshold(1.0, -1.0)


def test_sym_sqrt_diagonal() -> None:
    """Square root of a diagonal matrix is taken entrywise."""
    np.testing.assert_allclose(
        numkit.sym_sqrt(np.diag([4.0, 9.0])),
        np.diag([2.0, 3.0]),
        atol=1e-12,
    )
    np.testing.assert_allclose(numkit.sym_sqrt(np.eye(4)), np.eye(4))


def test_sym_sqrt_reconstructs_psd_matrix() -> None:
    """The square of the root recovers a random PSD matrix."""
    rng = np.random.default_rng(8)
    factor = rng.standard_normal((6, 3))
    psd = factor @ factor.T
    root = numkit.sym_sqrt(psd)
    error = np.linalg.norm(root @ root - psd, 2) / np.linalg.norm(psd, 2)
    assert error <= 1e-8


def test_sym_sqrt_rejects_indefinite() -> None:
    """An indefinite matrix must raise an exception."""
    with pytest.raises(NotPositiveSemidefiniteError):
        numkit.sym_sqrt(np.diag([1.0, -1.0]))


def test_haar_orthogonal_dimension_one() -> None:
    """A one dimensional Haar draw is a sign."""
    q = numkit.haar_orthogonal(1, np.random.default_rng(0))
    assert abs(q[0, 0]) == pytest.approx(1.0)


def test_haar_orthogonal_is_orthogonal() -> None:
    """Haar draws are orthogonal."""
    q = numkit.haar_orthogonal(30, np.random.default_rng(1))
    assert np.max(np.abs(q.T @ q - np.eye(30))) <= 1e-10


def test_haar_orthogonal_entry_mean() -> None:
    """The top-left entry of a Haar draw is centered."""
    rng = np.random.default_rng(2)
    entries = [numkit.haar_orthogonal(3, rng)[0, 0] for _ in range(10_000)]
    assert abs(np.mean(entries)) <= 0.05


def test_haar_orthogonal_rejects_empty() -> None:
    """A non-positive dimension must raise an exception."""
    with pytest.raises(ValidationError, match="positive"):
        numkit.haar_orthogonal(0, np.random.default_rng(0))


def test_normal_cdf_and_quantile() -> None:
    """Normal distribution function and quantile are consistent."""
    assert numkit.normal_cdf(0.0) == pytest.approx(0.5)
    assert numkit.normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    for z in (0.3, 1.7, 4.2):
        assert numkit.normal_cdf(-z) == pytest.approx(
            1.0 - numkit.normal_cdf(z),
        )


def test_normal_cdf_inverts_quantile() -> None:
    """The distribution function undoes the quantile function."""
    for u in np.linspace(1e-6, 1.0 - 1e-6, 201):
        recovered = numkit.normal_cdf(numkit.normal_quantile(float(u)))
        assert abs(recovered - u) <= 1e-12


def test_normal_quantile_rejects_bounds() -> None:
    """Quantile levels 0 and 1 must raise an exception."""
    with pytest.raises(ValidationError, match=r"\(0, 1\)"):
        numkit.normal_quantile(1.0)
