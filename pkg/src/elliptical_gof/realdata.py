"""Dimension sweeps over the columns of a real dataset.

Two workflows are supported: testing the first ``d`` columns for a list of
dimensions, and repeating the test on random column subsets of a fixed size
to summarize the resulting p-values by their median.

Typical usage:
    from elliptical_gof import TestOptions
    from elliptical_gof.realdata import prefix_sweep, random_subset_sweep

    opts = TestOptions(center=True, drop_odd_row=True)
    for d, result in prefix_sweep(returns, [100, 200, 300], opts):
        print(d, result.p_value)
    sweep = random_subset_sweep(genes, 500, repeats=100, seed=1, opts=opts)
    print(sweep.median)
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import ValidationError
from .goftest import TestOptions, TestResult, run_test
from .numkit import as_data_matrix

#: Create logger for this module.
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsetSweep:
    """Test results over random column subsets of one size.

    Attributes:
        d: Subset size.
        seed: Seed of the subset draws.
        results: One result per repeat.

    """

    d: int
    seed: int
    results: tuple[TestResult, ...]

    @property
    def p_values(self) -> tuple[float, ...]:
        """P-values in repeat order."""
        return tuple(result.p_value for result in self.results)

    @property
    def median(self) -> float:
        """Median p-value over the repeats."""
        return float(np.median(self.p_values))


def prefix_sweep(
    data: ArrayLike,
    dims: Iterable[int],
    opts: TestOptions | None = None,
) -> list[tuple[int, TestResult]]:
    """Test the first ``d`` columns for every ``d`` of ``dims``.

    Args:
        data: ``n x p`` sample.
        dims: Dimensions, each in ``1..p``.
        opts: Test options.

    Returns:
        ``(d, result)`` pairs in the order of ``dims``.

    Raises:
        ValidationError: If a dimension is out of range.

    """
    matrix = as_data_matrix(data)
    p = matrix.shape[1]
    sweep = []
    for d in dims:
        if not 1 <= d <= p:
            msg = f"Dimension {d} out of range 1..{p}"
            raise ValidationError(msg)
        result = run_test(matrix[:, :d], opts)
        logger.info("First %d columns: p-value %.4g", d, result.p_value)
        sweep.append((d, result))
    return sweep


def random_subset_sweep(
    data: ArrayLike,
    d: int,
    repeats: int,
    seed: int,
    opts: TestOptions | None = None,
) -> SubsetSweep:
    """Test ``repeats`` random subsets of ``d`` columns.

    Subset ``r`` is drawn without replacement from a generator derived from
    ``(seed, r)``.

    Args:
        data: ``n x p`` sample.
        d: Subset size in ``1..p``.
        repeats: Number of subsets.
        seed: Seed of the subset draws.
        opts: Test options.

    Returns:
        The sweep, with its median p-value.

    Raises:
        ValidationError: If ``d`` or ``repeats`` is out of range.

    """
    matrix = as_data_matrix(data)
    p = matrix.shape[1]
    if not 1 <= d <= p:
        msg = f"Subset size {d} out of range 1..{p}"
        raise ValidationError(msg)
    if repeats < 1:
        msg = f"Repeat count must be positive, got {repeats}"
        raise ValidationError(msg)
    results = []
    for repeat in range(repeats):
        rng = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(repeat,)),
        )
        columns = np.sort(rng.choice(p, size=d, replace=False))
        results.append(run_test(matrix[:, columns], opts))
    sweep = SubsetSweep(d=d, seed=seed, results=tuple(results))
    logger.info("Subsets of %d columns: median p-value %.4g", d, sweep.median)
    return sweep
