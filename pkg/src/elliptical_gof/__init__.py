"""Goodness-of-fit test for high-dimensional elliptical models.

This package provides:
- the test itself: two competing kurtosis estimates, the rescaled
  discrepancy ``T_n`` and its consistent variance estimate
- elliptical and perturbed Gaussian data generators
- an async Monte Carlo runner for level and power studies
- CSV ingestion, log returns and dimension sweeps for real data

Example:
    import asyncio
    import numpy as np
    from elliptical_gof import (
        SimulationConfig,
        SimulationRunner,
        TestOptions,
        run_test,
    )

    rng = np.random.default_rng(0)
    result = run_test(rng.standard_normal((400, 200)), TestOptions())
    print(result.z, result.p_value, result.reject)

    async def main():
        cfg = SimulationConfig(mode="power", shock="a", h_grid=(0.0, 1.0))
        async with SimulationRunner(threads=8) as runner:
            report = await runner.simulate_power(cfg)
        for row in report.rows:
            print(row.h, row.rate, row.se)

    asyncio.run(main())

"""

from typing import Final

from .errors import (
    CsvParseError,
    DegenerateCovariateError,
    NotPositiveSemidefiniteError,
    UnsupportedMomentError,
    ValidationError,
)
from .goftest import TestOptions, TestResult, run_test
from .models import (
    CovarianceKind,
    CovarianceModel,
    MixingDistribution,
    MixingFamily,
)
from .simulation import SimulationConfig, SimulationReport, SimulationRunner

__version__ = "0.1.0"

__all__: Final[list[str]] = [
    "CovarianceKind",
    "CovarianceModel",
    "CsvParseError",
    "DegenerateCovariateError",
    "MixingDistribution",
    "MixingFamily",
    "NotPositiveSemidefiniteError",
    "SimulationConfig",
    "SimulationReport",
    "SimulationRunner",
    "TestOptions",
    "TestResult",
    "UnsupportedMomentError",
    "ValidationError",
    "run_test",
]
