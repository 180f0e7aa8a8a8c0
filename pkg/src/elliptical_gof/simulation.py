"""Monte Carlo level and power studies.

A :class:`SimulationRunner` owns a thread pool for the lifetime of an
``async with`` block. Trials are independent: trial ``t`` draws from a
generator seeded by ``(seed, t)`` only, so a report depends on the
configuration and never on the number of threads or their scheduling.

Typical usage:
    import asyncio
    from elliptical_gof.simulation import SimulationConfig, SimulationRunner

    async def main():
        cfg = SimulationConfig(mode="level", setting="i", covariance=4,
                               n=400, p=200, trials=200, seed=42)
        async with SimulationRunner(threads=4) as runner:
            report = await runner.simulate_level(cfg)
        print(report.rows[0].rate, report.rows[0].se)

    asyncio.run(main())
"""

import asyncio
import logging
import math
import os
import time
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from functools import partial
from typing import Any, ClassVar

import numpy as np

from .errors import ValidationError
from .goftest import TestOptions, run_test
from .models import (
    AlternativeModel,
    CovarianceKind,
    CovarianceModel,
    MixingDistribution,
    alternative_sample,
    covariance_kind,
    covariance_root,
    elliptical_sample,
    level_setting,
    shock_family,
)
from .numkit import SymMatrix

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: Spawn key of the covariance stream.
COVARIANCE_STREAM = 0
#: Spawn key prefix of the per-trial streams.
TRIAL_STREAM = 1
#: Exclusive upper bound of a seed.
MAX_SEED = 2**64


class SimulationMode(Enum):
    """Kind of Monte Carlo study."""

    LEVEL = "level"
    POWER = "power"


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Generator of trial ``index`` for a given master seed.

    The seed sequence hashes ``(seed, index)`` into an independent stream.

    """
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(TRIAL_STREAM, index)),
    )


def covariance_rng(seed: int) -> np.random.Generator:
    """Generator of the population covariance of a study."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(COVARIANCE_STREAM,)),
    )


@dataclass(frozen=True)
class SimulationConfig:
    """Description of a Monte Carlo experiment.

    Attributes:
        mode: ``"level"`` or ``"power"``.
        setting: Mixing setting ``"i"`` to ``"v"`` (level mode).
        shock: Shock family ``"a"`` or ``"b"`` (power mode).
        covariance: Covariance model 1 to 4.
        n: Sample size, even and at least 4.
        p: Dimension.
        trials: Number of datasets per cell, defaults by mode.
        alpha: Nominal level.
        h_grid: Perturbation weights in ``[0, 1]`` (power mode only).
        seed: Master seed in ``[0, 2^64)``.
        threads: Worker threads, ``None`` for one per CPU.

    """

    #: Default number of datasets of a level cell.
    DEFAULT_LEVEL_TRIALS: ClassVar[int] = 2000
    #: Default number of datasets per ``h`` of a power study.
    DEFAULT_POWER_TRIALS: ClassVar[int] = 500
    #: Default perturbation grid of a power study.
    DEFAULT_H_GRID: ClassVar[tuple[float, ...]] = tuple(
        i / 10 for i in range(11)
    )

    mode: SimulationMode = SimulationMode.LEVEL
    setting: str = "i"
    shock: str = "a"
    covariance: int = 4
    n: int = 400
    p: int = 200
    trials: int | None = None
    alpha: float = 0.05
    h_grid: tuple[float, ...] | None = None
    seed: int = 0
    threads: int | None = None

    def __post_init__(self) -> None:
        """Normalize and validate the configuration.

        Raises:
            ValidationError: If a field is out of range or the combination
                of fields is inconsistent.

        """
        try:
            mode = SimulationMode(self.mode)
        except ValueError:
            msg = f"Unknown simulation mode: {self.mode}"
            raise ValidationError(msg) from None
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "setting", self.setting.strip().lower())
        object.__setattr__(self, "shock", self.shock.strip().lower())
        object.__setattr__(
            self,
            "covariance",
            covariance_kind(self.covariance).value,
        )
        if self.trials is None:
            default = (
                self.DEFAULT_LEVEL_TRIALS
                if mode is SimulationMode.LEVEL
                else self.DEFAULT_POWER_TRIALS
            )
            object.__setattr__(self, "trials", default)

        if mode is SimulationMode.LEVEL:
            if self.h_grid is not None:
                msg = "Level mode does not take an h grid"
                raise ValidationError(msg)
            level_setting(self.setting, max(self.p, 1))
        else:
            grid = self.DEFAULT_H_GRID if self.h_grid is None else self.h_grid
            grid = tuple(float(h) for h in grid)
            if not grid:
                msg = "Power mode needs a non-empty h grid"
                raise ValidationError(msg)
            if any(not 0.0 <= h <= 1.0 for h in grid):
                msg = f"Perturbation weights must lie in [0, 1], got {grid}"
                raise ValidationError(msg)
            object.__setattr__(self, "h_grid", grid)
            shock_family(self.shock)

        self._check_ranges()

    def _check_ranges(self) -> None:
        if self.trials < 1:
            msg = f"Trial count must be at least 1, got {self.trials}"
            raise ValidationError(msg)
        if self.n < 4 or self.n % 2:
            msg = f"Sample size must be even and at least 4, got {self.n}"
            raise ValidationError(msg)
        if self.p < 1:
            msg = f"Dimension must be positive, got {self.p}"
            raise ValidationError(msg)
        if not 0.0 < self.alpha < 1.0:
            msg = f"Level alpha must be in (0, 1), got {self.alpha}"
            raise ValidationError(msg)
        if not 0 <= self.seed < MAX_SEED:
            msg = f"Seed must be in [0, 2^64), got {self.seed}"
            raise ValidationError(msg)
        if self.threads is not None and self.threads < 1:
            msg = f"Thread count must be positive, got {self.threads}"
            raise ValidationError(msg)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "SimulationConfig":
        """Build a configuration from a JSON-shaped mapping.

        Args:
            mapping: Keys named after the configuration fields.

        Returns:
            The validated configuration.

        Raises:
            ValidationError: If a key is unknown.

        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            msg = f"Unknown configuration keys: {', '.join(unknown)}"
            raise ValidationError(msg)
        values = dict(mapping)
        if values.get("h_grid") is not None:
            values["h_grid"] = tuple(values["h_grid"])
        return cls(**values)

    def with_overrides(self, **overrides: Any) -> "SimulationConfig":
        """Copy with the non-``None`` overrides applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if (
            "mode" in changes
            and SimulationMode(changes["mode"]) is not self.mode
        ):
            changes.setdefault("trials", None)
            changes.setdefault("h_grid", None)
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict[str, Any]:
        """JSON-shaped view, the inverse of :meth:`from_mapping`."""
        values = asdict(self)
        values["mode"] = self.mode.value
        if self.h_grid is not None:
            values["h_grid"] = list(self.h_grid)
        return values

    def covariance_model(self) -> CovarianceModel:
        """Population covariance model of the study."""
        return CovarianceModel(CovarianceKind(self.covariance), self.p)


@dataclass(frozen=True)
class ReportRow:
    """Rejection rate of one experiment cell.

    ``setting`` holds the mixing label in level mode and the shock label in
    power mode; ``h`` is ``None`` in level mode.
    """

    mode: str
    setting: str
    covariance: int
    n: int
    p: int
    h: float | None
    alpha: float
    rejections: int
    trials: int
    rate: float
    se: float
    seed: int

    @classmethod
    def from_counts(
        cls,
        cfg: SimulationConfig,
        rejections: int,
        h: float | None = None,
    ) -> "ReportRow":
        """Row of a finished cell; the standard error is binomial."""
        rate = rejections / cfg.trials
        return cls(
            mode=cfg.mode.value,
            setting=(
                cfg.setting if cfg.mode is SimulationMode.LEVEL else cfg.shock
            ),
            covariance=cfg.covariance,
            n=cfg.n,
            p=cfg.p,
            h=h,
            alpha=cfg.alpha,
            rejections=rejections,
            trials=cfg.trials,
            rate=rate,
            se=math.sqrt(rate * (1.0 - rate) / cfg.trials),
            seed=cfg.seed,
        )


@dataclass
class SimulationReport:
    """Rows of a study with the configuration that produced them.

    Attributes:
        config: Configuration echo.
        rows: One row per cell, or per ``h`` in power mode.
        wall_time: Elapsed seconds, excluded from the emitted CSV.

    """

    config: SimulationConfig
    rows: list[ReportRow] = field(default_factory=list)
    wall_time: float = 0.0


def _level_trial(
    cfg: SimulationConfig,
    mix: MixingDistribution,
    root: SymMatrix | None,
    index: int,
) -> bool:
    rng = trial_rng(cfg.seed, index)
    data = elliptical_sample(cfg.n, root, mix, rng)
    return run_test(data, TestOptions(alpha=cfg.alpha)).reject


def _power_trial(
    cfg: SimulationConfig,
    alt: AlternativeModel,
    index: int,
) -> bool:
    rng = trial_rng(cfg.seed, index)
    data = alternative_sample(cfg.n, alt, rng)
    return run_test(data, TestOptions(alpha=cfg.alpha)).reject


def population_root(cfg: SimulationConfig) -> SymMatrix | None:
    """Square root of the study covariance, ``None`` for the identity."""
    model = cfg.covariance_model()
    if model.kind is CovarianceKind.IDENTITY:
        return None
    return covariance_root(model, covariance_rng(cfg.seed))[1]


class SimulationRunner:
    """Run Monte Carlo studies on a pool of worker threads."""

    def __init__(self, threads: int | None = None):
        """Construct the runner.

        Args:
            threads: Worker threads, ``None`` for one per CPU.

        Raises:
            ValidationError: If ``threads`` is smaller than one.

        """
        logger.debug("Create simulation runner")

        if threads is not None and threads < 1:
            msg = f"Thread count must be positive, got {threads}"
            raise ValidationError(msg)

        self._threads: int = threads or os.cpu_count() or 1
        self._executor: ThreadPoolExecutor | None = None

        logger.debug("Simulation runner created")

    @property
    def threads(self) -> int:
        """Number of worker threads."""
        return self._threads

    async def __aenter__(self) -> "SimulationRunner":
        """Start the worker pool.

        Returns:
            The SimulationRunner instance.

        """
        self._executor = ThreadPoolExecutor(
            max_workers=self._threads,
            thread_name_prefix="trial",
        )
        return self

    async def __aexit__(self, *err):
        """Stop the worker pool.

        Args:
            *err: Exception information if an error occurred.

        """
        self._executor.shutdown(wait=True)
        self._executor = None

    async def _count_rejections(
        self,
        trial: Callable[[int], bool],
        trials: int,
    ) -> int:
        loop = asyncio.get_running_loop()
        if self._executor:
            outcomes = await asyncio.gather(
                *(
                    loop.run_in_executor(self._executor, trial, index)
                    for index in range(trials)
                ),
            )
        else:
            with ThreadPoolExecutor(max_workers=self._threads) as executor:
                outcomes = await asyncio.gather(
                    *(
                        loop.run_in_executor(executor, trial, index)
                        for index in range(trials)
                    ),
                )
        return sum(bool(outcome) for outcome in outcomes)

    async def simulate_level(
        self,
        cfg: SimulationConfig,
    ) -> SimulationReport:
        """Estimate the empirical level of one cell.

        Args:
            cfg: Level-mode configuration.

        Returns:
            Report with a single row.

        Raises:
            ValidationError: If ``cfg`` is not in level mode.

        """
        if cfg.mode is not SimulationMode.LEVEL:
            msg = "simulate_level needs a level-mode configuration"
            raise ValidationError(msg)
        start = time.perf_counter()
        mix = level_setting(cfg.setting, cfg.p)
        root = population_root(cfg)
        rejections = await self._count_rejections(
            partial(_level_trial, cfg, mix, root),
            cfg.trials,
        )
        row = ReportRow.from_counts(cfg, rejections)
        elapsed = time.perf_counter() - start
        logger.info(
            "Level cell (%s, %d, n=%d, p=%d) finished: rate=%.4f in %.1fs",
            cfg.setting,
            cfg.covariance,
            cfg.n,
            cfg.p,
            row.rate,
            elapsed,
        )
        return SimulationReport(config=cfg, rows=[row], wall_time=elapsed)

    async def simulate_power(
        self,
        cfg: SimulationConfig,
    ) -> SimulationReport:
        """Estimate the rejection rate for every ``h`` of the grid.

        Every ``h`` reuses the same trial streams, so rows differ only
        through the perturbation weight.

        Args:
            cfg: Power-mode configuration.

        Returns:
            Report with one row per ``h`` in grid order.

        Raises:
            ValidationError: If ``cfg`` is not in power mode.

        """
        if cfg.mode is not SimulationMode.POWER:
            msg = "simulate_power needs a power-mode configuration"
            raise ValidationError(msg)
        start = time.perf_counter()
        root = population_root(cfg)
        shock = shock_family(cfg.shock)
        report = SimulationReport(config=cfg)
        for h in cfg.h_grid:
            alt = AlternativeModel(root, h, shock, p=cfg.p)
            rejections = await self._count_rejections(
                partial(_power_trial, cfg, alt),
                cfg.trials,
            )
            row = ReportRow.from_counts(cfg, rejections, h=h)
            logger.info("Power at h=%.3g: rate=%.4f", h, row.rate)
            report.rows.append(row)
        report.wall_time = time.perf_counter() - start
        return report

    async def simulate_grid(
        self,
        cfg: SimulationConfig,
        settings: Iterable[str],
        covariances: Iterable[int],
        dims: Iterable[int],
    ) -> SimulationReport:
        """Run a level cell for every ``(setting, covariance, p)``.

        Args:
            cfg: Level-mode template; ``setting``, ``covariance`` and ``p``
                are replaced per cell.
            settings: Mixing setting labels.
            covariances: Covariance model numbers.
            dims: Dimensions.

        Returns:
            Report with one row per cell, in nested loop order.

        """
        start = time.perf_counter()
        report = SimulationReport(config=cfg)
        dims = list(dims)
        covariances = list(covariances)
        for setting in settings:
            for covariance in covariances:
                for p in dims:
                    cell = replace(
                        cfg,
                        setting=setting,
                        covariance=covariance,
                        p=p,
                    )
                    report.rows.extend((await self.simulate_level(cell)).rows)
        report.wall_time = time.perf_counter() - start
        return report


async def simulate_level(cfg: SimulationConfig) -> SimulationReport:
    """Run :meth:`SimulationRunner.simulate_level` on a fresh runner."""
    async with SimulationRunner(cfg.threads) as runner:
        return await runner.simulate_level(cfg)


async def simulate_power(cfg: SimulationConfig) -> SimulationReport:
    """Run :meth:`SimulationRunner.simulate_power` on a fresh runner."""
    async with SimulationRunner(cfg.threads) as runner:
        return await runner.simulate_power(cfg)


async def simulate_grid(
    cfg: SimulationConfig,
    settings: Sequence[str],
    covariances: Sequence[int],
    dims: Sequence[int],
) -> SimulationReport:
    """Run :meth:`SimulationRunner.simulate_grid` on a fresh runner."""
    async with SimulationRunner(cfg.threads) as runner:
        return await runner.simulate_grid(cfg, settings, covariances, dims)
