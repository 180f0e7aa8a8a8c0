"""Unit tests for simulation."""

import math

import pytest

from elliptical_gof import simulation
from elliptical_gof.datafiles import ReportFormat
from elliptical_gof.errors import ValidationError
from elliptical_gof.simulation import (
    SimulationConfig,
    SimulationMode,
    SimulationRunner,
)


def small_level(**changes: object) -> SimulationConfig:
    """Small level configuration that runs in well under a second."""
    values = {
        "mode": "level",
        "setting": "iv",
        "covariance": 2,
        "n": 40,
        "p": 20,
        "trials": 24,
        "seed": 42,
    }
    values.update(changes)
    return SimulationConfig.from_mapping(values)


def small_power(**changes: object) -> SimulationConfig:
    """Small power configuration over three perturbation weights."""
    values = {
        "mode": "power",
        "shock": "a",
        "covariance": 4,
        "n": 40,
        "p": 20,
        "trials": 16,
        "h_grid": [0.0, 0.5, 1.0],
        "seed": 42,
    }
    values.update(changes)
    return SimulationConfig.from_mapping(values)


def test_config_default_trials() -> None:
    """Trial counts default by mode."""
    assert SimulationConfig().trials == 2000
    assert SimulationConfig(mode="power").trials == 500


def test_config_default_h_grid() -> None:
    """Power mode defaults to eleven evenly spaced weights."""
    cfg = SimulationConfig(mode=SimulationMode.POWER)
    assert len(cfg.h_grid) == 11
    assert cfg.h_grid[0] == 0.0
    assert cfg.h_grid[-1] == 1.0


def test_config_level_rejects_h_grid() -> None:
    """Level mode must not take an h grid."""
    with pytest.raises(ValidationError, match="does not take an h grid"):
        SimulationConfig(h_grid=(0.0, 1.0))


@pytest.mark.parametrize(
    ("changes", "message"),
    [
        ({"trials": 0}, "Trial count"),
        ({"n": 7}, "even"),
        ({"alpha": 0.0}, "alpha"),
        ({"seed": -1}, "Seed"),
        ({"threads": 0}, "Thread count"),
        ({"setting": "vii"}, "Unknown mixing setting"),
        ({"covariance": 9}, "Unknown covariance model"),
        ({"mode": "sweep"}, "Unknown simulation mode"),
    ],
)
def test_config_validation(changes: dict, message: str) -> None:
    """Invalid configurations must raise an exception."""
    with pytest.raises(ValidationError, match=message):
        small_level(**changes)


def test_config_power_rejects_weights() -> None:
    """Weights outside [0, 1] must raise an exception."""
    with pytest.raises(ValidationError, match=r"\[0, 1\]"):
        small_power(h_grid=[0.0, 1.5])


def test_config_from_mapping_unknown_key() -> None:
    """Unknown configuration keys must raise an exception."""
    with pytest.raises(ValidationError, match="Unknown configuration keys"):
        SimulationConfig.from_mapping({"trails": 3})


def test_config_overrides_and_round_trip() -> None:
    """Overrides skip None and the mapping view round-trips."""
    cfg = small_power().with_overrides(seed=7, trials=None)
    assert cfg.seed == 7
    assert cfg.trials == 16
    assert SimulationConfig.from_mapping(cfg.to_dict()) == cfg


def test_config_override_switches_mode() -> None:
    """Switching mode resets the trial default and the h grid."""
    cfg = SimulationConfig(mode="power").with_overrides(mode="level")
    assert cfg.mode is SimulationMode.LEVEL
    assert cfg.trials == 2000
    assert cfg.h_grid is None


def test_trial_streams_are_independent_of_order() -> None:
    """Trial generators depend only on the seed and the index."""
    first = simulation.trial_rng(5, 3).standard_normal(4)
    simulation.trial_rng(5, 2).standard_normal(4)
    again = simulation.trial_rng(5, 3).standard_normal(4)
    assert list(first) == list(again)
    assert list(first) != list(simulation.trial_rng(5, 4).standard_normal(4))


def test_runner_rejects_threads() -> None:
    """Runner creation with no threads must raise an exception."""
    with pytest.raises(ValidationError, match="Thread count"):
        SimulationRunner(threads=0)


@pytest.mark.asyncio
async def test_simulate_level_single_row() -> None:
    """A level run yields one row with a binomial standard error."""
    async with SimulationRunner(threads=2) as runner:
        report = await runner.simulate_level(small_level())
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.rate == row.rejections / row.trials
    assert 0.0 <= row.rate <= 1.0
    assert row.se == pytest.approx(
        math.sqrt(row.rate * (1 - row.rate) / row.trials),
        abs=1e-12,
    )
    assert row.h is None
    assert report.wall_time > 0


@pytest.mark.asyncio
async def test_simulate_level_one_trial() -> None:
    """A single trial gives a rate of zero or one."""
    report = await simulation.simulate_level(small_level(trials=1))
    assert report.rows[0].rate in {0.0, 1.0}


@pytest.mark.asyncio
async def test_simulate_level_wrong_mode() -> None:
    """A power configuration must be refused by the level study."""
    async with SimulationRunner(threads=1) as runner:
        with pytest.raises(ValidationError, match="level-mode"):
            await runner.simulate_level(small_power())


@pytest.mark.asyncio
async def test_simulate_level_thread_count_invariance() -> None:
    """Reports are byte-identical for one and eight threads."""
    async with SimulationRunner(threads=1) as runner:
        single = await runner.simulate_level(small_level())
    async with SimulationRunner(threads=8) as runner:
        multi = await runner.simulate_level(small_level())
    assert ReportFormat.to_csv(single) == ReportFormat.to_csv(multi)


@pytest.mark.asyncio
async def test_simulate_without_context() -> None:
    """A runner outside its context uses a temporary pool."""
    runner = SimulationRunner(threads=2)
    outside = await runner.simulate_level(small_level())
    async with SimulationRunner(threads=2) as pooled:
        inside = await pooled.simulate_level(small_level())
    assert outside.rows == inside.rows


@pytest.mark.asyncio
async def test_simulate_power_rows() -> None:
    """A power run yields one row per h in grid order."""
    async with SimulationRunner(threads=4) as runner:
        report = await runner.simulate_power(small_power())
    assert [row.h for row in report.rows] == [0.0, 0.5, 1.0]
    assert all(row.setting == "a" for row in report.rows)


@pytest.mark.asyncio
async def test_simulate_power_single_h_matches_grid() -> None:
    """A one-point grid equals the matching row of a longer grid."""
    async with SimulationRunner(threads=3) as runner:
        full = await runner.simulate_power(small_power())
        single = await runner.simulate_power(small_power(h_grid=[0.5]))
    assert single.rows == [full.rows[1]]


@pytest.mark.asyncio
async def test_simulate_power_thread_count_invariance() -> None:
    """Power reports are byte-identical for one and eight threads."""
    single = await simulation.simulate_power(small_power(threads=1))
    multi = await simulation.simulate_power(small_power(threads=8))
    assert ReportFormat.to_csv(single) == ReportFormat.to_csv(multi)


@pytest.mark.asyncio
async def test_simulate_grid_cells() -> None:
    """A grid run yields one row per setting, covariance and dimension."""
    report = await simulation.simulate_grid(
        small_level(trials=4),
        ["i", "v"],
        [1, 4],
        [10, 20],
    )
    cells = [(row.setting, row.covariance, row.p) for row in report.rows]
    assert cells == [
        ("i", 1, 10),
        ("i", 1, 20),
        ("i", 4, 10),
        ("i", 4, 20),
        ("v", 1, 10),
        ("v", 1, 20),
        ("v", 4, 10),
        ("v", 4, 20),
    ]


@pytest.mark.slow
@pytest.mark.asyncio
@pytest.mark.parametrize("covariance", [1, 2, 3, 4])
async def test_level_reproduction(covariance: int) -> None:
    """Setting (i) at n = 400, p = 200 keeps its nominal level."""
    cfg = SimulationConfig(
        setting="i",
        covariance=covariance,
        trials=2000,
        seed=2024,
    )
    report = await simulation.simulate_level(cfg)
    assert 0.028 <= report.rows[0].rate <= 0.056


@pytest.mark.slow
@pytest.mark.asyncio
async def test_level_large_dimension() -> None:
    """Level stays controlled for p/n = 3 through the Gram path."""
    cfg = SimulationConfig(setting="i", p=1200, trials=500, seed=2024)
    report = await simulation.simulate_level(cfg)
    assert 0.02 <= report.rows[0].rate <= 0.07


@pytest.mark.slow
@pytest.mark.asyncio
async def test_level_grid_reproduction() -> None:
    """All twenty level cells stay between 2% and 7%."""
    cfg = SimulationConfig(trials=1000, seed=7)
    report = await simulation.simulate_grid(
        cfg,
        ["i", "ii", "iii", "iv", "v"],
        [1, 2, 3, 4],
        [200],
    )
    assert all(0.02 <= row.rate <= 0.07 for row in report.rows)


@pytest.mark.slow
@pytest.mark.asyncio
async def test_power_increases_with_h() -> None:
    """Power grows with h and reaches well above the level at h = 1."""
    cfg = SimulationConfig(
        mode="power",
        shock="a",
        covariance=4,
        trials=500,
        h_grid=(0.0, 0.5, 1.0),
        seed=2024,
    )
    rows = (await simulation.simulate_power(cfg)).rows
    for low, high in zip(rows, rows[1:], strict=False):
        assert high.rate >= low.rate - 2 * max(high.se, low.se)
    assert rows[-1].rate - rows[0].rate >= 0.5
    assert rows[-1].rate >= 0.8


@pytest.mark.slow
@pytest.mark.asyncio
async def test_power_level_at_zero() -> None:
    """At h = 0 the power study estimates the level."""
    cfg = SimulationConfig(
        mode="power",
        shock="a",
        covariance=1,
        h_grid=(0.0,),
        trials=1000,
        seed=11,
    )
    row = (await simulation.simulate_power(cfg)).rows[0]
    assert abs(row.rate - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / row.trials)
