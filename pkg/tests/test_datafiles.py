"""Unit tests for datafiles."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
import pytest_asyncio

from elliptical_gof import datafiles
from elliptical_gof.datafiles import ColumnSelection, CsvOptions, ReportFormat
from elliptical_gof.errors import CsvParseError, ValidationError
from elliptical_gof.simulation import (
    ReportRow,
    SimulationConfig,
    SimulationReport,
)


def test_parse_csv_matrix() -> None:
    """Plain numeric text parses row by row."""
    np.testing.assert_array_equal(
        datafiles.parse_csv_matrix("1,2\n3,4\n"),
        [[1.0, 2.0], [3.0, 4.0]],
    )


def test_parse_csv_matrix_header_and_delimiter() -> None:
    """A header line is skipped and the delimiter is honoured."""
    matrix = datafiles.parse_csv_matrix(
        "a;b;c\n1;2;3\n4;5;6\n",
        CsvOptions(header=True, delimiter=";"),
    )
    assert matrix.shape == (2, 3)
    assert matrix[1, 2] == 6.0


def test_parse_csv_matrix_prefix_selection() -> None:
    """A prefix selection of one keeps the first column."""
    matrix = datafiles.parse_csv_matrix(
        "1,2,3\n4,5,6\n",
        CsvOptions(columns=ColumnSelection(prefix=1)),
    )
    np.testing.assert_array_equal(matrix, [[1.0], [4.0]])


def test_parse_csv_matrix_short_row() -> None:
    """A row with missing fields reports its line and column."""
    with pytest.raises(CsvParseError, match="Row 2") as info:
        datafiles.parse_csv_matrix("1,2,3\n4,5\n")
    assert info.value.row == 2
    assert info.value.column == 3


def test_parse_csv_matrix_long_row() -> None:
    """A row with extra fields reports its line."""
    with pytest.raises(CsvParseError, match="Row 3") as info:
        datafiles.parse_csv_matrix("1,2\n3,4\n5,6,7\n")
    assert info.value.row == 3


def test_parse_csv_matrix_non_numeric() -> None:
    """A non-numeric cell reports its line and column."""
    with pytest.raises(CsvParseError, match="not a finite number") as info:
        datafiles.parse_csv_matrix(
            "x,y\n1,2\n3,abc\n",
            CsvOptions(header=True),
        )
    assert info.value.row == 3
    assert info.value.column == 2


def test_parse_csv_matrix_rows_count_blank_lines() -> None:
    """Reported rows are file lines, blank lines included."""
    with pytest.raises(CsvParseError, match="row 3, column 2") as info:
        datafiles.parse_csv_matrix("1,2\n\n3,x\n")
    assert info.value.row == 3
    assert info.value.column == 2
    with pytest.raises(CsvParseError, match="Row 4") as info:
        datafiles.parse_csv_matrix(
            "a,b\n\n1,2\n3\n",
            CsvOptions(header=True),
        )
    assert info.value.row == 4
    assert info.value.column == 2


def test_parse_csv_matrix_empty() -> None:
    """Empty input must raise an exception."""
    with pytest.raises(CsvParseError, match="no data"):
        datafiles.parse_csv_matrix("")
    with pytest.raises(CsvParseError, match="no data rows"):
        datafiles.parse_csv_matrix("a,b\n", CsvOptions(header=True))


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("0,3,5", ColumnSelection(indices=(0, 3, 5))),
        ("first:4", ColumnSelection(prefix=4)),
        ("random:2", ColumnSelection(random_count=2, seed=9)),
    ],
)
def test_column_selection_parse(text: str, expected: ColumnSelection) -> None:
    """Column selections parse from their three text forms."""
    assert ColumnSelection.parse(text, seed=9) == expected


def test_column_selection_invalid() -> None:
    """Invalid selections must raise an exception."""
    with pytest.raises(ValidationError, match="Invalid column selection"):
        ColumnSelection.parse("first:ten")
    with pytest.raises(ValidationError, match="exactly one"):
        ColumnSelection(prefix=2, random_count=2)
    with pytest.raises(ValidationError, match="positive"):
        ColumnSelection(prefix=0)
    with pytest.raises(ValidationError, match="Cannot select 5"):
        ColumnSelection(prefix=5).resolve(3)
    with pytest.raises(ValidationError, match="out of range"):
        ColumnSelection(indices=(0, 3)).resolve(3)


def test_column_selection_random_is_seeded() -> None:
    """A seeded random subset is reproducible and sorted."""
    first = ColumnSelection(random_count=10, seed=4).resolve(50)
    again = ColumnSelection(random_count=10, seed=4).resolve(50)
    np.testing.assert_array_equal(first, again)
    assert len(set(first.tolist())) == 10
    assert list(first) == sorted(first)


def test_log_returns() -> None:
    """Log returns of simple price paths."""
    np.testing.assert_allclose(
        datafiles.log_returns([[1.0], [math.e]]),
        [[1.0]],
    )
    np.testing.assert_array_equal(
        datafiles.log_returns(np.full((4, 2), 7.0)),
        np.zeros((3, 2)),
    )


def test_log_returns_telescope() -> None:
    """Column sums of the returns equal the log price ratio."""
    prices = np.exp(np.random.default_rng(0).standard_normal((30, 3)))
    returns = datafiles.log_returns(prices)
    np.testing.assert_allclose(
        returns.sum(axis=0),
        np.log(prices[-1] / prices[0]),
    )


def test_log_returns_invalid() -> None:
    """Non-positive prices and single rows must raise an exception."""
    with pytest.raises(ValidationError, match="row 2, column 1"):
        datafiles.log_returns([[1.0], [0.0]])
    with pytest.raises(ValidationError, match="at least 2"):
        datafiles.log_returns([[1.0, 2.0]])


@pytest.mark.asyncio
async def test_matrix_round_trip(tmp_path) -> None:
    """A written matrix reads back exactly."""
    data = np.random.default_rng(1).standard_normal((6, 4))
    path = tmp_path / "matrix.csv"
    await datafiles.write_matrix(data, path)
    np.testing.assert_allclose(
        await datafiles.read_csv_matrix(path),
        data,
        rtol=1e-15,
    )


@pytest.mark.asyncio
async def test_read_csv_matrix_missing_file(tmp_path) -> None:
    """A missing file must raise an exception."""
    with pytest.raises(OSError):
        await datafiles.read_csv_matrix(tmp_path / "absent.csv")


@pytest.mark.asyncio
async def test_read_csv_matrix_not_utf8(tmp_path) -> None:
    """Undecodable bytes report their line and column."""
    path = tmp_path / "latin.csv"
    path.write_bytes(b"1,2\n3,\xff\n5,6\n")
    with pytest.raises(CsvParseError, match="not valid UTF-8") as info:
        await datafiles.read_csv_matrix(path)
    assert info.value.row == 2
    assert info.value.column == 2


def level_report() -> SimulationReport:
    """Level report with a single row."""
    cfg = SimulationConfig(setting="ii", covariance=3, trials=200, seed=5)
    row = ReportRow.from_counts(cfg, 9)
    return SimulationReport(config=cfg, rows=[row], wall_time=1.5)


def power_report() -> SimulationReport:
    """Power report over the default grid."""
    cfg = SimulationConfig(mode="power", shock="b", trials=50, seed=5)
    rows = [
        ReportRow.from_counts(cfg, index * 5, h=h)
        for index, h in enumerate(cfg.h_grid)
    ]
    return SimulationReport(config=cfg, rows=rows, wall_time=2.0)


def test_report_columns() -> None:
    """The h column only appears in power reports."""
    level_header = ReportFormat.to_csv(level_report()).splitlines()[0]
    power_header = ReportFormat.to_csv(power_report()).splitlines()[0]
    assert level_header.split(",") == ReportFormat.LEVEL_COLUMNS
    assert power_header.split(",") == ReportFormat.POWER_COLUMNS
    assert "h" not in level_header.split(",")


def test_report_csv_has_no_wall_time() -> None:
    """CSV reports depend on the rows only."""
    report = level_report()
    text = ReportFormat.to_csv(report)
    report.wall_time = 99.0
    assert ReportFormat.to_csv(report) == text


def test_report_json() -> None:
    """JSON reports echo the configuration and the wall time."""
    document = json.loads(ReportFormat.to_json(power_report()))
    assert document["config"]["mode"] == "power"
    assert document["config"]["h_grid"][-1] == 1.0
    assert len(document["rows"]) == 11
    assert document["wall_time"] == 2.0


@pytest.mark.asyncio
@pytest.mark.parametrize("build", [level_report, power_report])
async def test_report_round_trip(tmp_path, build) -> None:
    """Rows survive a CSV write and read."""
    report = build()
    path = tmp_path / "report.csv"
    await datafiles.emit_report(report, path)
    assert await datafiles.read_report(path) == report.rows


@pytest_asyncio.fixture
async def level_report_path(tmp_path) -> Path:
    """Level report written as CSV.

    Returns:
        Path: The report file.

    """
    path = tmp_path / "level.csv"
    await datafiles.emit_report(level_report(), path)
    return path


@pytest.mark.asyncio
async def test_emitted_report_rows(level_report_path: Path) -> None:
    """A level report holds a header and one data row."""
    text = level_report_path.read_text(encoding="utf-8")
    assert len(text.splitlines()) == 2
    rows = await datafiles.read_report(level_report_path)
    assert rows[0].rate == pytest.approx(9 / 200)
    assert rows[0].h is None


@pytest.mark.asyncio
async def test_emit_report_unknown_format(tmp_path) -> None:
    """An unknown format must raise an exception."""
    with pytest.raises(ValidationError, match="Unknown report format"):
        await datafiles.emit_report(level_report(), tmp_path / "r", "xml")


@pytest.mark.asyncio
async def test_read_report_missing_columns(tmp_path) -> None:
    """A report without the expected columns must raise an exception."""
    path = tmp_path / "report.csv"
    path.write_text("mode,setting\nlevel,i\n", encoding="utf-8")
    with pytest.raises(CsvParseError, match="missing columns"):
        await datafiles.read_report(path)


@pytest.mark.asyncio
async def test_load_config(tmp_path) -> None:
    """Configuration files hold JSON objects."""
    path = tmp_path / "config.json"
    path.write_text('{"n": 100, "p": 50}', encoding="utf-8")
    assert await datafiles.load_config(path) == {"n": 100, "p": 50}
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValidationError, match="JSON object"):
        await datafiles.load_config(path)
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ValidationError, match="Invalid configuration"):
        await datafiles.load_config(path)
