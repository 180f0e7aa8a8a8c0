"""Numeric CSV files: data matrices, log returns and simulation reports.

Files are read and written asynchronously through :mod:`aiofiles`; parsing
and formatting go through :mod:`pandas`.

Typical usage:
    import asyncio
    from elliptical_gof.datafiles import (
        ColumnSelection,
        CsvOptions,
        log_returns,
        read_csv_matrix,
    )

    async def main():
        options = CsvOptions(header=True, columns=ColumnSelection(prefix=50))
        prices = await read_csv_matrix("prices.csv", options)
        returns = log_returns(prices)

    asyncio.run(main())
"""

import io
import json
import logging
import math
import re
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, ClassVar

import aiofiles
import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .errors import CsvParseError, ValidationError
from .numkit import DataMatrix, as_data_matrix
from .simulation import ReportRow, SimulationReport

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: Location pattern of the pandas tokenizer errors.
_TOKENIZER_LINE = re.compile(r"line (\d+), saw (\d+)")
_LINE_BREAK = re.compile(r"\r\n|\r|\n")


@dataclass(frozen=True)
class ColumnSelection:
    """Selection of a subset of columns.

    Exactly one of ``indices``, ``prefix`` or ``random_count`` is set.

    Attributes:
        indices: Zero-based column indices, in output order.
        prefix: Keep the first ``prefix`` columns.
        random_count: Keep a random subset of this size, drawn without
            replacement and returned in increasing order.
        seed: Seed of the random subset.

    """

    indices: tuple[int, ...] | None = None
    prefix: int | None = None
    random_count: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        """Validate the selection.

        Raises:
            ValidationError: If not exactly one rule is set or a size is
                not positive.

        """
        rules = [self.indices, self.prefix, self.random_count]
        if sum(rule is not None for rule in rules) != 1:
            msg = "Select columns by exactly one of indices, prefix or count"
            raise ValidationError(msg)
        if self.indices is not None:
            object.__setattr__(
                self,
                "indices",
                tuple(int(i) for i in self.indices),
            )
            if not self.indices:
                msg = "Column index list is empty"
                raise ValidationError(msg)
        for size in (self.prefix, self.random_count):
            if size is not None and size < 1:
                msg = f"Column count must be positive, got {size}"
                raise ValidationError(msg)

    @classmethod
    def parse(cls, text: str, seed: int | None = None) -> "ColumnSelection":
        """Parse ``"0,3,5"``, ``"first:10"`` or ``"random:10"``.

        Raises:
            ValidationError: If the text matches none of the forms.

        """
        kind, _, value = text.strip().partition(":")
        try:
            if kind == "first":
                return cls(prefix=int(value))
            if kind == "random":
                return cls(random_count=int(value), seed=seed)
            return cls(indices=tuple(int(i) for i in text.split(",")))
        except ValueError:
            msg = f"Invalid column selection: {text}"
            raise ValidationError(msg) from None

    def resolve(self, p: int) -> NDArray[np.intp]:
        """Column indices of the selection for a matrix with ``p`` columns.

        Raises:
            ValidationError: If the selection does not fit in ``p`` columns.

        """
        if self.indices is not None:
            chosen = np.asarray(self.indices, dtype=np.intp)
            if np.any(chosen < 0) or np.any(chosen >= p):
                msg = f"Column indices {self.indices} out of range 0..{p - 1}"
                raise ValidationError(msg)
            return chosen
        size = self.prefix if self.prefix is not None else self.random_count
        if size > p:
            msg = f"Cannot select {size} columns out of {p}"
            raise ValidationError(msg)
        if self.prefix is not None:
            return np.arange(size, dtype=np.intp)
        rng = np.random.default_rng(self.seed)
        return np.sort(rng.choice(p, size=size, replace=False))

    def apply(self, data: DataMatrix) -> DataMatrix:
        """Columns of ``data`` picked by the selection."""
        return data[:, self.resolve(data.shape[1])]


@dataclass(frozen=True)
class CsvOptions:
    """How to read a numeric CSV file.

    Attributes:
        header: The first line holds column names.
        columns: Optional column selection.
        delimiter: Field separator.

    """

    header: bool = False
    columns: ColumnSelection | None = None
    delimiter: str = ","


def _tokenizer_error(err: pd.errors.ParserError) -> CsvParseError:
    found = _TOKENIZER_LINE.search(str(err))
    if found is None:
        return CsvParseError(f"Malformed CSV: {err}", row=0)
    row = int(found.group(1))
    msg = f"Row {row} has {found.group(2)} fields, expected fewer"
    return CsvParseError(msg, row=row)


def _data_lines(text: str, header: bool) -> list[int]:
    """One-based file line of each data row, blank lines skipped."""
    lines = [
        number
        for number, line in enumerate(_LINE_BREAK.split(text), start=1)
        if line.strip()
    ]
    return lines[1:] if header else lines


def parse_csv_matrix(
    text: str,
    options: CsvOptions | None = None,
) -> DataMatrix:
    """Parse CSV text into a numeric matrix.

    Args:
        text: File content.
        options: Reading options.

    Returns:
        The ``n x p`` matrix, after column selection.

    Raises:
        CsvParseError: If rows are ragged or a cell is not numeric; the
            error carries the one-based line and column.

    """
    options = options or CsvOptions()
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            sep=options.delimiter,
            header=0 if options.header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        msg = "CSV file has no data"
        raise CsvParseError(msg, row=1) from None
    except pd.errors.ParserError as err:
        raise _tokenizer_error(err) from None

    offset = 2 if options.header else 1
    if frame.shape[0] == 0:
        msg = "CSV file has no data rows"
        raise CsvParseError(msg, row=offset)
    lines = _data_lines(text, options.header)
    if len(lines) != frame.shape[0]:
        # Quoted line breaks, fall back to record numbers.
        lines = list(range(offset, offset + frame.shape[0]))
    missing = frame.isna().to_numpy()
    if missing.any():
        row, column = np.argwhere(missing)[0]
        msg = f"Row {lines[row]} has only {column} fields"
        raise CsvParseError(msg, row=lines[row], column=int(column) + 1)

    values = frame.apply(
        lambda col: pd.to_numeric(col.str.strip(), errors="coerce"),
    ).to_numpy(dtype=np.float64)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, column = bad[0]
        cell = frame.iat[row, column]
        msg = (
            f"Cell at row {lines[row]}, column {column + 1} is not a "
            f"finite number: {cell!r}"
        )
        raise CsvParseError(msg, row=lines[row], column=int(column) + 1)
    logger.debug("Parsed %d x %d matrix", *values.shape)
    if options.columns is not None:
        values = options.columns.apply(values)
    return values


async def read_csv_matrix(
    path: str | Path,
    options: CsvOptions | None = None,
) -> DataMatrix:
    """Read a numeric matrix from a CSV file.

    Args:
        path: File to read.
        options: Reading options.

    Returns:
        The ``n x p`` matrix, after column selection.

    Raises:
        CsvParseError: If the content is not UTF-8 text or not a
            rectangular numeric table.
        OSError: If the file cannot be read.

    """
    options = options or CsvOptions()
    logger.debug("Read CSV matrix from %s", path)
    async with aiofiles.open(path, mode="rb") as file:
        raw = await file.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        row = raw.count(b"\n", 0, err.start) + 1
        start = raw.rfind(b"\n", 0, err.start) + 1
        sep = options.delimiter.encode("utf-8")
        column = raw.count(sep, start, err.start) + 1
        msg = f"Row {row}, column {column} is not valid UTF-8 text"
        raise CsvParseError(msg, row=row, column=column) from None
    return parse_csv_matrix(text, options)


def log_returns(prices: ArrayLike) -> DataMatrix:
    """Log returns ``log(P_{t+1} / P_t)`` of every column.

    Args:
        prices: ``n x p`` strictly positive prices, ``n >= 2``.

    Returns:
        The ``(n - 1) x p`` matrix of returns.

    Raises:
        ValidationError: If a price is not positive or ``n < 2``.

    """
    matrix = as_data_matrix(prices)
    if matrix.shape[0] < 2:
        msg = f"Need at least 2 price rows, got {matrix.shape[0]}"
        raise ValidationError(msg)
    bad = np.argwhere(matrix <= 0)
    if bad.size:
        row, column = bad[0]
        msg = (
            f"Price at row {row + 1}, column {column + 1} is not positive: "
            f"{matrix[row, column]}"
        )
        raise ValidationError(msg)
    return np.diff(np.log(matrix), axis=0)


async def write_matrix(data: ArrayLike, path: str | Path) -> None:
    """Write a matrix as headerless CSV with round-trip float precision."""
    matrix = as_data_matrix(data)
    buffer = io.StringIO()
    pd.DataFrame(matrix).to_csv(buffer, header=False, index=False)
    async with aiofiles.open(path, mode="w", encoding="utf-8") as file:
        await file.write(buffer.getvalue())
    logger.debug("Wrote %d x %d matrix to %s", *matrix.shape, path)


class ReportFormat:
    """Serializations of a simulation report."""

    #: Header of a level report, in emission order.
    LEVEL_COLUMNS: ClassVar[list[str]] = [
        "mode",
        "setting",
        "covariance",
        "n",
        "p",
        "alpha",
        "rejections",
        "trials",
        "rate",
        "se",
        "seed",
    ]
    #: Header of a power report, ``h`` follows the cell identifiers.
    POWER_COLUMNS: ClassVar[list[str]] = [
        *LEVEL_COLUMNS[:5],
        "h",
        *LEVEL_COLUMNS[5:],
    ]
    #: Supported output formats.
    FORMATS: ClassVar[frozenset[str]] = frozenset({"csv", "json"})

    @classmethod
    def columns(cls, rows: Sequence[ReportRow]) -> list[str]:
        """Header matching the rows, power columns if any row has ``h``."""
        if any(row.h is not None for row in rows):
            return cls.POWER_COLUMNS
        return cls.LEVEL_COLUMNS

    @classmethod
    def to_csv(cls, report: SimulationReport) -> str:
        """CSV text of the report rows."""
        columns = cls.columns(report.rows)
        frame = pd.DataFrame(
            [asdict(row) for row in report.rows],
            columns=[f.name for f in fields(ReportRow)],
        )
        buffer = io.StringIO()
        frame.to_csv(buffer, columns=columns, index=False, lineterminator="\n")
        return buffer.getvalue()

    @staticmethod
    def to_json(report: SimulationReport) -> str:
        """JSON text with the configuration echo, rows and wall time."""
        document: dict[str, Any] = {
            "config": report.config.to_dict(),
            "rows": [asdict(row) for row in report.rows],
            "wall_time": report.wall_time,
        }
        return json.dumps(document, indent=2) + "\n"


async def emit_report(
    report: SimulationReport,
    path: str | Path,
    fmt: str = "csv",
) -> None:
    """Write a simulation report.

    The CSV form holds the rows only, so it is byte-identical for a given
    configuration; the JSON form adds the configuration echo and the wall
    time.

    Args:
        report: Report to write.
        path: Destination file.
        fmt: ``"csv"`` or ``"json"``.

    Raises:
        ValidationError: If the format is unknown.
        OSError: If the file cannot be written.

    """
    if fmt not in ReportFormat.FORMATS:
        msg = f"Unknown report format: {fmt}"
        raise ValidationError(msg)
    text = (
        ReportFormat.to_csv(report)
        if fmt == "csv"
        else ReportFormat.to_json(report)
    )
    async with aiofiles.open(path, mode="w", encoding="utf-8") as file:
        await file.write(text)
    logger.info("Report with %d rows written to %s", len(report.rows), path)


def _row_from_record(record: dict[str, Any]) -> ReportRow:
    h = record.get("h")
    return ReportRow(
        mode=str(record["mode"]),
        setting=str(record["setting"]),
        covariance=int(record["covariance"]),
        n=int(record["n"]),
        p=int(record["p"]),
        h=None if h is None or math.isnan(h) else float(h),
        alpha=float(record["alpha"]),
        rejections=int(record["rejections"]),
        trials=int(record["trials"]),
        rate=float(record["rate"]),
        se=float(record["se"]),
        seed=int(record["seed"]),
    )


async def read_report(path: str | Path) -> list[ReportRow]:
    """Parse the rows of a CSV report written by :func:`emit_report`.

    Raises:
        CsvParseError: If a column is missing.

    """
    async with aiofiles.open(path, encoding="utf-8") as file:
        text = await file.read()
    frame = pd.read_csv(
        io.StringIO(text),
        dtype={"mode": str, "setting": str, "seed": "uint64"},
        float_precision="round_trip",
    )
    missing = sorted(set(ReportFormat.LEVEL_COLUMNS) - set(frame.columns))
    if missing:
        msg = f"Report is missing columns: {', '.join(missing)}"
        raise CsvParseError(msg, row=1)
    return [_row_from_record(record) for record in frame.to_dict("records")]


async def load_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON configuration document.

    Raises:
        ValidationError: If the document is not a JSON object.

    """
    async with aiofiles.open(path, encoding="utf-8") as file:
        text = await file.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        msg = f"Invalid configuration file {path}: {err}"
        raise ValidationError(msg) from None
    if not isinstance(document, dict):
        msg = f"Configuration file {path} must hold a JSON object"
        raise ValidationError(msg)
    return document

