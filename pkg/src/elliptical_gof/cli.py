"""Command line interface.

Subcommands:

* ``test``: run the goodness-of-fit test on a CSV file and print the result
  as JSON; the exit code is 0 when the elliptical model is accepted and 1
  when it is rejected.
* ``simulate-level`` and ``simulate-power``: Monte Carlo studies, written as
  CSV reports.
* ``generate``: dump a synthetic dataset to CSV.
* ``sweep``: dimension sweeps over the columns of a CSV file.

Errors exit with code 2.

Typical usage:
    elliptical-gof test returns.csv --header --columns first:200
    elliptical-gof -v simulate-level --setting ii --covariance 2 --seed 42
    elliptical-gof simulate-power --shock a --h-grid 0,0.5,1 --out power.csv
"""

import argparse
import asyncio
import io
import json
import logging
import sys
from collections.abc import Awaitable, Callable
from pathlib import Path

import aiofiles
import pandas as pd

from . import __version__
from .datafiles import (
    ColumnSelection,
    CsvOptions,
    ReportFormat,
    emit_report,
    load_config,
    log_returns,
    read_csv_matrix,
    write_matrix,
)
from .errors import ValidationError
from .goftest import TestOptions, run_test
from .models import (
    LEVEL_SETTINGS,
    AlternativeModel,
    CovarianceKind,
    alternative_sample,
    elliptical_sample,
    level_setting,
    shock_family,
)
from .numkit import DataMatrix
from .realdata import prefix_sweep, random_subset_sweep
from .simulation import (
    SimulationConfig,
    SimulationMode,
    SimulationReport,
    population_root,
    simulate_grid,
    simulate_level,
    simulate_power,
    trial_rng,
)

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: Exit code of an accepted test or a successful command.
EXIT_ACCEPT = 0
#: Exit code of a rejected test.
EXIT_REJECT = 1
#: Exit code of an invalid input or an I/O failure.
EXIT_ERROR = 2

Handler = Callable[[argparse.Namespace], Awaitable[int]]


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        msg = f"expected comma separated integers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        msg = f"expected comma separated numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


async def _write_text(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    async with aiofiles.open(path, mode="w", encoding="utf-8") as file:
        await file.write(text)


async def _load_data(args: argparse.Namespace) -> DataMatrix:
    columns = (
        ColumnSelection.parse(args.columns, seed=args.column_seed)
        if args.columns
        else None
    )
    options = CsvOptions(
        header=args.header,
        delimiter=args.delimiter,
        columns=columns,
    )
    data = await read_csv_matrix(args.path, options)
    if args.log_returns:
        data = log_returns(data)
    return data


def _test_options(args: argparse.Namespace) -> TestOptions:
    return TestOptions(
        alpha=args.alpha,
        center=args.center,
        drop_odd_row=args.drop_odd_row,
        shuffle_seed=args.shuffle_seed,
    )


async def _config(
    args: argparse.Namespace,
    mode: SimulationMode,
) -> SimulationConfig:
    mapping = await load_config(args.config) if args.config else {}
    return SimulationConfig.from_mapping(mapping).with_overrides(
        mode=mode.value,
        setting=getattr(args, "setting", None),
        shock=getattr(args, "shock", None),
        h_grid=(
            tuple(args.h_grid) if getattr(args, "h_grid", None) else None
        ),
        covariance=args.covariance,
        n=args.n,
        p=args.p,
        trials=args.trials,
        alpha=args.alpha,
        seed=args.seed,
        threads=args.threads,
    )


async def _write_report(
    report: SimulationReport,
    args: argparse.Namespace,
) -> None:
    if args.out is None:
        text = (
            ReportFormat.to_csv(report)
            if args.format == "csv"
            else ReportFormat.to_json(report)
        )
        await _write_text(text, None)
    else:
        await emit_report(report, args.out, args.format)


async def run_test_command(args: argparse.Namespace) -> int:
    """Run the test on a CSV file and print the result as JSON."""
    data = await _load_data(args)
    result = run_test(data, _test_options(args))
    text = json.dumps(result.to_dict(), indent=2, default=float) + "\n"
    await _write_text(text, args.out)
    return EXIT_REJECT if result.reject else EXIT_ACCEPT


async def run_level_command(args: argparse.Namespace) -> int:
    """Run a level study, a single cell or the full grid."""
    cfg = await _config(args, SimulationMode.LEVEL)
    if args.grid:
        report = await simulate_grid(
            cfg,
            LEVEL_SETTINGS,
            [kind.value for kind in CovarianceKind],
            args.dims or [cfg.p],
        )
    else:
        report = await simulate_level(cfg)
    await _write_report(report, args)
    return EXIT_ACCEPT


async def run_power_command(args: argparse.Namespace) -> int:
    """Run a power study over the ``h`` grid."""
    cfg = await _config(args, SimulationMode.POWER)
    report = await simulate_power(cfg)
    await _write_report(report, args)
    return EXIT_ACCEPT


async def run_generate_command(args: argparse.Namespace) -> int:
    """Write one synthetic dataset.

    The dataset equals the first trial of the matching simulation.
    """
    if args.model == "elliptical":
        cfg = await _config(args, SimulationMode.LEVEL)
        data = elliptical_sample(
            cfg.n,
            population_root(cfg),
            level_setting(cfg.setting, cfg.p),
            trial_rng(cfg.seed, 0),
        )
    else:
        cfg = await _config(args, SimulationMode.POWER)
        alt = AlternativeModel(
            population_root(cfg),
            args.h,
            shock_family(cfg.shock),
            p=cfg.p,
        )
        data = alternative_sample(cfg.n, alt, trial_rng(cfg.seed, 0))
    await write_matrix(data, args.out)
    return EXIT_ACCEPT


async def run_sweep_command(args: argparse.Namespace) -> int:
    """Run a prefix or random-subset dimension sweep."""
    data = await _load_data(args)
    opts = _test_options(args)
    records = []
    if args.subset_size is not None:
        sweep = random_subset_sweep(
            data,
            args.subset_size,
            args.repeats,
            args.sweep_seed,
            opts,
        )
        for repeat, result in enumerate(sweep.results):
            records.append((sweep.d, repeat, result))
        logger.info("Median p-value: %.4g", sweep.median)
    else:
        dims = args.dims or [data.shape[1]]
        for d, result in prefix_sweep(data, dims, opts):
            records.append((d, 0, result))
    frame = pd.DataFrame(
        [
            {
                "d": d,
                "repeat": repeat,
                "p_value": result.p_value,
                "t_n": result.t_n,
                "sigma_hat": result.sigma_hat,
                "reject": result.reject,
            }
            for d, repeat, result in records
        ],
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    await _write_text(buffer.getvalue(), args.out)
    return EXIT_ACCEPT


def _csv_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "path",
        type=Path,
        help="CSV file, one row per observation",
    )
    parent.add_argument(
        "--header",
        action="store_true",
        help="first line holds column names",
    )
    parent.add_argument("--delimiter", default=",", help="field separator")
    parent.add_argument(
        "--columns",
        help="column selection: 0,3,5 or first:D or random:D",
    )
    parent.add_argument(
        "--column-seed",
        type=int,
        default=None,
        help="seed of a random:D column selection",
    )
    parent.add_argument(
        "--log-returns",
        action="store_true",
        help="test log returns of the columns instead of the raw values",
    )
    parent.add_argument(
        "--center",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="subtract the column means (default: on)",
    )
    parent.add_argument(
        "--drop-odd-row",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="drop the last row of an odd sample (default: on)",
    )
    parent.add_argument(
        "--shuffle-seed",
        type=int,
        default=None,
        help="shuffle rows with this seed before splitting",
    )
    parent.add_argument("--alpha", type=float, default=0.05, help="level")
    parent.add_argument("--out", type=Path, default=None, help="output file")
    return parent


def _simulation_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON configuration, flags override its values",
    )
    parent.add_argument("--covariance", type=int, help="covariance model 1-4")
    parent.add_argument("--n", type=int, help="sample size")
    parent.add_argument("--p", type=int, help="dimension")
    parent.add_argument("--trials", type=int, help="datasets per cell")
    parent.add_argument("--alpha", type=float, help="nominal level")
    parent.add_argument("--seed", type=int, help="master seed")
    parent.add_argument("--threads", type=int, help="worker threads")
    return parent


def _report_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None, help="report file")
    parser.add_argument(
        "--format",
        choices=sorted(ReportFormat.FORMATS),
        default="csv",
        help="report format",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of all subcommands."""
    parser = argparse.ArgumentParser(
        prog="elliptical-gof",
        description="Goodness-of-fit test for high-dimensional elliptical "
        "models",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for progress, -vv for debug output",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    csv_parent = _csv_parent()
    simulation_parent = _simulation_parent()

    test = commands.add_parser(
        "test",
        parents=[csv_parent],
        help="test a CSV dataset",
    )
    test.set_defaults(handler=run_test_command)

    level = commands.add_parser(
        "simulate-level",
        parents=[simulation_parent],
        help="empirical level study",
    )
    level.add_argument("--setting", help="mixing setting i-v")
    level.add_argument(
        "--grid",
        action="store_true",
        help="run every setting and covariance model",
    )
    level.add_argument(
        "--dims",
        type=_int_list,
        default=None,
        help="dimensions of the grid, comma separated",
    )
    _report_options(level)
    level.set_defaults(handler=run_level_command)

    power = commands.add_parser(
        "simulate-power",
        parents=[simulation_parent],
        help="power study",
    )
    power.add_argument("--shock", help="shock family a or b")
    power.add_argument(
        "--h-grid",
        type=_float_list,
        default=None,
        help="perturbation weights, comma separated",
    )
    _report_options(power)
    power.set_defaults(handler=run_power_command)

    generate = commands.add_parser(
        "generate",
        parents=[simulation_parent],
        help="write a synthetic dataset",
    )
    generate.add_argument(
        "--model",
        choices=["elliptical", "alternative"],
        default="elliptical",
    )
    generate.add_argument("--setting", help="mixing setting i-v")
    generate.add_argument("--shock", help="shock family a or b")
    generate.add_argument(
        "--h",
        type=float,
        default=1.0,
        help="perturbation weight of the alternative model",
    )
    generate.add_argument("--out", type=Path, required=True)
    generate.set_defaults(handler=run_generate_command)

    sweep = commands.add_parser(
        "sweep",
        parents=[csv_parent],
        help="dimension sweep over the columns of a CSV dataset",
    )
    sweep.add_argument(
        "--dims",
        type=_int_list,
        default=None,
        help="prefix dimensions, comma separated",
    )
    sweep.add_argument(
        "--subset-size",
        type=int,
        default=None,
        help="size of random column subsets",
    )
    sweep.add_argument("--repeats", type=int, default=100)
    sweep.add_argument("--sweep-seed", type=int, default=0)
    sweep.set_defaults(handler=run_sweep_command)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    """Entry point of the ``elliptical-gof`` command.

    Args:
        argv: Arguments without the program name, defaults to
            ``sys.argv[1:]``.

    Returns:
        The exit code.

    """
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    handler: Handler = args.handler
    try:
        return asyncio.run(handler(args))
    except (ValidationError, OSError) as err:
        logger.debug("Command failed", exc_info=True)
        sys.stderr.write(f"elliptical-gof: error: {err}\n")
        return EXIT_ERROR
    except Exception as err:
        logger.exception("Unexpected failure")
        sys.stderr.write(f"elliptical-gof: error: {err}\n")
        return EXIT_ERROR
