import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import pandas

from ecve.config import add_common_arguments
from ecve.config import load_config_file
from ecve.config import resolve_run_config
from ecve.errors import EcveError
from ecve.errors import UsageError
from ecve.estimator import EcveFit
from ecve.estimator import reduce
from ecve.tableio import atomic_write_text
from ecve.tableio import frame_to_csv_text
from ecve.tableio import read_numeric_csv

COMMAND = "reduce"
FILENAME = Path(__file__).stem
LOGGER = logging.getLogger(FILENAME)


@dataclasses.dataclass
class ReduceRunConfig:
    # default to the response column name stored in the fit
    response: str | None = None


def read_fit(fit_path: Path) -> EcveFit:
    fit_path = Path(fit_path)
    if not fit_path.exists():
        raise FileNotFoundError(f"fit file '{fit_path}' doesn't exist on disk.")
    try:
        return EcveFit.from_json(fit_path.read_text(encoding="utf-8"))
    except EcveError:
        raise
    except (KeyError, TypeError, ValueError) as error:
        raise UsageError(f"'{fit_path}' is not a valid fit file: {error!r}") from None


def reduce_frame(
    fitted: EcveFit,
    frame: pandas.DataFrame,
    response: str | None = None,
) -> pandas.DataFrame:
    """
    Project the predictor columns of a table on the fitted reduction.

    Predictor columns are selected by the names stored in the fit when there are
    some, else every column except the response is used in file order.

    Returns:
        DataFrame with columns b1..bk followed by the response when present
    """
    response = response or fitted.response_name
    has_response = response is not None and response in frame.columns

    if fitted.feature_names:
        missing = [name for name in fitted.feature_names if name not in frame.columns]
        if missing:
            raise UsageError(f"predictor columns {missing} of the fit are missing")
        predictors = frame[list(fitted.feature_names)]
    else:
        predictors = frame.drop(columns=[response]) if has_response else frame

    if predictors.shape[1] != fitted.p:
        raise UsageError(
            f"the fit expects p={fitted.p} predictors, got {predictors.shape[1]} columns"
        )

    reduced = reduce(fitted, predictors.to_numpy())
    result = pandas.DataFrame(
        reduced,
        columns=[f"b{column + 1}" for column in range(fitted.k)],
        index=frame.index,
    )
    if has_response:
        result[response] = frame[response]
    return result


def get_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=f"ecve {COMMAND}",
        description="Apply a fitted reduction to the predictors of a csv file.",
    )
    parser.add_argument(
        "fit_path",
        type=Path,
        help="filesystem path to a fit JSON written by the fit command.",
    )
    parser.add_argument(
        "csv_path",
        type=Path,
        help="filesystem path to a comma-separated file with a header row.",
    )
    parser.add_argument(
        "--response",
        type=str,
        default=None,
        help="name of the response column passed through to the output.",
    )
    parser.add_argument(
        "--out",
        type=Path,
        required=True,
        help="filesystem path to write the reduced csv to.",
    )
    add_common_arguments(parser, with_threads=False)
    return parser


def execute(argv: list[str] = None) -> int:
    """
    Args:
        argv: list of command line argument for the CLI

    Returns:
        exit status
    """
    cli = get_cli()
    argv = argv if argv is not None else sys.argv[1:]
    parsed = cli.parse_args(argv)
    if parsed.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    run_config = resolve_run_config(
        ReduceRunConfig(), COMMAND, load_config_file(parsed.config), vars(parsed)
    )
    fitted = read_fit(parsed.fit_path)
    frame = read_numeric_csv(parsed.csv_path)
    reduced = reduce_frame(fitted, frame, response=run_config.response)

    atomic_write_text(parsed.out, frame_to_csv_text(reduced))
    LOGGER.info(f"{len(reduced)} reduced rows written to '{parsed.out}'")
    return 0
