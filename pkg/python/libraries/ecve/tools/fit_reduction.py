import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from ecve.config import add_common_arguments
from ecve.config import add_optimizer_arguments
from ecve.config import load_config_file
from ecve.config import resolve_run_config
from ecve.config import resolve_threads
from ecve.errors import UsageError
from ecve.estimator import EcveFit
from ecve.estimator import coefficient_table
from ecve.estimator import fit
from ecve.estimator import parse_method_spec
from ecve.optimizer import OptimizerConfig
from ecve.tableio import atomic_write_text
from ecve.tools.simulation_study import optimizer_config
from ecve.tableio import read_numeric_csv

COMMAND = "fit"
FILENAME = Path(__file__).stem
LOGGER = logging.getLogger(FILENAME)


@dataclasses.dataclass
class FitRunConfig:
    response: str = "y"
    k: int = 1
    method: str = "fourier"
    drop: list[str] = dataclasses.field(default_factory=list)
    seed: int = 0
    threads: int | None = None
    attempts: int = OptimizerConfig.attempts
    max_iter: int = OptimizerConfig.max_iter
    tol_rel: float = OptimizerConfig.tol_rel
    weighted_direction: str = OptimizerConfig.weighted_direction.value


def fit_csv(
    csv_path: Path,
    run_config: FitRunConfig,
    threads: int = 1,
) -> EcveFit:
    """
    Fit a reduction of every numeric column of the csv file except the response.

    Args:
        csv_path: filesystem path to an existing csv with a header row
        run_config: command configuration
        threads: number of optimizer restarts run concurrently

    Returns:
        the fitted reduction, holding the predictor names
    """
    frame = read_numeric_csv(csv_path, drop=run_config.drop)
    if run_config.response not in frame.columns:
        raise UsageError(
            f"response column '{run_config.response}' not found in '{csv_path}', "
            f"available: {list(frame.columns)}"
        )
    predictors = frame.drop(columns=[run_config.response])
    p = predictors.shape[1]
    if not 1 <= run_config.k < p:
        raise UsageError(
            f"expected 1 <= k < p, got k={run_config.k} for p={p} predictors"
        )

    method = parse_method_spec(run_config.method)
    opt = dataclasses.replace(
        optimizer_config(run_config), seed=run_config.seed, threads=threads
    )
    return fit(
        predictors.to_numpy(),
        frame[run_config.response].to_numpy(),
        run_config.k,
        ensemble_spec=method.ensemble,
        weighting=method.weighting,
        opt=opt,
        feature_names=list(predictors.columns),
        response_name=run_config.response,
    )


def get_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=f"ecve {COMMAND}",
        description=(
            "Estimate a sufficient dimension reduction of the predictors of a csv file "
            "and write it as JSON."
        ),
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
        help="name of the response column, every other retained column is a predictor.",
    )
    parser.add_argument(
        "--k",
        type=int,
        default=None,
        help="dimension of the reduction.",
    )
    parser.add_argument(
        "--method",
        type=str,
        default=None,
        help=(
            "ensemble_spec[+weighted] where ensemble_spec is one of "
            "identity | fourier:m | indicator:m | monomial:m | boxcox:m, m=auto by default."
        ),
    )
    parser.add_argument(
        "--drop",
        type=str,
        nargs="*",
        default=None,
        help="columns to ignore, ex: non-continuous predictors.",
    )
    parser.add_argument(
        "--out",
        type=Path,
        required=True,
        help="filesystem path to write the fit JSON to.",
    )
    add_common_arguments(parser)
    add_optimizer_arguments(parser)
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

    cli_values = vars(parsed).copy()
    cli_threads = cli_values.pop("threads")
    run_config = resolve_run_config(
        FitRunConfig(), COMMAND, load_config_file(parsed.config), cli_values
    )
    threads = resolve_threads(cli_threads, run_config.threads)

    start_time = time.time()
    LOGGER.info(f"fitting '{parsed.csv_path}' (response '{run_config.response}')")
    fitted = fit_csv(parsed.csv_path, run_config, threads=threads)
    LOGGER.info(f"fit took {time.time() - start_time:.2f}s")

    atomic_write_text(parsed.out, fitted.to_json())
    print(coefficient_table(fitted))
    LOGGER.info(f"fit written to '{parsed.out}'")
    return 0
