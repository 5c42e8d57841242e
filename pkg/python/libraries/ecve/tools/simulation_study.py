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
from ecve.estimator import parse_method_spec
from ecve.optimizer import OptimizerConfig
from ecve.optimizer import SearchDirection
from ecve.simulation import REPLICATE_CSV_HEADER
from ecve.simulation import STUDY_CSV_HEADER
from ecve.simulation import StudyResult
from ecve.simulation import ensemble_size_sweep
from ecve.simulation import format_study_table
from ecve.simulation import replicate_rows
from ecve.simulation import study_grid
from ecve.simulation import study_rows
from ecve.tableio import write_rows_csv

COMMAND = "simulate"
FILENAME = Path(__file__).stem
LOGGER = logging.getLogger(FILENAME)


@dataclasses.dataclass
class SimulateRunConfig:
    model: list[str] = dataclasses.field(default_factory=lambda: ["M1"])
    dist: list[str] = dataclasses.field(default_factory=lambda: ["I"])
    n: list[int] = dataclasses.field(default_factory=lambda: [100])
    method: list[str] = dataclasses.field(default_factory=lambda: ["fourier"])
    reps: int = 30
    m_list: list[int] = dataclasses.field(default_factory=list)
    seed: int = 0
    threads: int | None = None
    attempts: int = OptimizerConfig.attempts
    max_iter: int = OptimizerConfig.max_iter
    tol_rel: float = OptimizerConfig.tol_rel
    weighted_direction: str = OptimizerConfig.weighted_direction.value


def _search_direction(value: str) -> SearchDirection:
    try:
        return SearchDirection(value)
    except ValueError:
        raise UsageError(f"unknown weighted direction '{value}'") from None


def optimizer_config(run_config) -> OptimizerConfig:
    return OptimizerConfig(
        attempts=run_config.attempts,
        max_iter=run_config.max_iter,
        tol_rel=run_config.tol_rel,
        weighted_direction=_search_direction(run_config.weighted_direction),
    )


def emit_results(
    results: list[StudyResult],
    out_path: Path | None,
    long_out_path: Path | None = None,
):
    """
    Print the aligned table and write the study csv files that were requested.
    """
    print(format_study_table(results))
    if out_path is not None:
        write_rows_csv(out_path, STUDY_CSV_HEADER, study_rows(results))
        LOGGER.info(f"{len(results)} study rows written to '{out_path}'")
    if long_out_path is not None:
        write_rows_csv(long_out_path, REPLICATE_CSV_HEADER, replicate_rows(results))
        LOGGER.info(f"replicate errors written to '{long_out_path}'")


def run_simulation(
    run_config: SimulateRunConfig,
    threads: int = 1,
) -> list[StudyResult]:
    opt = optimizer_config(run_config)
    if not run_config.m_list:
        return study_grid(
            models=run_config.model,
            dists=run_config.dist,
            n_list=run_config.n,
            methods=run_config.method,
            r=run_config.reps,
            seed=run_config.seed,
            opt=opt,
            threads=threads,
        )

    results = []
    for method_text in run_config.method:
        method = parse_method_spec(method_text)
        for model in run_config.model:
            for dist in run_config.dist:
                for n in run_config.n:
                    results += ensemble_size_sweep(
                        model,
                        dist,
                        n,
                        method.ensemble.kind,
                        run_config.m_list,
                        method.weighting,
                        r=run_config.reps,
                        seed=run_config.seed,
                        opt=opt,
                        threads=threads,
                    )
    return results


def get_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=f"ecve {COMMAND}",
        description=(
            "Monte Carlo study of the subspace estimation error over every combination "
            "of the given models, predictor distributions, sample sizes and methods."
        ),
    )
    parser.add_argument(
        "--model",
        type=str,
        nargs="+",
        default=None,
        help="simulation models among M1 .. M7.",
    )
    parser.add_argument(
        "--dist",
        type=str,
        nargs="+",
        default=None,
        help="predictor distributions among I, II, III.",
    )
    parser.add_argument(
        "--n",
        type=int,
        nargs="+",
        default=None,
        help="sample sizes.",
    )
    parser.add_argument(
        "--method",
        type=str,
        nargs="+",
        default=None,
        help="methods as ensemble_spec[+weighted], ex: fourier indicator:auto+weighted cve",
    )
    parser.add_argument(
        "--reps",
        type=int,
        default=None,
        help="number of replicates per cell.",
    )
    parser.add_argument(
        "--m-list",
        type=int,
        nargs="+",
        default=None,
        help=(
            "ensemble sizes to sweep, the m of every --method is then replaced by "
            "each of these values."
        ),
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help="filesystem path to write the study csv to.",
    )
    parser.add_argument(
        "--long-out",
        type=Path,
        default=None,
        help="filesystem path to write one row per replicate to.",
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
        SimulateRunConfig(), COMMAND, load_config_file(parsed.config), cli_values
    )
    threads = resolve_threads(cli_threads, run_config.threads)
    if run_config.reps < 1:
        raise UsageError(f"--reps must be >= 1, got {run_config.reps}")

    start_time = time.time()
    results = run_simulation(run_config, threads=threads)
    LOGGER.info(f"{len(results)} studies took {time.time() - start_time:.2f}s")

    emit_results(results, parsed.out, parsed.long_out)
    return 0
