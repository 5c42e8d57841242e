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
from ecve.optimizer import OptimizerConfig
from ecve.simulation import StudyResult
from ecve.simulation import run_study
from ecve.tools.simulation_study import emit_results
from ecve.tools.simulation_study import optimizer_config

COMMAND = "bench"
FILENAME = Path(__file__).stem
LOGGER = logging.getLogger(FILENAME)


@dataclasses.dataclass
class BenchRunConfig:
    model: str = "M1"
    dist: str = "I"
    n: int = 100
    method: str = "fourier"
    reps: int = 30
    k: int | None = None
    seed: int = 0
    threads: int | None = None
    attempts: int = OptimizerConfig.attempts
    max_iter: int = OptimizerConfig.max_iter
    tol_rel: float = OptimizerConfig.tol_rel
    weighted_direction: str = OptimizerConfig.weighted_direction.value


def run_bench(run_config: BenchRunConfig, threads: int = 1) -> StudyResult:
    return run_study(
        run_config.model,
        run_config.dist,
        run_config.n,
        run_config.method,
        r=run_config.reps,
        seed=run_config.seed,
        opt=optimizer_config(run_config),
        threads=threads,
        k=run_config.k,
    )


def get_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=f"ecve {COMMAND}",
        description=(
            "Time and measure the subspace estimation error of one method on one "
            "simulation setting."
        ),
    )
    parser.add_argument("--model", type=str, default=None, help="one of M1 .. M7.")
    parser.add_argument("--dist", type=str, default=None, help="one of I, II, III.")
    parser.add_argument("--n", type=int, default=None, help="sample size.")
    parser.add_argument(
        "--method",
        type=str,
        default=None,
        help="ensemble_spec[+weighted], ex: fourier, indicator:8+weighted, cve",
    )
    parser.add_argument(
        "--reps",
        type=int,
        default=None,
        help="number of replicates.",
    )
    parser.add_argument(
        "--k",
        type=int,
        default=None,
        help=(
            "reduction dimension, defaults to the model's. A smaller k is compared "
            "against the trailing k true directions."
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
        BenchRunConfig(), COMMAND, load_config_file(parsed.config), cli_values
    )
    threads = resolve_threads(cli_threads, run_config.threads)

    start_time = time.time()
    result = run_bench(run_config, threads=threads)
    elapsed = time.time() - start_time

    emit_results([result], parsed.out, parsed.long_out)
    print(
        f"{result.replicates} replicates in {elapsed:.2f}s "
        f"({elapsed / result.replicates:.3f}s per replicate), "
        f"median error {result.median:.3f}"
        + (", sd undefined for a single replicate" if result.sd_degenerate else "")
    )
    return 0
