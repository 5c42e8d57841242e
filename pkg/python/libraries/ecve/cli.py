"""
``ecve <command> [options]`` entry point dispatching to the tool modules.
"""
import logging
import sys

from ecve.errors import EcveError
from ecve.tools import benchmark
from ecve.tools import fit_reduction
from ecve.tools import gradient_check
from ecve.tools import reduce_predictors
from ecve.tools import simulation_study

LOGGER = logging.getLogger("ecve")

COMMANDS = {
    fit_reduction.COMMAND: fit_reduction,
    reduce_predictors.COMMAND: reduce_predictors,
    simulation_study.COMMAND: simulation_study,
    benchmark.COMMAND: benchmark,
    gradient_check.COMMAND: gradient_check,
}

USAGE = f"usage: ecve {{{','.join(COMMANDS)}}} [options]\n       ecve <command> --help"


def run(argv: list[str]) -> int:
    """
    Dispatch a command line without configuring logging or exiting.

    Returns:
        exit status: 0 success, 1 failed check, 2 usage or data error
    """
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0 if argv else 2

    command, arguments = argv[0], argv[1:]
    tool = COMMANDS.get(command)
    if tool is None:
        expected = ", ".join(COMMANDS)
        LOGGER.error(f"unknown command '{command}', expected one of: {expected}")
        return 2

    try:
        return tool.execute(arguments)
    except SystemExit as exit_error:
        # argparse exits 2 on invalid flags and 0 on --help
        return exit_error.code if isinstance(exit_error.code, int) else 2
    except FileNotFoundError as error:
        LOGGER.error(str(error))
        return 2
    except EcveError as error:
        LOGGER.error(f"{type(error).__name__}: {error}")
        return 2


def main(argv: list[str] = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="{levelname: <7} | {asctime} [{name}] {message}",
        style="{",
        stream=sys.stdout,
    )
    argv = argv if argv is not None else sys.argv[1:]
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
