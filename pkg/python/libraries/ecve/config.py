"""
Layered configuration of the command line tools.

Precedence: command line flag > JSON config file > dataclass default. The config
file holds one object per command name plus an optional ``"common"`` object
shared by every command::

    {
        "common": {"seed": 3, "threads": 4},
        "bench": {"reps": 30, "method": "fourier"}
    }
"""
import dataclasses
import json
import logging
import os
from pathlib import Path
from typing import Any
from typing import TypeVar

from ecve.errors import InvalidConfigError
from ecve.errors import UsageError
from ecve.optimizer import SearchDirection

LOGGER = logging.getLogger(__name__)

THREADS_ENV_VAR = "ECVE_THREADS"

RunConfigType = TypeVar("RunConfigType")


def load_config_file(config_path: Path | None) -> dict[str, Any]:
    if config_path is None:
        return {}
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"config file '{config_path}' doesn't exist on disk.")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise InvalidConfigError(
            f"config file '{config_path}' is not valid JSON: {error}"
        )
    if not isinstance(data, dict):
        raise InvalidConfigError(f"config file '{config_path}' must hold a JSON object")
    return data


def resolve_run_config(
    defaults: RunConfigType,
    command: str,
    file_config: dict[str, Any],
    cli_values: dict[str, Any],
) -> RunConfigType:
    """
    Merge the layers on top of a dataclass instance holding the defaults.

    Args:
        defaults: dataclass instance
        command: name of the section of the config file to use
        file_config: parsed config file
        cli_values: parsed arguments, None meaning "not given on the command line"

    Returns:
        new dataclass instance of the same type as ``defaults``
    """
    field_names = {field.name for field in dataclasses.fields(defaults)}
    merged: dict[str, Any] = {}
    for layer in (file_config.get("common", {}), file_config.get(command, {})):
        unknown = set(layer) - field_names
        if unknown and layer is not file_config.get("common"):
            raise InvalidConfigError(
                f"unknown keys {sorted(unknown)} in config section '{command}'"
            )
        merged.update(
            {key: value for key, value in layer.items() if key in field_names}
        )
    merged.update(
        {
            key: value
            for key, value in cli_values.items()
            if key in field_names and value is not None
        }
    )
    LOGGER.debug(f"{command} config overrides: {merged}")
    return dataclasses.replace(defaults, **merged)


def resolve_threads(cli_threads: int | None, file_threads: int | None) -> int:
    """
    Thread count: --threads > ECVE_THREADS > config file > 1.
    """
    if cli_threads is not None:
        threads = cli_threads
    elif os.getenv(THREADS_ENV_VAR):
        try:
            threads = int(os.environ[THREADS_ENV_VAR])
        except ValueError:
            raise UsageError(
                f"{THREADS_ENV_VAR} must be an integer, got '{os.environ[THREADS_ENV_VAR]}'"
            ) from None
    elif file_threads is not None:
        threads = file_threads
    else:
        threads = 1
    if threads < 1:
        raise UsageError(f"thread count must be >= 1, got {threads}")
    return threads


def add_common_arguments(parser, with_threads: bool = True):
    """
    Flags shared by every command: --seed, --config, --verbose and optionally --threads.
    """
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="master seed, split deterministically between the random subsystems.",
    )
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="filesystem path to a JSON config file, overridden by command line flags.",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="log debug messages.",
    )
    if with_threads:
        parser.add_argument(
            "--threads",
            type=int,
            default=None,
            help=(
                "maximum number of worker threads. "
                f'if not provided the value is retrieved from an "{THREADS_ENV_VAR}" '
                "environment variable, then from the config file, else 1."
            ),
        )


def add_optimizer_arguments(parser):
    parser.add_argument(
        "--attempts",
        type=int,
        default=None,
        help="number of random restarts of the optimizer.",
    )
    parser.add_argument(
        "--max-iter",
        type=int,
        default=None,
        help="maximum number of descent steps per restart.",
    )
    parser.add_argument(
        "--tol-rel",
        type=float,
        default=None,
        help="relative objective decrease under which a restart stops.",
    )
    parser.add_argument(
        "--weighted-direction",
        type=str,
        choices=[direction.value for direction in SearchDirection],
        default=None,
        help=(
            "gradient descended by weighted methods: the uniform scheme gradient "
            "(default) or the exact gradient of the weighted objective."
        ),
    )
