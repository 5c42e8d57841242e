"""
CSV and JSON input/output of the command line tools.

Everything written goes through `atomic_write_text` so an interrupted run never
leaves a partial file behind.
"""
import io
import logging
import os
import tempfile
from pathlib import Path

import numpy
import pandas

from ecve.errors import CsvParseError
from ecve.errors import UsageError

LOGGER = logging.getLogger(__name__)


def atomic_write_text(target_path: Path, text: str) -> Path:
    """
    Write text to a temporary file next to the target then rename it over the target.

    Args:
        target_path: filesystem path to a file that may or may not exist.
            Its parent directory must exist.
        text: content to write

    Returns:
        target_path
    """
    target_path = Path(target_path)
    if not target_path.parent.exists():
        raise FileNotFoundError(
            f"Parent directory of target path doesn't exists on disk: {target_path}"
        )
    descriptor, temp_path = tempfile.mkstemp(
        prefix=f".{target_path.name}.", suffix=".tmp", dir=target_path.parent
    )
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as temp_file:
            temp_file.write(text)
        os.replace(temp_path, target_path)
    except BaseException:
        Path(temp_path).unlink(missing_ok=True)
        raise
    LOGGER.debug(f"wrote '{target_path}'")
    return target_path


def read_numeric_csv(
    csv_path: Path,
    drop: list[str] | None = None,
) -> pandas.DataFrame:
    """
    Read a comma-separated file with a header row where every retained cell is numeric.

    Args:
        csv_path: filesystem path to an existing csv file
        drop: column names to discard before validation

    Returns:
        DataFrame of float64 columns, in file order
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(f"CSV file '{csv_path}' doesn't exist on disk.")

    frame = pandas.read_csv(csv_path, dtype=str, keep_default_na=False)
    drop = drop or []
    missing = [name for name in drop if name not in frame.columns]
    if missing:
        raise UsageError(f"cannot drop unknown columns {missing} of '{csv_path}'")
    frame = frame.drop(columns=drop)

    numeric = {}
    for column in frame.columns:
        raw = frame[column].str.strip()
        parsed = pandas.to_numeric(raw, errors="coerce")
        invalid = numpy.flatnonzero(parsed.isna().to_numpy())
        if invalid.size:
            row = int(invalid[0])
            raise CsvParseError(csv_path, row + 1, column, frame[column].iloc[row])
        numeric[column] = parsed.astype(numpy.float64)

    return pandas.DataFrame(numeric, index=frame.index)


def frame_to_csv_text(frame: pandas.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_rows_csv(
    target_path: Path,
    header: tuple[str, ...],
    rows: list[tuple],
) -> Path:
    frame = pandas.DataFrame(list(rows), columns=list(header))
    return atomic_write_text(target_path, frame_to_csv_text(frame))
