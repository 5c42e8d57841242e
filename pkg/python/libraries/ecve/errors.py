"""
Exceptions raised by the library.

Every class derives from the builtin exception the failure would naturally map to,
so callers are free to catch either.
"""


class EcveError(Exception):
    pass


class InvalidDimensionError(EcveError, ValueError):
    """
    A dimension argument (p, q, k, shapes) is out of its valid range.
    """


class DegenerateBasisError(EcveError, ValueError):
    """
    A matrix expected to have full column rank is rank-deficient.
    """


class EmptyComplementError(EcveError, ValueError):
    pass


class ContractViolationError(EcveError, ValueError):
    pass


class DegenerateDataError(EcveError, ValueError):
    """
    The data cannot support the requested computation (constant columns, too few rows, ...).
    """


class InvalidConfigError(EcveError, ValueError):
    pass


class ResponseDomainError(EcveError, ValueError):
    """
    A response transform was applied outside of its domain (ex: Box-Cox on values <= 0).
    """


class UnsupportedKernelError(EcveError, ValueError):
    pass


class UsageError(EcveError, ValueError):
    pass


class CsvParseError(EcveError, ValueError):
    """
    A CSV cell could not be parsed as a number.

    Args:
        path: filesystem path of the offending file
        row: 1-based data row index (header excluded)
        column: header name of the offending column
        value: raw content of the cell
    """

    def __init__(self, path, row: int, column: str, value: str):
        self.path = path
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"'{path}': non-numeric value {value!r} at row {row}, column '{column}'"
        )
