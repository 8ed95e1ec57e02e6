"""Exception types shared across the package.

The CLI maps ValidationError to exit code 1 and CsvFormatError / OSError
to exit code 2; library code raises these directly.
"""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class CsvFormatError(RuntimeError):
    """A CSV file could not be parsed; carries the offending location."""

    def __init__(self, message, path=None, row=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)
        self.path = path
        self.row = row
        self.column = column
