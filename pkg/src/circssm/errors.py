"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems are usage errors
(exit 1), malformed input series are data errors (exit 2), and linear-algebra
breakdowns are numerical errors (exit 3).
"""


class ConfigError(ValueError):
    """Bad run configuration: unknown key, unparseable value, missing file."""


class SeriesFormatError(ValueError):
    """Base class for malformed input series files."""


class EmptySeriesError(SeriesFormatError):
    """The input file has no data rows."""


class MissingColumnError(SeriesFormatError):
    """The declared value column is absent from the header."""


class CellParseError(SeriesFormatError):
    """A cell could not be parsed; carries the 1-based data row number."""

    def __init__(self, row, message):
        super().__init__(message)
        self.row = row


class UnitDomainError(SeriesFormatError):
    """A value lies outside the domain of its declared unit."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NumericalSingularityError(RuntimeError):
    """A kernel matrix stayed non-positive-definite after jitter escalation."""
