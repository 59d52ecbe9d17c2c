"""Exception hierarchy for thermomorph.

All library errors derive from :class:`ThermomorphError` so callers can
catch the whole family with one clause.  Parse-type errors carry enough
position information to point at the offending input.
"""


class ThermomorphError(Exception):
    """Base class for all thermomorph errors."""


class DimensionMismatch(ThermomorphError):
    """Two grids/masks that must share shape (and ROI) do not."""


class MarkerAboveMask(ThermomorphError):
    """A reconstruction marker exceeds its mask beyond the allowed slack."""


class NonPositiveContrast(ThermomorphError):
    """A contrast offset (h) that must be positive is zero or negative."""


class NegativeResidual(ThermomorphError):
    """A residual came out below the numeric tolerance for zero."""


class EmptyROI(ThermomorphError):
    """An operation needs in-ROI pixels but the ROI selects none."""


class InsufficientDistinctValues(ThermomorphError):
    """k-means was asked for more clusters than there are distinct values."""


class UnsupportedK(ThermomorphError):
    """A class count outside the supported set was requested."""


class BlobOutOfBounds(ThermomorphError):
    """A synthetic blob center lies outside the scene frame."""


class NonFiniteValue(ThermomorphError):
    """A NaN or infinity appeared where only finite values are allowed."""


class ParseError(ThermomorphError):
    """A file could not be parsed; carries 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class RaggedRows(ParseError):
    """Rows of a CSV grid do not all have the same number of columns."""


class UnsupportedDepth(ThermomorphError):
    """An image file uses a sample depth the reader does not accept."""


class DegenerateRange(ThermomorphError):
    """An explicit render range has min >= max."""


class ConfigError(ThermomorphError):
    """A run configuration file is malformed or contains unknown keys."""
