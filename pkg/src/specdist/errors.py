"""Exception types shared across the package.

Every error raised on a bad input or a degenerate computation derives from
SpecdistError so callers (and the CLI exit-code mapping) can catch one base.
"""


class SpecdistError(Exception):
    """Base class for all package-specific errors."""


class InvalidWindowError(SpecdistError):
    """Window width or stride outside the valid range."""


class OutOfRangeError(SpecdistError):
    """Requested window does not fit inside the series."""


class DegenerateSpectrumError(SpecdistError):
    """All AC power is zero; no probability distribution can be formed."""


class DimensionError(SpecdistError):
    """Mismatched lengths, frequency grids, or non-square matrices."""


class UndefinedCorrelationError(SpecdistError):
    """Correlation requested for a series with zero variance."""


class DegenerateFitError(SpecdistError):
    """Proportionality fit requested against an all-zero regressor."""


class FormatError(SpecdistError):
    """Malformed input file: bad header, bad schema, or too many bad rows."""


class TransformError(SpecdistError):
    """Requested value transform is undefined for the given data."""


class ConfigurationError(SpecdistError):
    """Invalid simulation or analysis configuration."""


class AnalysisError(SpecdistError):
    """Analysis cannot proceed (too few channels, too little data)."""


class AlignmentError(SpecdistError):
    """Two metric series do not share a common window grid."""
