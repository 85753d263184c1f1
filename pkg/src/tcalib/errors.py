"""Exception types shared across the package.

The CLI maps these to distinct exit codes, so library code should raise the
most specific type that applies.
"""


class TcalibError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(TcalibError, ValueError):
    """Input array has the wrong shape (ragged, wrong ndim, too short)."""


class DegenerateRowError(TcalibError, ValueError):
    """A row has zero variance, so its t statistic is undefined."""


class TailRangeError(TcalibError, ValueError):
    """Requested probability lies outside the float64-representable tail."""


class ResamplingError(TcalibError, RuntimeError):
    """Resampling repeatedly produced degenerate draws (should not happen
    for rows with at least two distinct values)."""


class ConfigError(TcalibError, ValueError):
    """Inconsistent or out-of-range configuration."""


class ParseError(TcalibError, ValueError):
    """Malformed input file; message carries row/column position."""
