"""Exception hierarchy shared across the package.

Two broad families matter to callers: data-format problems (bad input
files) and numerical failures (degenerate inputs to estimators and
solvers).  The CLI maps them to distinct exit codes.
"""


class CellTrafficError(Exception):
    """Base class for all package errors."""


class DataFormatError(CellTrafficError):
    """Malformed or inconsistent input data."""


class FormatError(DataFormatError):
    """Malformed row or header; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownCell(DataFormatError):
    """Traffic record references a cell_id absent from the cells file."""


class NegativeVolume(DataFormatError):
    """Traffic record with a negative byte count."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(CellTrafficError):
    """Degenerate input to an estimator or solver."""


class DegenerateSample(NumericalError):
    """Sample has zero quantile spread (e.g. all values equal)."""


class IllConditioned(NumericalError):
    """Empirical characteristic function unusable on the given grid."""


class SingularSystem(NumericalError):
    """Linear system is numerically singular."""


class DimensionMismatch(NumericalError):
    """Operands have incompatible shapes."""


class DegenerateGeometry(NumericalError):
    """Cell layout does not admit a proper planar partition."""
