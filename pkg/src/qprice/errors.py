"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument violates the mathematical domain of an operation."""


class BoundaryLeakageError(RuntimeError):
    """Probability reached the hard-wall edges of the log-price grid."""


class CalibrationError(RuntimeError):
    """Calibration could not produce an acceptable model.

    ``best`` carries the best candidate found before giving up (may be None).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateDataError(CalibrationError):
    """Input bars carry no price variation to calibrate against."""


class BarParseError(ValueError):
    """A bar file row could not be parsed or violates OHLC invariants."""

    def __init__(self, row, field, message):
        super().__init__(f"row {row}, field {field!r}: {message}")
        self.row = row
        self.field = field
