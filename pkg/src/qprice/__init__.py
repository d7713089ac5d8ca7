"""Random Hermitian price operators, unitary price dynamics and spread calibration."""

__version__ = "0.1.0"

from .errors import (BarParseError, BoundaryLeakageError, CalibrationError,  # noqa: E402
                     DegenerateDataError, DomainError)

__all__ = [
    "__version__",
    "BarParseError",
    "BoundaryLeakageError",
    "CalibrationError",
    "DegenerateDataError",
    "DomainError",
]
