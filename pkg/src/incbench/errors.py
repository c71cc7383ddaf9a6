"""Exception hierarchy.

Everything raised for bad *domain* input derives from ``IncbenchError`` so the
CLI can map it to exit code 1 without swallowing programming errors.
"""


class IncbenchError(Exception):
    """Base class for domain errors."""


class NotComposite(IncbenchError, ValueError):
    """Raised when an operation needs an odd composite but got a prime."""


class ParameterRangeError(IncbenchError, ValueError):
    pass


class FormatError(IncbenchError, ValueError):
    """Malformed .rbf/.rtf payload or sidecar."""


class BitSourceExhausted(IncbenchError, RuntimeError):
    pass


class CalibrationExhausted(IncbenchError, RuntimeError):
    """The generation loop ran out of recalibration attempts."""
