"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class XCouplerError(Exception):
    """Base class for data and model errors raised by the toolkit."""


class SynthesisError(XCouplerError, ValueError):
    pass


class ReconfigurationError(XCouplerError):
    """Raised when a matrix cannot be brought onto a topology mask.

    ``residual`` holds the best achieved residual (None when the mask was
    rejected before any attempt).
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularNetworkError(XCouplerError):
    """The network matrix is singular at ``freq`` (Hz, or normalized when no plan)."""

    def __init__(self, message: str, freq: float):
        super().__init__(message)
        self.freq = freq


class ExtractionError(XCouplerError, ValueError):
    pass


class FormatError(XCouplerError, ValueError):
    """Malformed input document. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
