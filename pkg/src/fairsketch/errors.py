"""Exception types raised by the library."""


class FairSketchError(Exception):
    """Base class for all library errors."""


class CounterOverflowError(FairSketchError, OverflowError):
    """A counter would exceed the 64-bit unsigned range."""


class InfeasibleAllocationError(FairSketchError, ValueError):
    """No valid width (or row) allocation exists for the given budget.

    Attributes:
        step: peel step (0-based) at which the allocation failed, or None if
            the budget was rejected before any step ran.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DatasetError(FairSketchError, ValueError):
    """Malformed or inconsistent dataset input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
