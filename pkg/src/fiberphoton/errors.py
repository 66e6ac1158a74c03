"""Exception types shared across the package."""


class FiberPhotonError(Exception):
    """Base class for all package errors."""


class InvalidParameter(FiberPhotonError, ValueError):
    """A physical parameter violates its invariant (negative rate, probability
    outside [0, 1], refractive index <= 1, ...)."""


class DegenerateInput(FiberPhotonError, ValueError):
    """Input is mathematically valid but makes the requested quantity
    undefined (rho = 0 inversion, g2_int <= g2_0, both rates zero, ...)."""


class UnsortedInput(FiberPhotonError, ValueError):
    """Timestamp data is not sorted ascending."""


class InsufficientPeaks(FiberPhotonError, ValueError):
    """The histogram window does not contain enough pulse side peaks."""


class MalformedFile(FiberPhotonError, ValueError):
    """A CSV/JSON input file does not match the expected schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
