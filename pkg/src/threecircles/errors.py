"""Exception types raised by the toolkit."""


class GapNotFoundError(ValueError):
    """No spectral gap of the requested size within the truncation."""


class DynamicRangeError(ArithmeticError):
    """Exponential growth left the double-precision range."""


class HypothesisViolated(ValueError):
    """A check was asked to run where its hypothesis fails."""


class DichotomyViolated(RuntimeError):
    """A fitted growth rate fell in the forbidden middle band."""


class NotSymplecticError(ValueError):
    """Determinant residual too large for an SL(2, R) classification."""


class NodalSliceError(ZeroDivisionError):
    """The slice L^2 norm vanished."""


class ConstraintError(ValueError):
    """A parameter selection violated a named constraint."""
