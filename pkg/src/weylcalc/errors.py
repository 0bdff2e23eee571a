"""Exception hierarchy shared by every weylcalc module."""


class WeylcalcError(Exception):
    """Base class for all errors raised by weylcalc."""


class DimensionMismatch(WeylcalcError, ValueError):
    pass


class ConvergenceError(WeylcalcError, ArithmeticError):
    """An adaptive procedure did not reach its target within budget."""


class QuadratureError(ConvergenceError):
    """Two quadrature refinement levels disagree."""


class EllipticityError(WeylcalcError, ValueError):
    pass


class NotHermitianError(WeylcalcError, ValueError):
    pass


class PmaxTooSmall(WeylcalcError, ValueError):
    """The supremum defining an associated function sits at the range end."""


class OracleInstability(WeylcalcError):
    """Operator index differs between two truncation sizes."""


class ThresholdAmbiguity(WeylcalcError):
    """A singular value lies too close to the rank threshold."""


class LeftInverseFailure(WeylcalcError, AssertionError):
    """A parametrix composition term that must vanish does not."""

    def __init__(self, k, term):
        super().__init__(f"composition term c_{k} is nonzero: {term}")
        self.k = k
        self.term = term
