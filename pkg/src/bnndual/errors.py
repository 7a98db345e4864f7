"""Exception types raised across the package."""


class BnnDualError(Exception):
    """Base class for all package errors."""


class ParseError(BnnDualError, ValueError):
    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class UnboundedDomain(BnnDualError, ValueError):
    """A variable bound is infinite where a finite cap is required."""


class NotRelaxed(BnnDualError, ValueError):
    """An LP routine received a model that still has integer columns."""


class ShapeMismatch(BnnDualError, ValueError):
    pass


class BadEpsilon(BnnDualError, ValueError):
    pass


class StatusNotOptimal(BnnDualError, ValueError):
    pass


class ZeroDirection(BnnDualError, ValueError):
    pass


class MultiRow(BnnDualError, ValueError):
    """Scalar-rhs dual machinery was handed a model with several rows."""


class NotCertified(BnnDualError, ValueError):
    pass


class WeakDualityViolation(BnnDualError, ArithmeticError):
    """A certified dual function exceeded the primal optimum."""

    def __init__(self, gap):
        self.gap = gap
        super().__init__(f"negative duality gap {gap}")
