"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class MarketError(Exception):
    exit_code = 1


class InvalidSpec(MarketError, ValueError):
    """A distribution spec string does not parse."""

    exit_code = 2


class InvalidParameter(MarketError, ValueError):
    exit_code = 2


class UndefinedHazard(MarketError, ArithmeticError):
    """Hazard requested where the survival function is zero."""

    exit_code = 3


class UndefinedVirtualValue(MarketError, ArithmeticError):
    exit_code = 3


class NumericFailure(MarketError, ArithmeticError):
    """Quadrature, root finding, or a cross-route consistency check failed."""

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class VerificationFailure(MarketError):
    exit_code = 4
