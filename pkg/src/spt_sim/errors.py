"""Exception hierarchy.

The CLI maps :class:`ValidationError` (and subclasses) to exit status 1 and
:class:`NumericError` to exit status 2.
"""


class SptError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SptError, ValueError):
    """Invalid input: bad parameters, wrong shapes, non-Hermitian matrices."""


class CapacityError(ValidationError):
    """Requested operator would exceed the configured dimension limit."""


class UnsupportedShapeError(ValidationError):
    pass


class PreconditionError(ValidationError):
    """Operation is undefined at this parameter point (e.g. unstable phase)."""


class RangeError(ValidationError):
    """Parameter outside the range where a truncated representation is trustworthy."""


class NumericError(SptError, ArithmeticError):
    """Numerical failure: non-convergence, norm drift, negative variance."""


class FitError(NumericError):
    """Too few usable points for a fit."""
