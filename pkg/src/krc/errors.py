"""Exception hierarchy.

Input errors (bad shapes, non-normalized vectors, unknown names) derive from
:class:`InputError`; failures of a mathematical certificate derive from
:class:`MathError`.  The CLI maps the first family to exit code 2 and the
second to exit code 1.
"""


class KRCError(Exception):
    """Base class for every error raised by the package."""


class InputError(KRCError, ValueError):
    pass


class MathError(KRCError, ArithmeticError):
    pass


class NegativeMass(InputError):
    pass


class NotNormalized(InputError):
    pass


class SpaceMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class InvalidCost(InputError):
    pass


class WeightMismatch(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class NotStochastic(InputError):
    pass


class UnknownMeasure(InputError, LookupError):
    """A named object is missing from the problem file."""


class UntightCost(MathError):
    """The cost does not equal its min-plus path closure."""


class DualityGapExceeded(MathError):
    pass


class NumericalFailure(MathError):
    pass
