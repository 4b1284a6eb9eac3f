"""Exception hierarchy shared by every module of the package."""


class FracDenseError(Exception):
    """Base class for all errors raised by fracdense."""


class InputError(FracDenseError, ValueError):
    """Invalid user input (bad parameters, malformed files)."""


class NumericalError(FracDenseError, ArithmeticError):
    """A numerical procedure failed to reach its target accuracy."""


class NonConvergence(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class OverflowRisk(NumericalError):
    pass


class BudgetInfeasible(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class BadExponent(InputError):
    pass


class GeometryError(InputError):
    pass


class TooCloseToBoundary(GeometryError):
    pass


class OrderTooHigh(InputError):
    pass


class BadEta(InputError):
    pass


class SupportError(InputError):
    pass


class IllConditioned(UserWarning):
    """Emitted (as a warning) when a linear system is badly conditioned."""
