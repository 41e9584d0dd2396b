"""Exception hierarchy shared by every module."""


class LQCCError(Exception):
    """Base class for all errors raised by lqccsim."""


class InvalidInputError(LQCCError, ValueError):
    """Input violates a documented precondition (shape, normalization, range)."""


class NumericalFailure(LQCCError, ArithmeticError):
    """A factorization did not converge."""


class RankDeficiencyError(LQCCError):
    """A state lacks full Schmidt rank where the operation needs it.

    Raised e.g. when the smallest Schmidt coefficient is zero, so no
    concentration filter with nonzero success probability exists.
    """


class AnnihilationError(LQCCError):
    """A Kraus operator maps the state to (numerically) zero."""
