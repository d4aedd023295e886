"""Exception hierarchy shared by all kronfix modules."""


class KronfixError(Exception):
    """Base class for every error raised by this package."""


class ParseError(KronfixError, ValueError):
    pass


class NegativeParameter(KronfixError, ValueError):
    pass


class OutOfDomain(KronfixError, ValueError):
    pass


class InvalidInstance(KronfixError, ValueError):
    """Raised by instance constructors on bad data (negative rates, non-orthogonal Q, ...)."""


class IndependenceViolated(KronfixError, ValueError):
    """{1, alpha_1, ..., alpha_n} admits a nontrivial integer relation."""


class UsualIndependenceViolated(KronfixError, ValueError):
    pass


class QIndependenceViolated(IndependenceViolated):
    pass


class P0NotNonnegative(KronfixError, ValueError):
    pass


class SolveFailed(KronfixError, ArithmeticError):
    pass


class BadWeights(KronfixError, ValueError):
    pass


class NormNotStrictlyConvex(KronfixError, ValueError):
    pass


class NoCommonFixedPointWitness(KronfixError, ValueError):
    pass


class SearchBudgetExceeded(KronfixError, RuntimeError):
    """The Kronecker search hit its candidate cap.

    ``partial`` holds the indices found before the cap was reached.
    """

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = tuple(partial)


class BudgetExceeded(KronfixError, RuntimeError):
    pass


class WordBudgetExceeded(BudgetExceeded):
    pass


class SNotInUnitInterval(KronfixError, ValueError):
    pass


class NoConvergence(KronfixError, RuntimeError):
    pass


class BadSchedule(KronfixError, ValueError):
    pass


class DomainNotCompact(KronfixError, ValueError):
    pass


class ConfigError(KronfixError, ValueError):
    pass
