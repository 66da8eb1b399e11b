"""Exception hierarchy.

Every error raised on purpose by the package derives from ``FrontlabError`` so
the CLI can map it to an exit code.
"""


class FrontlabError(Exception):
    exit_code = 3


class DomainError(FrontlabError, ValueError):
    """Argument outside the mathematical domain (e.g. negative density)."""


class RangeError(FrontlabError, ValueError):
    """Evaluation outside a tabulated range."""


class ReactionError(FrontlabError, ValueError):
    """Reaction violates the structural hypotheses (sign pattern, h'(1) < 0)."""


class PreconditionError(FrontlabError, ValueError):
    pass


class ParameterError(FrontlabError, ValueError):
    pass


class NumericError(FrontlabError, ArithmeticError):
    pass


class NonConvergenceError(NumericError):
    pass


class BracketError(NumericError):
    def __init__(self, message, lo_outcome=None, hi_outcome=None):
        super().__init__(message)
        self.lo_outcome = lo_outcome
        self.hi_outcome = hi_outcome


class StabilityError(NumericError):
    pass


class BoundaryCollisionError(NumericError):
    """A free boundary came within a few cells of the domain edge.

    ``snapshots`` and ``trace`` hold the partial results gathered before the
    abort.
    """

    def __init__(self, message, snapshots=None, trace=None):
        super().__init__(message)
        self.snapshots = snapshots
        self.trace = trace


class BarrierError(FrontlabError):
    pass


class ContractError(FrontlabError, ValueError):
    pass


class UsageError(FrontlabError, ValueError):
    exit_code = 2
