"""Exception hierarchy shared by every module."""


class BufallocError(Exception):
    """Base class for all errors raised by this package."""


class TraceError(BufallocError, ValueError):
    """A trace document is malformed or violates a graph invariant."""


class UnmatchedMessage(TraceError):
    pass


class SelfMessage(TraceError):
    pass


class CausalityCycle(TraceError):
    pass


class DepthUndefined(BufallocError):
    """Depths were requested on a dependency graph that has a cycle."""


class AssignmentShapeMismatch(BufallocError, ValueError):
    pass


class IllegalMove(BufallocError):
    pass


class StateLimitExceeded(BufallocError):
    """Exhaustive search hit its state cap; the verdict is unknown."""

    def __init__(self, limit, explored=None):
        self.limit = limit
        self.explored = explored if explored is not None else limit
        super().__init__(f"state limit of {limit} exceeded; verdict unknown")


class BadArity(BufallocError, ValueError):
    pass


class FormulaError(BufallocError, ValueError):
    pass
