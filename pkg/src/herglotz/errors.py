"""Exception hierarchy shared by every module of the package."""


class HerglotzError(Exception):
    """Base class for all library errors."""


class PreconditionError(HerglotzError):
    """A numeric precondition of an operation does not hold."""


class InsufficientMargin(PreconditionError):
    pass


class LadderTooShort(PreconditionError):
    pass


class GridMismatch(PreconditionError):
    pass


class AxisOutOfRange(PreconditionError):
    pass


class StepNotDividing(PreconditionError):
    pass


class TooFewSamples(PreconditionError):
    pass


class InvalidRegime(PreconditionError):
    pass


class NoFreeBoundary(PreconditionError):
    pass


class NotZFree(PreconditionError):
    pass


class EvaluationError(HerglotzError):
    """Evaluating a Lagrangian along a trajectory failed."""


class ExprError(HerglotzError):
    pass


class ExprSyntaxError(ExprError):
    """Malformed expression text. ``position`` is 1-based."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(ExprError):
    def __init__(self, name, position=None):
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class UnboundVariable(ExprError):
    def __init__(self, name):
        super().__init__(f"variable {name!r} is not bound")
        self.name = name


class DomainError(ExprError, ArithmeticError):
    pass


class ProblemError(HerglotzError):
    """A problem description is inconsistent (schema or invariant violation)."""


class SolverError(HerglotzError):
    pass


class LineSearchFailure(SolverError):
    pass


class MaxIterationsExceeded(SolverError):
    """Raised when the iteration budget runs out; ``result`` holds the best iterate."""

    def __init__(self, result):
        super().__init__("maximum number of iterations exceeded")
        self.result = result
