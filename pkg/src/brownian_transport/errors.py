"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """Inputs violate an operation's contract."""


class NumericToleranceError(ArithmeticError):
    """A quadrature or root-finding routine could not reach its tolerance."""


class ConsistencyError(RuntimeError):
    """An internal invariant broke mid-iteration."""


class NonTerminationError(RuntimeError):
    """An iteration exhausted its step budget before converging."""
