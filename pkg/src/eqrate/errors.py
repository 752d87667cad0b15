"""Exception hierarchy for eqrate."""


class EqRateError(Exception):
    """Base class for all errors raised by this package."""


class GameFormatError(EqRateError, ValueError):
    """A game document or payoff tensor could not be accepted."""


class GameParseError(GameFormatError):
    pass


class ShapeMismatchError(GameFormatError):
    pass


class NonFinitePayoffError(GameFormatError):
    pass


class SolverError(EqRateError):
    """An underlying linear program failed to solve."""


class InfeasibleEpsilonError(EqRateError):
    """The requested approximation parameter lies below the minimum feasible one."""

    def __init__(self, message, epsilon=None, epsilon_min=None):
        super().__init__(message)
        self.epsilon = epsilon
        self.epsilon_min = epsilon_min


class ConvergenceError(EqRateError):
    """An iterative solver did not reach its tolerances."""


class IngestError(EqRateError, ValueError):
    """Match records could not be turned into a game."""


class MissingPairError(IngestError):
    def __init__(self, pairs):
        self.pairs = list(pairs)
        listed = ", ".join(f"{a}-{b}" for a, b in self.pairs)
        super().__init__(f"no records for {len(self.pairs)} pair(s): {listed}")


class MalformedRecordError(IngestError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
