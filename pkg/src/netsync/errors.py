"""Exception hierarchy shared by every module."""


class NetsyncError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(NetsyncError, ValueError):
    """Input violates one or more documented invariants.

    ``problems`` lists every violation found, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DisconnectedGraphError(NetsyncError):
    """The Laplacian's zero eigenvalue is not simple."""


class ConsistencyError(NetsyncError):
    """Two independent computations of the same quantity disagree."""


class NumericalError(NetsyncError):
    """Integration diverged or hit its step limit."""


class NotPeriodicError(NetsyncError):
    """No convergent sequence of section returns was found."""


class InvalidOrbitError(NetsyncError):
    """Monodromy matrix has no multiplier close to 1."""
