"""Exception hierarchy.

Each error class carries the process exit code the CLI reports for it.
"""


class TrafficModelError(Exception):
    exit_code = 1


class ScenarioParseError(TrafficModelError):
    exit_code = 2


class ScenarioValidationError(TrafficModelError):
    exit_code = 3

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DegenerateSplitError(TrafficModelError):
    """All vehicles picked the same route, so alpha is not in (0, 1)."""

    exit_code = 4

    def __init__(self, message, m1=None, m2=None):
        super().__init__(message)
        self.m1 = m1
        self.m2 = m2


class CFLViolationError(TrafficModelError):
    exit_code = 5


class NonHyperbolicError(TrafficModelError):
    exit_code = 6


class NonFiniteStateError(TrafficModelError):
    exit_code = 7


class JunctionBlockedError(TrafficModelError):
    exit_code = 8


class ConjugateDomainError(TrafficModelError):
    """Raised when the Legendre-Fenchel objective is unbounded below at p."""


class NonConvexError(TrafficModelError):
    pass
