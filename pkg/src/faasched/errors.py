"""Exception types raised across the package."""


class FaaSchedError(Exception):
    """Base class for all package errors."""


class InfeasibleInstance(FaaSchedError):
    """Some family needs more resources than a single machine has."""


class Deadlock(FaaSchedError):
    """Tasks remain queued but no future event can fire."""


class FamilyMismatch(FaaSchedError):
    """A task was assigned to an environment of another family."""


class InvalidParams(FaaSchedError):
    pass


class NotAChain(FaaSchedError):
    pass


class ParseError(FaaSchedError):
    pass


class ValidationError(FaaSchedError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class TooLarge(FaaSchedError):
    pass


class IncompleteGroup(FaaSchedError):
    def __init__(self, key, missing):
        self.key = key
        self.missing = missing
        super().__init__(f"group {key!r} is missing {sorted(map(str, missing))}")
