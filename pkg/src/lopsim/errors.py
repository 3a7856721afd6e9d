"""Exception hierarchy shared by all modules."""


class LopError(Exception):
    """Base class for every error raised by lopsim."""


class DuplicateEdge(LopError):
    pass


class SelfLoop(LopError):
    pass


class IdOutOfRange(LopError):
    pass


class InfeasibleParams(LopError):
    pass


class ParseError(LopError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LabelOutOfAlphabet(LopError):
    pass


class ProblemInfeasible(LopError):
    pass


class EnumerationTooLarge(LopError):
    pass


class SearchSpaceTooLarge(LopError):
    pass


class DeltaTouchesOutsideA(LopError):
    pass


class DegreeExceedsProblem(LopError):
    pass


class MinimalityPrereqFailed(LopError):
    pass
