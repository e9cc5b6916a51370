"""Exception types raised across the pipeline."""


class GazeIdError(Exception):
    pass


class ParseError(GazeIdError):
    def __init__(self, row, column, message=""):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {message}")


class NonMonotonicTimestamps(GazeIdError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"timestamp does not increase at row {row}")


class InvalidRecording(GazeIdError):
    pass


class AngleOutOfRange(GazeIdError, ValueError):
    pass


class SeriesTooShort(GazeIdError, ValueError):
    pass


class DegenerateSegment(GazeIdError):
    pass


class EmptyTrainingSet(GazeIdError, ValueError):
    pass


class UnknownFeatureName(GazeIdError, KeyError):
    pass


class TooFewPoints(GazeIdError, ValueError):
    pass


class InsufficientEnrollmentData(GazeIdError):
    def __init__(self, subject, have, need, kind=""):
        self.subject = subject
        self.have = have
        self.need = need
        self.kind = kind
        what = f"{kind} segments" if kind else "segments"
        super().__init__(f"subject {subject!r} has {have} {what}, need at least {need}")


class NumericalFailure(GazeIdError, ArithmeticError):
    pass


class EmptyProbe(GazeIdError):
    pass


class InsufficientSubjects(GazeIdError):
    pass


class EmptyScoreList(GazeIdError, ValueError):
    pass


class MissingGroundTruth(GazeIdError):
    pass


class NonSquareMatrix(GazeIdError, ValueError):
    pass


class InvalidSpec(GazeIdError, ValueError):
    pass
