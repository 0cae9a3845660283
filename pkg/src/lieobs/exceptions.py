"""Exception hierarchy shared by every lieobs module."""

import numpy as np


class LieObsError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(LieObsError, ValueError):
    pass


class NonConvergence(LieObsError, ArithmeticError):
    pass


class DomainViolation(LieObsError, ValueError):
    pass


class Singular(LieObsError, np.linalg.LinAlgError):
    pass


class BranchCutViolation(DomainViolation):
    """An argument of the principal logarithm has an eigenvalue on (-inf, 0].

    ``indices`` lists the offending positions when the input was a stack of
    matrices (empty tuple for a single matrix); ``eigenvalues`` holds the
    spectrum of the first offender.
    """

    def __init__(self, message, indices=(), eigenvalues=None):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)
        self.eigenvalues = eigenvalues


class NearBranchCut(BranchCutViolation):
    pass


class InsufficientData(LieObsError, ValueError):
    pass


class GainsInvalid(LieObsError, ValueError):
    pass


class StepFailure(LieObsError, RuntimeError):
    """Integration could not proceed past ``time``.

    ``cause`` is the underlying error and ``trajectory`` (if set) is the
    partial record up to the failure.
    """

    def __init__(self, message, time, cause=None, trajectory=None):
        super().__init__(message)
        self.time = float(time)
        self.cause = cause
        self.trajectory = trajectory


class ScenarioInvalid(LieObsError, ValueError):
    pass


class ParseError(ScenarioInvalid):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class MissingData(LieObsError, FileNotFoundError):
    pass
