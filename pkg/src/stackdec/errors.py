"""Exception hierarchy shared across the package."""
from __future__ import annotations


class StackdecError(Exception):
    """Base class for every error raised by this package."""


class CvssError(StackdecError, ValueError):
    """A CVSS vector string could not be parsed."""

    def __init__(self, token: str, message: str | None = None):
        self.token = token
        super().__init__(message or f"{type(self).__name__}({token!r})")


class UnknownMetric(CvssError):
    pass


class UnknownValue(CvssError):
    pass


class DuplicateMetric(CvssError):
    pass


class MissingMetric(CvssError):
    pass


class IncompleteWeightTable(StackdecError, ValueError):
    pass


class ScenarioError(StackdecError):
    pass


class ParseError(ScenarioError):
    pass


class ValidationError(ScenarioError, ValueError):
    pass


class IoError(ScenarioError, OSError):
    pass


class EmptyLayer(ScenarioError, ValueError):
    pass


class DomainError(StackdecError, ValueError):
    pass


class MissingData(StackdecError, ValueError):
    pass


class SolverError(StackdecError, RuntimeError):
    pass


class NoFeasibleAction(SolverError):
    pass


class GridTooLarge(StackdecError, ValueError):
    pass


class TooFewActions(StackdecError, ValueError):
    pass


class NvdError(StackdecError):
    pass


class NotFound(NvdError):
    pass


class RateLimited(NvdError):
    def __init__(self, message: str, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(message)


class NetworkError(NvdError):
    pass


class CacheMiss(NvdError):
    pass


class MissingVersion(NvdError, ValueError):
    pass
