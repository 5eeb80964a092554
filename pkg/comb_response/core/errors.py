"""Exception hierarchy shared by the simulator modules and the CLI."""

from __future__ import annotations

from typing import Any


class CombResponseError(Exception):
    """Base class for every error raised by comb_response."""


class InvalidParameterError(CombResponseError, ValueError):
    def __init__(self, message: str, *, parameter: str | None = None):
        super().__init__(message)
        self.parameter = parameter


class DegenerateDenominatorError(InvalidParameterError):
    pass


class MissingToothError(InvalidParameterError):
    pass


class SolverFailure(CombResponseError, RuntimeError):
    def __init__(self, message: str, *, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class IntegrationError(CombResponseError, RuntimeError):
    pass


class ScanAbortedError(CombResponseError, RuntimeError):
    def __init__(self, message: str, *, failures: tuple[Any, ...] = ()):
        super().__init__(message)
        self.failures = tuple(failures)


class ConfigError(CombResponseError, ValueError):
    def __init__(self, message: str, *, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
