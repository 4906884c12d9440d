"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""
from __future__ import annotations


class SsepError(Exception):
    exit_code = 3


class InvalidProfile(SsepError, ValueError):
    exit_code = 2


class InvalidTime(SsepError, ValueError):
    exit_code = 2


class InvalidInput(SsepError, ValueError):
    exit_code = 2


class WindowTooSmall(SsepError, ValueError):
    exit_code = 2


class InsufficientObservables(SsepError, ValueError):
    exit_code = 2


class ConfigError(SsepError, ValueError):
    exit_code = 2


class QuadratureFailure(SsepError, ArithmeticError):
    """Tolerance not reached; the best estimate and its bound ride along."""

    def __init__(self, message: str, estimate: float = float("nan"), bound: float = float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound


class SystemTooLarge(SsepError, MemoryError):
    pass


class BoundaryMassTooLarge(SsepError, ArithmeticError):
    pass


class ResourceCapExceeded(SsepError, RuntimeError):
    pass
