"""Fluctuations of the symmetric exclusion process: simulation, Gaussian limits and exact oracles."""
from .errors import (BoundaryMassTooLarge, ConfigError, InsufficientObservables, InvalidInput, InvalidProfile,
                     InvalidTime, QuadratureFailure, ResourceCapExceeded, SsepError, SystemTooLarge, WindowTooSmall)
from .profiles import Profile
from .testfunctions import TestFunction

__version__ = "0.1.0"

__all__ = [
    "BoundaryMassTooLarge", "ConfigError", "InsufficientObservables", "InvalidInput", "InvalidProfile",
    "InvalidTime", "Profile", "QuadratureFailure", "ResourceCapExceeded", "SsepError", "SystemTooLarge",
    "TestFunction", "WindowTooSmall", "__version__",
]
