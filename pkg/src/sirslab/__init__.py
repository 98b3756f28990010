"""Simulation and exact analysis of the SIRS epidemic process on graphs."""

from .dynamics import Configuration, Horizon, Mode, ProcessParams, State, SurvivalRecord
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    InvalidParameterError,
    NumericError,
    SirsLabError,
    SizeError,
)
from .graphs import Graph

__version__ = "0.1.0"

__all__ = [
    "Configuration", "ConfigError", "DomainError", "FitError", "Graph", "Horizon",
    "InvalidParameterError", "Mode", "NumericError", "ProcessParams", "SirsLabError",
    "SizeError", "State", "SurvivalRecord", "__version__",
]
