"""Equivalent magnetic circuit model of a PM-biased 5-axis combination magnetic bearing."""

from .config import MachineConfig, load_config, reference_config, validate
from .errors import (
    AMBError,
    AmplifierLimitError,
    CalibrationError,
    ConfigError,
    ContactError,
    NumericalError,
)
from .flux import Excitation, FluxState
from .forces import Solution, Wrench, solve, wrench_at
from .geometry import CENTERED, Pose

__all__ = [
    "AMBError",
    "AmplifierLimitError",
    "CENTERED",
    "CalibrationError",
    "ConfigError",
    "ContactError",
    "Excitation",
    "FluxState",
    "MachineConfig",
    "NumericalError",
    "Pose",
    "Solution",
    "Wrench",
    "load_config",
    "reference_config",
    "solve",
    "validate",
    "wrench_at",
]
