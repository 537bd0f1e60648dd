"""Monte Carlo construction and verification of Burkholder-type Brownian processes."""

from .errors import (
    BurkholderError,
    ConfigurationError,
    DomainError,
    UnsupportedParameterError,
    UsageError,
)
from .functionals import AugmentedPath, augment
from .paths import BrownianPath, SimConfig, TimeGrid, generate_brownian, generate_paths
from .processes import PathDecomposition, PhiPair, ProcessSpec, build_J, decompose
from .stats import StatSummary
from .verification import StoppingRule

__all__ = [
    "AugmentedPath",
    "BrownianPath",
    "BurkholderError",
    "ConfigurationError",
    "DomainError",
    "PathDecomposition",
    "PhiPair",
    "ProcessSpec",
    "SimConfig",
    "StatSummary",
    "StoppingRule",
    "TimeGrid",
    "UnsupportedParameterError",
    "UsageError",
    "augment",
    "build_J",
    "decompose",
    "generate_brownian",
    "generate_paths",
]

__version__ = "0.1.0"
