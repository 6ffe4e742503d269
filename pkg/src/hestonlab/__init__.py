"""Monte Carlo laboratory for leverage-effect cross-covariances in the Heston model."""

from hestonlab.analytics import (
    ClosedFormXCov,
    HestonParams,
    V0Policy,
    ValidationReport,
    a_delta,
    cross_cov_closed_form,
    decay_factor,
    stationary_variance_moments,
    validate_params,
)
from hestonlab.errors import (
    ConfigError,
    DomainError,
    HestonLabError,
    InsufficientSamplesError,
    PreconditionError,
    RangeError,
    ResourceError,
)
from hestonlab.pathsim import PathEnsemble, Scheme, SimConfig, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "ClosedFormXCov",
    "ConfigError",
    "DomainError",
    "HestonLabError",
    "HestonParams",
    "InsufficientSamplesError",
    "PathEnsemble",
    "PreconditionError",
    "RangeError",
    "ResourceError",
    "Scheme",
    "SimConfig",
    "V0Policy",
    "ValidationReport",
    "a_delta",
    "cross_cov_closed_form",
    "decay_factor",
    "simulate_paths",
    "stationary_variance_moments",
    "validate_params",
]
