"""grnlab: numerical laboratory for a two-state hybrid transport model.

The package solves the coupled transport/switching PDE system on [0, 1] by
operator splitting with exact sub-flows, simulates the equivalent piecewise
deterministic Markov process, computes the stationary density and the rank-1
projection onto it, and measures operator-norm convergence to equilibrium
together with the positivity/kernel diagnostics that convergence rests on.
"""

from . import analysis, coupling, equilibrium, evolve, grid, model, pdmp, transport
from ._accel import NUMBA_ENABLED
from .errors import (
    BadMode,
    ConfigError,
    DomainError,
    EmptyEnsemble,
    GrnlabError,
    InversionFailure,
    NegativeTime,
    NonMonotoneMap,
    NonpositiveLambda,
    NonpositiveRateBound,
    ParameterError,
    QuadratureFailure,
    RateError,
    SizeMismatch,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "__version__",
    "analysis",
    "coupling",
    "equilibrium",
    "evolve",
    "grid",
    "model",
    "pdmp",
    "transport",
    "GrnlabError",
    "ParameterError",
    "RateError",
    "DomainError",
    "SizeMismatch",
    "NonMonotoneMap",
    "NegativeTime",
    "NonpositiveLambda",
    "BadMode",
    "EmptyEnsemble",
    "NonpositiveRateBound",
    "QuadratureFailure",
    "InversionFailure",
    "ConfigError",
]
