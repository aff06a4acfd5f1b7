"""
Two-level quantum control toolkit: phase shift gate landscape analysis for
the closed qubit and the two-stage method for the open qubit
"""

from .errors import (
    AccuracyUnreachableError,
    ConfigError,
    InvalidStateError,
    NonFiniteGradientError,
    QubitControlError,
    UnreachableTargetError,
    VerificationFailedError,
)
from .quantum_core import BlochState, DensityMatrix, EigenPair, OpenSystemParams, PiecewiseConstantControl
from .reports import OptimizerReport

__all__ = [
    'AccuracyUnreachableError',
    'BlochState',
    'ConfigError',
    'DensityMatrix',
    'EigenPair',
    'InvalidStateError',
    'NonFiniteGradientError',
    'OpenSystemParams',
    'OptimizerReport',
    'PiecewiseConstantControl',
    'QubitControlError',
    'UnreachableTargetError',
    'VerificationFailedError',
]
