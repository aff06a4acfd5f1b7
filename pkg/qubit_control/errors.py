"""
Error Types
Exceptions raised by the qubit control toolkit
"""


class QubitControlError(Exception):
    """Base class for toolkit errors"""


class InvalidStateError(QubitControlError, ValueError):
    """A density matrix, Bloch vector or control violates its invariants"""


class ConfigError(QubitControlError, ValueError):
    """A run configuration is malformed or incomplete"""


class UnreachableTargetError(QubitControlError):
    """The intermediate target cannot be reached by constant incoherent control"""


class AccuracyUnreachableError(QubitControlError):
    """No duration or grid node reaches the requested accuracy"""


class NonFiniteGradientError(QubitControlError, FloatingPointError):
    """An optimizer received a NaN or infinite gradient"""


class VerificationFailedError(QubitControlError):
    """One or more verification checks did not pass"""
