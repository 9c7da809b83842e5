"""Exception types.

Three families map onto CLI exit codes: ``ConfigError`` subclasses (bad
input, exit 1), ``InvariantViolation`` (a checked identity failed, exit 2)
and ``NumericalFailure`` (a solver did not converge, exit 3).
"""


class AdiabaticError(Exception):
    """Base class for all package errors."""


class ConfigError(AdiabaticError, ValueError):
    """Invalid input or configuration."""


class InvariantViolation(AdiabaticError):
    """A mathematical identity that must hold was found broken."""


class NumericalFailure(AdiabaticError, ArithmeticError):
    """A numerical routine failed to converge."""


class NormError(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class NotPowerOfTwo(ConfigError):
    pass


class NonFiniteCost(ConfigError):
    pass


class CeilingExceeded(ConfigError):
    pass


class CeilingWarning(UserWarning):
    """Cost values above the polynomial guard (soft form of ``CeilingExceeded``)."""


class TimeOutOfRange(ConfigError):
    pass


class NonMonotoneSchedule(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class OracleTooLarge(ConfigError):
    pass


class StepTooLarge(ConfigError):
    pass


class ConvergenceFailure(NumericalFailure):
    pass


class EigensolveFailure(NumericalFailure):
    pass


class SignPatternViolation(InvariantViolation):
    pass


class NormDriftExceeded(InvariantViolation):
    pass


class NonConvergent(InvariantViolation):
    pass


class SandwichViolation(InvariantViolation):
    pass
