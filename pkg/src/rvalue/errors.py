"""Exception hierarchy shared by all modules."""


class RValueError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(RValueError, ValueError):
    """A configuration value is out of range.

    ``field`` names the offending setting so front ends can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SignalError(RValueError, ValueError):
    """Input samples violate an operation's preconditions."""


class DegenerateSignalError(SignalError):
    """Envelope has zero mean, so R is undefined."""


class CalibrationError(RValueError):
    """Threshold calibration could not produce valid intervals."""


class MethodMismatchError(RValueError, ValueError):
    """An R value was computed by a different pipeline than the profile."""


class FormatError(RValueError):
    """A dataset, profile, or report file could not be parsed."""
