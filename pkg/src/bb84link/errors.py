"""Exception hierarchy.

Every error carries a short ``category`` string so the CLI can print a
single machine-parsable line (``error: <category>: <message>``).
"""


class Bb84LinkError(Exception):
    category = "error"


class ArgumentError(Bb84LinkError, ValueError):
    category = "argument"


class DomainError(Bb84LinkError, ValueError):
    category = "domain"


class RangeError(Bb84LinkError, ValueError):
    category = "range"


class InfeasibleAttenuationError(Bb84LinkError, ValueError):
    category = "infeasible-attenuation"


class SeedError(Bb84LinkError, ValueError):
    category = "seed"


class NoThresholdError(Bb84LinkError):
    category = "no-threshold"


class InfeasibleCalibrationError(Bb84LinkError):
    category = "infeasible-calibration"


class SyncFailureError(Bb84LinkError):
    category = "sync-failure"

    def __init__(self, message, offset=None, agreement=None):
        super().__init__(message)
        self.offset = offset
        self.agreement = agreement


class UndefinedQberError(Bb84LinkError):
    category = "undefined-qber"


class TimeTagFormatError(Bb84LinkError, ValueError):
    category = "timetag-format"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(Bb84LinkError, ValueError):
    category = "config"


class OutputError(Bb84LinkError, OSError):
    category = "io"
