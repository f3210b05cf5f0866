"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` (bad parameters,
bad input files) and :class:`SolverError` (numerical breakdown during a
run). The command line maps them to exit codes 2 and 3.
"""


class NHCavityError(Exception):
    pass


class ConfigError(NHCavityError, ValueError):
    pass


class SolverError(NHCavityError, ArithmeticError):
    pass


class DetuningMismatch(ConfigError):
    pass


class BadTruncation(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class TruncationTooSmall(ConfigError):
    pass


class UnknownPreset(ConfigError):
    pass


class MalformedConfig(ConfigError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class ConflictingFlags(ConfigError):
    pass


class IndexOutOfRange(NHCavityError, IndexError):
    pass


class DimensionMismatch(NHCavityError, ValueError):
    pass


class StepUnderflow(SolverError):
    pass


class UndefinedPhase(SolverError):
    pass


class ZeroTrace(SolverError):
    pass


class RegimeWarning(UserWarning):
    """Parameters leave the weak-damping regime the model assumes."""
