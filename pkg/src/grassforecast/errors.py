"""Exception hierarchy shared by every module."""


class ForecastError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ForecastError, ValueError):
    """Invalid model, grid or command configuration."""


class SeriesTooShort(ForecastError, ValueError):
    pass


class DegenerateRange(ForecastError, ValueError):
    pass


class ParseError(ForecastError, ValueError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class NonMonotonicTimestamps(ForecastError, ValueError):
    pass


class LengthMismatch(ForecastError, ValueError):
    pass


class EmptyInput(ForecastError, ValueError):
    pass


class DimensionMismatch(ForecastError, ValueError):
    pass


class HeadMismatch(ForecastError, ValueError):
    pass


class InsufficientHistory(ForecastError, ValueError):
    pass


class NumericalFailure(ForecastError, RuntimeError):
    """Base for failures that map to exit code 3 on the command line."""


class NonConvergence(NumericalFailure):
    pass


class DivergenceDetected(NumericalFailure):
    pass


class AllRunsFailed(NumericalFailure):
    pass
