"""Exception types shared across the package."""


class CtahError(Exception):
    """Base class for all errors raised by ctahedge."""


class ConfigurationError(CtahError, ValueError):
    """Invalid construction parameters (depth out of range, bad prior table, ...)."""


class UsageError(CtahError, ValueError):
    """A call violated an argument precondition."""


class EmptyDataError(CtahError, ValueError):
    """A statistic was requested before any round was recorded."""


class NumericalConsistencyError(CtahError, ArithmeticError):
    """A quantity that must be nonnegative came out clearly negative."""
