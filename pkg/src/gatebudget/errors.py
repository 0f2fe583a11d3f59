"""Exception hierarchy shared across the package."""


class GateBudgetError(Exception):
    """Base class for all errors raised by gatebudget."""


class InvalidDimensionError(GateBudgetError, ValueError):
    pass


class InvalidArgumentError(GateBudgetError, ValueError):
    pass


class TruncationError(GateBudgetError):
    """A truncated distribution or Fock space leaks more probability than allowed."""


class NumericalError(GateBudgetError):
    """Base for failures of a numerical propagation."""


class IntegratorDivergedError(NumericalError):
    pass


class StepSizeError(NumericalError):
    """Doubling the step count changed the result by more than the tolerance."""


class PositivityError(NumericalError):
    pass


class ConfigError(GateBudgetError, ValueError):
    pass
