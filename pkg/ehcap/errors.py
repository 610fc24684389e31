"""
Exceptions raised by the capacity library
"""


class EhcapError(Exception):
    """Base class for all library errors"""


class EnergyCausalityError(EhcapError, ValueError):
    """A transmission would spend more energy than is available"""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConvergenceError(EhcapError, RuntimeError):
    """An iterative solver hit its iteration cap"""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class QuadratureError(EhcapError, ArithmeticError):
    """Numerical integration produced a non-finite or out-of-range value"""


class BudgetExceededError(EhcapError):
    """An exhaustive enumeration would exceed its size budget"""

    def __init__(self, message, size=None, budget=None):
        super().__init__(message)
        self.size = size
        self.budget = budget


class ConfigError(EhcapError, ValueError):
    """Experiment configuration is missing or malformed"""


class InvariantViolation(EhcapError, AssertionError):
    """A cross-module ordering or conservation property failed"""
