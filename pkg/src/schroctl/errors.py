"""Exception taxonomy shared by all modules.

InputError subclasses map to CLI exit code 2 (validation),
NumericalError subclasses to exit code 3 (runtime failure).
"""


class InputError(ValueError):
    """Invalid argument, dimension mismatch, or malformed configuration."""


class ResolutionError(InputError):
    """Requested truncation exceeds what the grid can resolve."""


class ResourceError(RuntimeError):
    """A scan or enumeration would exceed its size cap."""


class NumericalError(RuntimeError):
    """Numerical failure: non-finite values, blow-up, unreachable target."""


class StabilizationTimeout(NumericalError):
    """Closed loop hit its time budget before reaching the requested distance."""

    def __init__(self, message, best_distance, elapsed):
        super().__init__(message)
        self.best_distance = best_distance
        self.elapsed = elapsed


class BudgetError(NumericalError):
    """Control amplitude budget unachievable at the minimum feedback gain."""


class CubicBlowupError(NumericalError):
    """H^2 surrogate norm of a cubic trajectory crossed the abort threshold."""

    def __init__(self, message, time, norm):
        super().__init__(message)
        self.time = time
        self.norm = norm
