"""Exception types raised across the package."""


class HFError(Exception):
    """Base class for all package errors."""


class InputError(HFError, ValueError):
    """Malformed or invalid input data (non-finite samples, bad files, ...)."""


class ParameterError(HFError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(HFError, ValueError):
    """A level-set query has no solution (e.g. energy level below the spectrum)."""


class ConvergenceError(HFError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    The best iterate and its duality gap are attached so callers can decide
    whether the approximate answer is still usable.
    """

    def __init__(self, message, best=None, gap=float("nan")):
        super().__init__(message)
        self.best = best
        self.gap = gap
