"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``NumericalError`` -> 3.
"""


class OccucastError(Exception):
    """Base class for every error raised by this package."""


class DataError(OccucastError, ValueError):
    """Input data is malformed, misaligned or insufficient."""


class ParseError(DataError):
    """A session-log or series line could not be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class NumericalError(OccucastError, ArithmeticError):
    """A numerical procedure failed (divergence, non-finite loss, ...)."""


class ConvergenceError(NumericalError):
    """An optimizer hit its iteration cap before converging."""

    def __init__(self, message: str, best_loss: float):
        self.best_loss = best_loss
        super().__init__(f"{message} (best loss so far: {best_loss:.6g})")
