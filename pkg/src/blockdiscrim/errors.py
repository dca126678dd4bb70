"""Exception hierarchy shared by all modules.

The CLI maps these onto its exit codes, so keep the classes coarse.
"""


class BlockDiscrimError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BlockDiscrimError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class UsageError(BlockDiscrimError, ValueError):
    """Inconsistent shapes, lengths or options supplied by the caller."""


class DatasetFormatError(UsageError):
    """A dataset or model file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(BlockDiscrimError, ValueError):
    """Invalid model parameters, e.g. a covariance that is not positive definite."""


class ConvergenceError(BlockDiscrimError, ArithmeticError):
    """Numerical procedure failed to reach its tolerance.

    ``estimates`` carries the last two estimates produced before giving up.
    """

    def __init__(self, message, estimates=(float("nan"), float("nan"))):
        self.estimates = tuple(estimates)
        super().__init__(f"{message} (last estimates: {self.estimates[0]!r}, {self.estimates[1]!r})")


class DegenerateError(BlockDiscrimError, ArithmeticError):
    """A limiting error formula has zero variance (degenerate regime or weights)."""


class ReplicationError(BlockDiscrimError, RuntimeError):
    """Failure inside one Monte Carlo replication; the original error is ``__cause__``."""

    def __init__(self, replication, cause):
        self.replication = replication
        super().__init__(f"replication {replication}: {type(cause).__name__}: {cause}")
