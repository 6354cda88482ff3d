"""Exception types shared across the package."""


class BlkSurvError(Exception):
    """Base class for all package errors."""


class DomainError(BlkSurvError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConsistencyError(BlkSurvError, ValueError):
    """A belief revision disagrees with the prior it claims to revise."""


class PoolingValidityError(BlkSurvError, ArithmeticError):
    """The pooled precision is not positive semidefinite on the prior's range.

    Raised instead of silently clipping: a pooled update only exists when at
    least one information source reduces variance and none increases it.
    """


class AccuracyError(BlkSurvError, ArithmeticError):
    """A numerical routine failed its own refinement/self-consistency check."""


class InputError(BlkSurvError, ValueError):
    """Malformed user input (files, configuration, CLI arguments)."""
