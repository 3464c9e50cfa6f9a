"""Exception hierarchy shared by every module."""


class TwoStageError(Exception):
    """Base class for all package errors."""


class TieError(TwoStageError, ValueError):
    """A control value equals a treated value; the strict indicator is undefined."""


class DomainError(TwoStageError, ValueError):
    """An argument lies outside the domain of the computation."""


class InsufficientData(TwoStageError, ValueError):
    """Too few observations for the requested index pattern."""


class BudgetExceeded(TwoStageError, RuntimeError):
    """Exact enumeration would exceed the configured arrangement budget."""


class DegenerateError(TwoStageError, ValueError):
    """The distribution has zero variance."""


class InfeasibleAlpha(TwoStageError, ValueError):
    """No critical-value pair satisfies the size constraints."""
