"""Exception types shared across the solver."""

from __future__ import annotations


class CardError(Exception):
    """Base class for all solver errors."""


class SortMismatch(CardError):
    """A term or substitution violates the declared sort discipline."""


class UnknownSymbol(CardError):
    """An identifier was used without being declared."""


class DuplicateSymbol(CardError):
    """An identifier was declared twice."""


class ConstNotEnabled(CardError):
    """Constant arrays were used outside CARDC mode."""


class ParseError(CardError):
    """Problem text is not well-formed; carries line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnsupportedAtom(CardError):
    """An atom falls outside the index theory's grammar."""


class NotUnsat(CardError):
    """Interpolation was requested for a satisfiable pair."""


class NoTermFound(CardError):
    """The bounded search for shared witness terms was exhausted."""


class MixedLiteral(CardError):
    """An equality proof step cannot be attributed to a single side."""


class NoSeparatingTerm(CardError):
    """No shared term could discharge a cross-side equality step."""


class AdapterFailure(CardError):
    """The external interpolation subprocess failed or timed out."""


class UnverifiedInterpolant(CardError):
    """An externally produced interpolant failed re-verification."""


class UnsupportedFragment(CardError):
    """The requested operation is outside the supported fragment."""


class BaseStillSat(CardError):
    """Internal invariant breach: the reduced pair was unexpectedly satisfiable."""


class DomainOverflow(CardError):
    """An index value escaped the evaluation window."""


class BudgetExceeded(CardError):
    """Model enumeration exceeded its configured budget."""
