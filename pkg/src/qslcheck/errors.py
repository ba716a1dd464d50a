"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class QslError(Exception):
    """Base class for every error raised by qslcheck."""


class ParseError(QslError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class GuardedWandRestriction(ParseError):
    """A quantitative wand whose antecedent is not a bracketed atom."""


class NonPureGuard(QslError):
    """A choice or loop guard that is not a pure atom."""


class DomainError(QslError):
    """A state or formula that does not fit the bounded domain."""


class LoopError(QslError):
    """wlp of a while loop was requested; use an invariant instead."""


class UnsupportedAtom(QslError):
    """The selected SMT dialect cannot express an atom."""


class QuantifierUnsupported(QslError):
    """A quantifier reached an SMT encoding under a quantifier-free logic."""


class FragmentError(QslError):
    """A formula lies outside the fragment an operation requires."""


class SolverError(QslError):
    """The external solver could not be run or answered garbage."""
