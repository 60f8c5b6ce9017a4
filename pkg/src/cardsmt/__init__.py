"""cardsmt: satisfiability and verified interpolation for contiguous arrays with maxdiff."""

from .kernel import Signature, Sort, TermBank

__all__ = ["Signature", "Sort", "TermBank"]
__version__ = "0.1.0"
