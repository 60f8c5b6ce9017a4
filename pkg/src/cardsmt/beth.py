"""Implicit definability testing and explicit definition extraction.

A formula delta(x, y) implicitly defines the names y from the parameters x
when some number N > 1 of renamed copies of the y cannot be pairwise
disjoint: the conjunction of N copies of delta entails that two copies
overlap.  The check below refutes the negation (all copies of delta plus
all cross-copy disequalities) for N = 2, 3, ... up to a bound; the first
refuted N is returned, and running out of bound is an ordinary value, not
an error, since the test is only a semi-decision procedure.

An explicit definition is a tuple of terms t(x) with delta entailing that
some y equals some t.  Extraction first tries the index theory's witness
search when delta is a pure index constraint entailing a copy equality at
N = 2, and otherwise enumerates candidate terms over the parameters up to
a depth bound, validating the tuple by refutation and then shrinking it
greedily.  Every returned tuple has passed the entailment check; exhausting
the bounds raises instead of guessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import check_sat
from .errors import NoTermFound
from .kernel import (
    And,
    Eq,
    Formula,
    Le,
    Not,
    Sort,
    Term,
    TermBank,
    conj,
    mk_eq,
    neg,
    substitute,
    symbols_of,
)


@dataclass
class BethQuery:
    delta: Formula
    params: list[str]
    defined: list[str]
    n_max: int = 6
    depth_max: int = 2

    def validate(self, bank: TermBank) -> None:
        free = symbols_of(self.delta)
        declared = set(self.params) | set(self.defined)
        if not free <= declared:
            raise ValueError(f"free names {free - declared} are neither parameters nor defined")
        if set(self.params) & set(self.defined):
            raise ValueError("parameter and defined names must be disjoint")


@dataclass
class Found:
    n: int


@dataclass
class Exhausted:
    n_max: int


def _copy_names(q: BethQuery, bank: TermBank, i: int) -> dict[str, Term]:
    out = {}
    for y in q.defined:
        name = f"{y}!c{i}"
        if not bank.sig.is_declared(name):
            bank.sig.declare_const(name, bank.sig.const_sort(y))
        out[y] = bank.const(name)
    return out


def _n_copy_negation(q: BethQuery, bank: TermBank, n: int) -> Formula:
    copies = [_copy_names(q, bank, i) for i in range(n)]
    parts = [substitute(q.delta, c, bank) for c in copies]
    for i in range(n):
        for j in range(i + 1, n):
            for y1 in q.defined:
                for y2 in q.defined:
                    parts.append(neg(mk_eq(copies[i][y1], copies[j][y2])))
    return conj(*parts)


def implicit_define_check(q: BethQuery, bank: TermBank, mode: str = "CARD") -> Found | Exhausted:
    """Smallest N <= n_max at which the N renamed copies must overlap."""
    q.validate(bank)
    for n in range(2, q.n_max + 1):
        if check_sat(_n_copy_negation(q, bank, n), bank, mode).status == "unsat":
            return Found(n)
    return Exhausted(q.n_max)


# ---------------------------------------------------------------------------
# Explicit definitions
# ---------------------------------------------------------------------------


def _candidate_terms(q: BethQuery, bank: TermBank, sort: Sort) -> list[Term]:
    """Ground candidates over the parameters, shallow first, deterministic."""
    sig = bank.sig
    idx0: list[Term] = [bank.zero()]
    elem0: list[Term] = [bank.el()]
    arr0: list[Term] = []
    for x in q.params:
        s = sig.const_sort(x)
        t = bank.const(x)
        if s is Sort.INDEX:
            idx0.append(t)
        elif s is Sort.ELEM:
            elem0.append(t)
        elif s is Sort.ARRAY:
            arr0.append(t)
    levels = [(list(idx0), list(elem0), list(arr0))]
    for _ in range(q.depth_max):
        idx, elem, arr = levels[-1]
        idx2 = list(idx)
        if sig.has_shifts:
            idx2 += [bank.shift(t, d) for t in idx for d in (1, -1)]
        idx2 += [bank.length(a) for a in arr]
        idx2 += [bank.diff(a, b) for a in arr for b in arr if a is not b]
        elem2 = list(elem) + [bank.rd(a, i) for a in arr for i in idx]
        levels.append((idx2, elem2, list(arr)))
    idx, elem, arr = levels[-1]
    pool = {Sort.INDEX: idx, Sort.ELEM: elem, Sort.ARRAY: arr}[sort]
    seen: dict[int, Term] = {}
    for t in pool:
        seen.setdefault(t.id, t)
    return sorted(seen.values(), key=lambda t: (len(str(t)), str(t)))


def _tuple_defines(q: BethQuery, bank: TermBank, mode: str, cands: list[Term]) -> bool:
    """delta entails that some defined name equals some candidate."""
    apart = [
        neg(mk_eq(bank.const(y), t))
        for y in q.defined
        for t in cands
        if bank.const(y).sort is t.sort
    ]
    if len(apart) < len(q.defined) * len(cands):
        return False  # a sort had no candidate at all
    return check_sat(conj(q.delta, *apart), bank, mode).status == "unsat"


def explicit_define_extract(
    q: BethQuery, n: int, bank: TermBank, mode: str = "CARD"
) -> tuple[Term, ...]:
    """Validated defining terms after implicit_define_check returned Found(n).

    Raises NoTermFound when neither the index-theory witness search nor the
    bounded enumeration produces a tuple that passes the entailment check.
    """
    q.validate(bank)
    tried = _index_witnesses(q, bank, mode) if n == 2 else None
    if tried:
        return tried
    # enumeration: per defined sort, take all candidates, validate, shrink
    sorts = {bank.sig.const_sort(y) for y in q.defined}
    cands: list[Term] = []
    for s in sorts:
        cands.extend(_candidate_terms(q, bank, s))
    if not cands or not _tuple_defines(q, bank, mode, cands):
        raise NoTermFound(
            f"no defining terms over the parameters within depth {q.depth_max}"
        )
    kept = list(cands)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1 :]
        if trial and _tuple_defines(q, bank, mode, trial):
            kept = trial
        else:
            i += 1
    return tuple(kept)


def _index_witnesses(q: BethQuery, bank: TermBank, mode: str) -> tuple[Term, ...] | None:
    """Equality-interpolating extraction from the two-copy refutation.

    Only applies when delta is a conjunction of index literals over one
    defined name; the two renamed copies then satisfy the cross-side
    entailment needed by the witness search.
    """
    from .index_theory import ti_check_conj, ti_equality_interpolating_terms
    from .errors import UnsupportedAtom

    if len(q.defined) != 1 or bank.sig.const_sort(q.defined[0]) is not Sort.INDEX:
        return None

    def lits(f: Formula) -> list[Formula] | None:
        if isinstance(f, And):
            out = []
            for g in f.args:
                sub = lits(g)
                if sub is None:
                    return None
                out.extend(sub)
            return out
        if isinstance(f, (Le, Eq)) or (isinstance(f, Not) and isinstance(f.arg, (Le, Eq))):
            inner = f.arg if isinstance(f, Not) else f
            if inner.lhs.sort is Sort.INDEX:
                return [f]
        return None

    body = lits(q.delta)
    if body is None:
        return None
    c1 = _copy_names(q, bank, 0)
    c2 = _copy_names(q, bank, 1)
    a_lits = [substitute(f, c1, bank) for f in body]
    b_lits = [substitute(f, c2, bank) for f in body]
    y1, y2 = c1[q.defined[0]], c2[q.defined[0]]
    try:
        terms = ti_equality_interpolating_terms(a_lits, b_lits, [y1], [y2], bank)
    except (NoTermFound, UnsupportedAtom):
        return None
    if _tuple_defines(q, bank, mode, list(terms)):
        return terms
    return None
