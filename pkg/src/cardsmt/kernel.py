"""Sorted terms and formulas for contiguous arrays with maxdiff.

The term language has three object sorts (INDEX, ELEM, ARRAY) plus BOOL for
atoms.  Builtin operations: rd (read), wr (write), diff (largest index where
two arrays differ, 0 when equal), len (strong length), the element constants
bot (undefined cell) and el (default), the index constant 0 and the order
atom <=.  In IDL mode the index sort additionally carries succ/pred; in CARDC
mode the array constructor const of a given length is available.

Terms are hash-consed in a `TermBank`: structurally equal terms are the same
object, so identity comparison is sound everywhere.  succ/pred towers are
stored compressed as a (base, offset) pair on the term and printed as chains
on demand; no other simplification happens at construction time (in
particular diff(a,a) is kept as written).

The bank is append-only, so concurrent readers are safe and formulas are
immutable values that may be shared freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import (
    ConstNotEnabled,
    DuplicateSymbol,
    SortMismatch,
    UnknownSymbol,
)


class Sort(enum.Enum):
    INDEX = "Index"
    ELEM = "Elem"
    ARRAY = "Array"
    BOOL = "Bool"


# Builtin function table: name -> (argument sorts, result sort).
_BUILTIN_FUNS: dict[str, tuple[tuple[Sort, ...], Sort]] = {
    "rd": ((Sort.ARRAY, Sort.INDEX), Sort.ELEM),
    "wr": ((Sort.ARRAY, Sort.INDEX, Sort.ELEM), Sort.ARRAY),
    "diff": ((Sort.ARRAY, Sort.ARRAY), Sort.INDEX),
    "len": ((Sort.ARRAY,), Sort.INDEX),
    "const": ((Sort.INDEX,), Sort.ARRAY),
}

_BUILTIN_CONSTS: dict[str, Sort] = {
    "bot": Sort.ELEM,
    "el": Sort.ELEM,
    "0": Sort.INDEX,
}

# Names reserved by the two-valued encoding of predicates.
TT_NAME = "!tt"
FF_NAME = "!ff"

BUILTIN_NAMES = (
    set(_BUILTIN_FUNS)
    | set(_BUILTIN_CONSTS)
    | {"succ", "pred", "<=", "=", TT_NAME, FF_NAME}
)


class Signature:
    """Declared vocabulary: fixed builtins plus user symbols.

    `index_theory` is "TO" or "IDL"; succ/pred exist only under IDL.
    `const_enabled` switches CARDC mode (the const array constructor).
    """

    def __init__(self, index_theory: str = "IDL", const_enabled: bool = False):
        if index_theory not in ("TO", "IDL"):
            raise ValueError(f"unknown index theory {index_theory!r}")
        self.index_theory = index_theory
        self.const_enabled = const_enabled
        self.free_consts: dict[str, Sort] = {}
        self.free_funs: dict[str, tuple[tuple[Sort, ...], Sort]] = {}

    @property
    def has_shifts(self) -> bool:
        return self.index_theory == "IDL"

    def declare_const(self, name: str, sort: Sort) -> None:
        self._check_fresh(name)
        self.free_consts[name] = sort

    def declare_fun(self, name: str, args: tuple[Sort, ...], result: Sort) -> None:
        if not args:
            self.declare_const(name, result)
            return
        self._check_fresh(name)
        self.free_funs[name] = (args, result)

    def _check_fresh(self, name: str) -> None:
        if name in BUILTIN_NAMES or name in self.free_consts or name in self.free_funs:
            raise DuplicateSymbol(name)

    def is_declared(self, name: str) -> bool:
        return name in self.free_consts or name in self.free_funs

    def const_sort(self, name: str) -> Sort:
        if name in _BUILTIN_CONSTS:
            return _BUILTIN_CONSTS[name]
        if name in (TT_NAME, FF_NAME):
            return Sort.BOOL
        try:
            return self.free_consts[name]
        except KeyError:
            raise UnknownSymbol(name) from None

    def fun_rank(self, name: str) -> tuple[tuple[Sort, ...], Sort]:
        if name in _BUILTIN_FUNS:
            if name == "const" and not self.const_enabled:
                raise ConstNotEnabled("const requires CARDC mode")
            return _BUILTIN_FUNS[name]
        if name in ("succ", "pred"):
            if not self.has_shifts:
                raise UnknownSymbol(f"{name} requires the IDL index theory")
            return ((Sort.INDEX,), Sort.INDEX)
        try:
            return self.free_funs[name]
        except KeyError:
            raise UnknownSymbol(name) from None


@dataclass(frozen=True, eq=False)
class Term:
    """Interned term node.

    `head` is a constant or function name; constants have empty `args`.
    For INDEX-sorted terms `offset` holds the succ/pred displacement applied
    on top of the head application (succ(succ(x)) is Term('x', (), 2)).
    Identity comparison coincides with structural equality thanks to the
    bank's hash-consing.
    """

    id: int
    sort: Sort
    head: str
    args: tuple["Term", ...]
    offset: int = 0

    @property
    def is_const(self) -> bool:
        return not self.args and self.offset == 0

    @property
    def base(self) -> "Term":
        """The term with its offset stripped (itself when offset == 0)."""
        return self._bank.shift(self, -self.offset) if self.offset else self

    # Written once by the bank right after construction.
    _bank: "TermBank" = field(compare=False, repr=False, default=None)  # type: ignore

    def __str__(self) -> str:
        return print_term(self)


class TermBank:
    """Hash-consing store; one per problem context."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self._table: dict[tuple, Term] = {}
        self._next_id = 0
        self.fresh_counter = 0  # shared by naming ledgers on this bank

    def _mk(self, sort: Sort, head: str, args: tuple[Term, ...], offset: int) -> Term:
        key = (head, tuple(a.id for a in args), offset)
        hit = self._table.get(key)
        if hit is not None:
            return hit
        term = Term(self._next_id, sort, head, args, offset)
        object.__setattr__(term, "_bank", self)
        self._next_id += 1
        self._table[key] = term
        return term

    def const(self, name: str) -> Term:
        return self._mk(self.sig.const_sort(name), name, (), 0)

    def app(self, name: str, args: tuple[Term, ...]) -> Term:
        arg_sorts, result = self.sig.fun_rank(name)
        if len(args) != len(arg_sorts):
            raise SortMismatch(f"{name} expects {len(arg_sorts)} arguments")
        for got, want in zip(args, arg_sorts):
            if got.sort is not want:
                raise SortMismatch(f"{name}: argument of sort {got.sort} where {want} expected")
        if name in ("succ", "pred"):
            return self.shift(args[0], 1 if name == "succ" else -1)
        return self._mk(result, name, args, 0)

    def shift(self, t: Term, k: int) -> Term:
        """t displaced by k successor steps (negative k = predecessors)."""
        if t.sort is not Sort.INDEX:
            raise SortMismatch("succ/pred apply to INDEX terms")
        if k != 0 and not self.sig.has_shifts:
            raise UnknownSymbol("succ/pred require the IDL index theory")
        if k == 0:
            return t
        return self._mk(Sort.INDEX, t.head, t.args, t.offset + k)

    # Convenience constructors -------------------------------------------------

    def zero(self) -> Term:
        return self.const("0")

    def numeral(self, n: int) -> Term:
        return self.shift(self.zero(), n)

    def bot(self) -> Term:
        return self.const("bot")

    def el(self) -> Term:
        return self.const("el")

    def tt(self) -> Term:
        return self.const(TT_NAME)

    def ff(self) -> Term:
        return self.const(FF_NAME)

    def rd(self, a: Term, i: Term) -> Term:
        return self.app("rd", (a, i))

    def wr(self, a: Term, i: Term, e: Term) -> Term:
        return self.app("wr", (a, i, e))

    def diff(self, a: Term, b: Term) -> Term:
        return self.app("diff", (a, b))

    def length(self, a: Term) -> Term:
        return self.app("len", (a,))

    def const_array(self, i: Term) -> Term:
        return self.app("const", (i,))

    def substitute_term(self, t: Term, mapping: dict[str, Term]) -> Term:
        """Simultaneous replacement of named constants inside `t`."""
        if not t.args:
            repl = mapping.get(t.head)
            if repl is None:
                return t
            if repl.sort is not t.sort:
                raise SortMismatch(f"substituting {repl.sort} term for {t.sort} name {t.head}")
            return self.shift(repl, t.offset) if t.offset else repl
        new_args = tuple(self.substitute_term(a, mapping) for a in t.args)
        if new_args == t.args:
            return t
        out = self._mk_checked(t.head, new_args)
        return self.shift(out, t.offset) if t.offset else out

    def _mk_checked(self, head: str, args: tuple[Term, ...]) -> Term:
        arg_sorts, result = self.sig.fun_rank(head)
        for got, want in zip(args, arg_sorts):
            if got.sort is not want:
                raise SortMismatch(f"{head}: argument of sort {got.sort} where {want} expected")
        return self._mk(result, head, args, 0)

    def expand_iterated_diff(self, a: Term, b: Term, k: int) -> Term:
        """The k-th largest disagreement index between a and b, as a term.

        Level 1 is diff(a, b); level k+1 reads through a copy of b patched to
        agree with a at the previous k disagreement points:

            b_1     = b
            d_k     = diff(a, b_k)
            b_{k+1} = wr(b_k, d_k, rd(a, d_k))
        """
        if a.sort is not Sort.ARRAY or b.sort is not Sort.ARRAY:
            raise SortMismatch("expand_iterated_diff expects two ARRAY terms")
        if k < 1:
            raise ValueError("iteration count must be >= 1")
        b_k = b
        d_k = self.diff(a, b_k)
        for _ in range(k - 1):
            b_k = self.wr(b_k, d_k, self.rd(a, d_k))
            d_k = self.diff(a, b_k)
        return d_k


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return print_formula(self)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Eq(Formula):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Le(Formula):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class PredApp(Formula):
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class ForallIdx(Formula):
    """Internal single-bound universal template; never escapes reduction."""

    var: str
    body: Formula


TRUE = TrueF()
FALSE = FalseF()


def mk_eq(lhs: Term, rhs: Term) -> Formula:
    if lhs.sort is not rhs.sort:
        raise SortMismatch(f"equality between {lhs.sort} and {rhs.sort}")
    return Eq(lhs, rhs)


def mk_le(lhs: Term, rhs: Term) -> Formula:
    if lhs.sort is not Sort.INDEX or rhs.sort is not Sort.INDEX:
        raise SortMismatch("<= applies to INDEX terms")
    return Le(lhs, rhs)


def mk_lt(lhs: Term, rhs: Term) -> Formula:
    """Strict order as the negation of the flipped weak atom."""
    return neg(mk_le(rhs, lhs))


def neg(f: Formula) -> Formula:
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def conj(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if isinstance(f, TrueF):
            continue
        if isinstance(f, FalseF):
            return FALSE
        if isinstance(f, And):
            flat.extend(f.args)
        else:
            flat.append(f)
    seen = tuple(dict.fromkeys(flat))
    if not seen:
        return TRUE
    if len(seen) == 1:
        return seen[0]
    return And(seen)


def disj(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if isinstance(f, FalseF):
            continue
        if isinstance(f, TrueF):
            return TRUE
        if isinstance(f, Or):
            flat.extend(f.args)
        else:
            flat.append(f)
    seen = tuple(dict.fromkeys(flat))
    if not seen:
        return FALSE
    if len(seen) == 1:
        return seen[0]
    return Or(seen)


def implies(a: Formula, b: Formula) -> Formula:
    return disj(neg(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(implies(a, b), implies(b, a))


def substitute(phi: Formula, mapping: dict[str, Term], bank: TermBank) -> Formula:
    """Simultaneous sort-preserving replacement of named constants in phi."""

    def go(f: Formula) -> Formula:
        if isinstance(f, (TrueF, FalseF)):
            return f
        if isinstance(f, Eq):
            return mk_eq(bank.substitute_term(f.lhs, mapping), bank.substitute_term(f.rhs, mapping))
        if isinstance(f, Le):
            return mk_le(bank.substitute_term(f.lhs, mapping), bank.substitute_term(f.rhs, mapping))
        if isinstance(f, PredApp):
            return PredApp(f.name, tuple(bank.substitute_term(a, mapping) for a in f.args))
        if isinstance(f, Not):
            return neg(go(f.arg))
        if isinstance(f, And):
            return conj(*(go(g) for g in f.args))
        if isinstance(f, Or):
            return disj(*(go(g) for g in f.args))
        if isinstance(f, ForallIdx):
            if f.var in mapping:
                inner = {k: v for k, v in mapping.items() if k != f.var}
                return ForallIdx(f.var, substitute(f.body, inner, bank)) if inner else f
            return ForallIdx(f.var, go(f.body))
        raise TypeError(f"unknown formula node {f!r}")

    return go(phi)


def term_symbols(t: Term, out: set[str]) -> None:
    if not t.args:
        if t.head not in _BUILTIN_CONSTS and t.head not in (TT_NAME, FF_NAME):
            out.add(t.head)
        return
    if t.head not in _BUILTIN_FUNS and t.head not in ("succ", "pred"):
        out.add(t.head)
    for a in t.args:
        term_symbols(a, out)


def symbols_of(phi: Formula) -> set[str]:
    """Free constants, functions and predicates occurring in phi (builtins excluded)."""
    out: set[str] = set()

    def go(f: Formula) -> None:
        if isinstance(f, (TrueF, FalseF)):
            return
        if isinstance(f, (Eq, Le)):
            term_symbols(f.lhs, out)
            term_symbols(f.rhs, out)
        elif isinstance(f, PredApp):
            out.add(f.name)
            for a in f.args:
                term_symbols(a, out)
        elif isinstance(f, Not):
            go(f.arg)
        elif isinstance(f, (And, Or)):
            for g in f.args:
                go(g)
        elif isinstance(f, ForallIdx):
            go(f.body)
            out.discard(f.var)
        else:
            raise TypeError(f"unknown formula node {f!r}")

    go(phi)
    return out


def subterms(phi: Formula) -> list[Term]:
    """All term occurrences in phi, outermost first, deduplicated."""
    seen: dict[int, Term] = {}

    def walk_term(t: Term) -> None:
        if t.id not in seen:
            seen[t.id] = t
        for a in t.args:
            walk_term(a)

    def go(f: Formula) -> None:
        if isinstance(f, (Eq, Le)):
            walk_term(f.lhs)
            walk_term(f.rhs)
        elif isinstance(f, PredApp):
            for a in f.args:
                walk_term(a)
        elif isinstance(f, Not):
            go(f.arg)
        elif isinstance(f, (And, Or)):
            for g in f.args:
                go(g)
        elif isinstance(f, ForallIdx):
            go(f.body)

    go(phi)
    return list(seen.values())


# ---------------------------------------------------------------------------
# Printing (s-expression syntax, the same grammar the frontend parses)
# ---------------------------------------------------------------------------


def print_term(t: Term) -> str:
    if t.offset:
        inner = print_term(t.base)
        if t.head == "0" and not t.args:
            return str(t.offset)
        op = "succ" if t.offset > 0 else "pred"
        for _ in range(abs(t.offset)):
            inner = f"({op} {inner})"
        return inner
    if not t.args:
        return t.head
    return "(" + " ".join([t.head] + [print_term(a) for a in t.args]) + ")"


def print_formula(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        return f"(= {print_term(f.lhs)} {print_term(f.rhs)})"
    if isinstance(f, Le):
        return f"(<= {print_term(f.lhs)} {print_term(f.rhs)})"
    if isinstance(f, PredApp):
        if not f.args:
            return f.name
        return "(" + " ".join([f.name] + [print_term(a) for a in f.args]) + ")"
    if isinstance(f, Not):
        return f"(not {print_formula(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(print_formula(g) for g in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(print_formula(g) for g in f.args) + ")"
    if isinstance(f, ForallIdx):
        return f"(forall-index {f.var} {print_formula(f.body)})"
    raise TypeError(f"unknown formula node {f!r}")
