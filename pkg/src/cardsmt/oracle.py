"""Ground-truth evaluator over explicit finite models.

A functional model interprets INDEX as an integer window [lo, hi] with
lo <= 0 <= hi, ELEM as a finite token set containing the distinguished
undefined value and the default element (always distinct), and every array
constant as a positive-support function: cells are non-undefined exactly on
[0, length] and undefined outside.  Reads are function application, writes
update a cell only when the written value is defined and the position lies
inside the support, the length of an array is its support bound, the
difference operation returns the largest disagreement position (0 for equal
arrays), and a constant array of parameter i has length max(i, 0) filled
with the default element.

Everything here exists to cross-check the symbolic engine: `evaluate`
decides ground formulas against one model, `enumerate_and_decide` searches
all models within bounds.  A positive answer is always definitive; a
negative one is definitive only when the bounds dominate the instance's
(conservative, documented) small-model estimate, and advisory otherwise.

Universally quantified index templates are evaluated by letting the bound
name range over the whole window, which is exactly the bounded reading the
lemma suites need.  Enumeration branches on the next unknown demanded by
partial evaluation (an index name, an element name, an array length, one
cell, or one table point of a free function), so irrelevant structure is
never enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BudgetExceeded, DomainOverflow
from .kernel import (
    And,
    Eq,
    FalseF,
    ForallIdx,
    Formula,
    Le,
    Not,
    Or,
    PredApp,
    Sort,
    Term,
    TermBank,
    TrueF,
    symbols_of,
)

BOT = "_bot"
EL = "_el"


@dataclass(frozen=True)
class ArrayValue:
    length: int
    cells: tuple[str, ...]  # positions 0..length, never BOT

    def read(self, i: int) -> str:
        if 0 <= i <= self.length:
            return self.cells[i]
        return BOT


@dataclass(frozen=True)
class _SymArray:
    name: str


def const_array(i: int) -> ArrayValue:
    n = max(i, 0)
    return ArrayValue(n, (EL,) * (n + 1))


@dataclass
class FunctionalModel:
    lo: int
    hi: int
    elem_domain: tuple[str, ...]
    idx: dict[str, int] = field(default_factory=dict)
    elems: dict[str, str] = field(default_factory=dict)
    arrays: dict[str, ArrayValue] = field(default_factory=dict)
    funs: dict[str, dict[tuple, object]] = field(default_factory=dict)

    def check_window(self, v: int) -> int:
        if not (self.lo <= v <= self.hi):
            raise DomainOverflow(f"index value {v} outside [{self.lo}, {self.hi}]")
        return v


class _Unknown(Exception):
    def __init__(self, key):
        self.key = key


class _Evaluator:
    """Evaluates terms/formulas; raises _Unknown when `partial` lacks a piece."""

    def __init__(self, m: FunctionalModel, partial: dict | None = None):
        self.m = m
        self.partial = partial if partial is not None else {}
        self.bound: dict[str, int] = {}

    # -- array plumbing ----------------------------------------------------

    def arr_len(self, a) -> int:
        if isinstance(a, ArrayValue):
            return a.length
        key = ("len", a.name)
        if key in self.partial:
            return self.partial[key]
        got = self.m.arrays.get(a.name)
        if got is not None:
            return got.length
        raise _Unknown(key)

    def cell(self, a, k: int) -> str:
        if isinstance(a, ArrayValue):
            return a.read(k)
        if k < 0 or k > self.arr_len(a):
            return BOT
        key = ("cell", a.name, k)
        if key in self.partial:
            return self.partial[key]
        got = self.m.arrays.get(a.name)
        if got is not None:
            return got.read(k)
        raise _Unknown(key)

    def concrete(self, a) -> ArrayValue:
        if isinstance(a, ArrayValue):
            return a
        la = self.arr_len(a)
        return ArrayValue(la, tuple(self.cell(a, k) for k in range(la + 1)))

    # -- terms ---------------------------------------------------------------

    def term(self, t: Term):
        if t.offset:
            v = self.term(t.base)
            return self.m.check_window(v + t.offset)
        if not t.args:
            return self.constant(t)
        if t.head == "rd":
            a = self.term(t.args[0])
            i = self.term(t.args[1])
            return self.cell(a, i)
        if t.head == "wr":
            a, i, e = (self.term(x) for x in t.args)
            if e == BOT or i < 0 or i > self.arr_len(a):
                return a
            conc = self.concrete(a)
            cells = list(conc.cells)
            cells[i] = e
            return ArrayValue(conc.length, tuple(cells))
        if t.head == "len":
            return self.m.check_window(self.arr_len(self.term(t.args[0])))
        if t.head == "diff":
            a, b = self.term(t.args[0]), self.term(t.args[1])
            for h in range(max(self.arr_len(a), self.arr_len(b)), 0, -1):
                if self.cell(a, h) != self.cell(b, h):
                    return self.m.check_window(h)
            return 0
        if t.head == "const":
            i = self.term(t.args[0])
            if max(i, 0) > self.m.hi:
                raise DomainOverflow("const array exceeds the window")
            return const_array(i)
        # free function or predicate
        args = []
        for x in t.args:
            v = self.term(x)
            args.append(self.concrete(v) if isinstance(v, (_SymArray, ArrayValue)) else v)
        args = tuple(args)
        tab = self.m.funs.get(t.head, {})
        if args in tab:
            return tab[args]
        raise _Unknown(("fun", t.head, args))

    def constant(self, t: Term):
        h = t.head
        if h == "0":
            return 0
        if h == "bot":
            return BOT
        if h == "el":
            return EL
        if h == "!tt":
            return True
        if h == "!ff":
            return False
        if t.sort is Sort.INDEX:
            if h in self.bound:
                return self.bound[h]
            if h in self.m.idx:
                return self.m.check_window(self.m.idx[h])
            raise _Unknown(("idx", h))
        if t.sort is Sort.ELEM:
            if h in self.m.elems:
                return self.m.elems[h]
            raise _Unknown(("elem", h))
        if t.sort is Sort.ARRAY:
            return _SymArray(h)
        raise DomainOverflow(f"constant {h} of sort {t.sort} has no interpretation")

    # -- formulas -----------------------------------------------------------

    def formula(self, phi: Formula) -> bool:
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, FalseF):
            return False
        if isinstance(phi, Not):
            return not self.formula(phi.arg)
        if isinstance(phi, And):
            return all(self.formula(g) for g in phi.args)
        if isinstance(phi, Or):
            return any(self.formula(g) for g in phi.args)
        if isinstance(phi, ForallIdx):
            saved = self.bound.get(phi.var)
            try:
                for h in range(self.m.lo, self.m.hi + 1):
                    self.bound[phi.var] = h
                    if not self.formula(phi.body):
                        return False
                return True
            finally:
                if saved is None:
                    self.bound.pop(phi.var, None)
                else:
                    self.bound[phi.var] = saved
        if isinstance(phi, Le):
            return self.term(phi.lhs) <= self.term(phi.rhs)
        if isinstance(phi, Eq):
            lv, rv = self.term(phi.lhs), self.term(phi.rhs)
            if isinstance(lv, (_SymArray, ArrayValue)) or isinstance(rv, (_SymArray, ArrayValue)):
                return self.concrete(lv) == self.concrete(rv)
            return lv == rv
        if isinstance(phi, PredApp):
            bank = phi.args[0]._bank if phi.args else None
            if bank is None:
                tab = self.m.funs.get(phi.name, {})
                if () in tab:
                    return bool(tab[()])
                raise _Unknown(("fun", phi.name, ()))
            return bool(self.term(bank.app(phi.name, phi.args)))
        raise TypeError(phi)


def evaluate(m: FunctionalModel, phi: Formula) -> bool:
    """Decide a ground formula against a fully specified model."""
    return _Evaluator(m).formula(phi)


@dataclass
class OracleSat:
    model: FunctionalModel


@dataclass
class OracleBoundedUnsat:
    authoritative: bool
    bound: int


def small_model_bound(phi: Formula, bank: TermBank) -> int:
    """Conservative window estimate: 2 + index/array/diff name slots + shifts."""
    from .kernel import subterms

    sig = bank.sig
    idx_names = {s for s in symbols_of(phi) if sig.free_consts.get(s) is Sort.INDEX}
    arr_names = {s for s in symbols_of(phi) if sig.free_consts.get(s) is Sort.ARRAY}
    diff_apps = set()
    shift_sum = 0
    for t in subterms(phi):
        if t.head == "diff":
            diff_apps.add(t.id)
        shift_sum += abs(t.offset)
    return 2 + len(idx_names) + len(arr_names) + len(diff_apps) + shift_sum


def enumerate_and_decide(
    phi: Formula,
    bank: TermBank,
    lo: int = -2,
    hi: int = 4,
    elem_size: int = 3,
    max_len: int = 3,
    budget: int = 2_000_000,
) -> OracleSat | OracleBoundedUnsat:
    """Exhaustive model search within the given bounds.

    Sat answers are definitive.  BoundedUnsat is definitive only when the
    window dominates the formula's small-model estimate (and the element
    domain and length cap leave room); otherwise it is advisory.
    """
    if elem_size < 2:
        raise ValueError("element domain must contain the undefined and default values")
    sig = bank.sig
    elem_domain = tuple([BOT, EL] + [f"e{k}" for k in range(elem_size - 2)])
    syms = symbols_of(phi)
    arr_names = sorted(s for s in syms if sig.free_consts.get(s) is Sort.ARRAY)

    model = FunctionalModel(lo, hi, elem_domain)
    partial: dict = {}
    state = {"steps": 0}

    def domain_of(key):
        kind = key[0]
        if kind == "idx":
            return range(lo, hi + 1)
        if kind == "elem":
            return elem_domain
        if kind == "len":
            return range(0, min(max_len, hi) + 1)
        if kind == "cell":
            return [v for v in elem_domain if v != BOT]
        if kind == "fun":
            res = sig.free_funs[key[1]][1]
            if res is Sort.INDEX:
                return range(lo, hi + 1)
            if res is Sort.ELEM:
                return elem_domain
            if res is Sort.BOOL:
                return (True, False)
            raise BudgetExceeded("ARRAY-valued free functions are not enumerable")
        raise ValueError(key)

    def store(key, val):
        kind = key[0]
        if kind == "idx":
            model.idx[key[1]] = val
        elif kind == "elem":
            model.elems[key[1]] = val
        elif kind == "fun":
            model.funs.setdefault(key[1], {})[key[2]] = val
        else:
            partial[key] = val

    def unstore(key):
        kind = key[0]
        if kind == "idx":
            del model.idx[key[1]]
        elif kind == "elem":
            del model.elems[key[1]]
        elif kind == "fun":
            del model.funs[key[1]][key[2]]
        else:
            del partial[key]

    def search() -> bool:
        state["steps"] += 1
        if state["steps"] > budget:
            raise BudgetExceeded(f"model enumeration exceeded {budget} steps")
        try:
            res = _Evaluator(model, partial).formula(phi)
        except _Unknown as u:
            for val in domain_of(u.key):
                store(u.key, val)
                if search():
                    return True
                unstore(u.key)
            return False
        except DomainOverflow:
            return False
        return res

    if search():
        # promote partial array pieces into full values, defaulting the rest
        for name in arr_names:
            la = partial.get(("len", name), 0)
            cells = tuple(partial.get(("cell", name, k), EL) for k in range(la + 1))
            model.arrays.setdefault(name, ArrayValue(la, cells))
        for s in syms:
            sort = sig.free_consts.get(s)
            if sort is Sort.INDEX:
                model.idx.setdefault(s, 0)
            elif sort is Sort.ELEM:
                model.elems.setdefault(s, EL)
        return OracleSat(model)
    bound = small_model_bound(phi, bank)
    authoritative = (
        hi >= bound
        and lo <= -1
        and max_len >= bound - 2
        and elem_size >= len({s for s in syms if sig.free_consts.get(s) is Sort.ELEM}) + 2
    )
    return OracleBoundedUnsat(authoritative, bound)
