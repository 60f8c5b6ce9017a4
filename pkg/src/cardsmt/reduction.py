"""Flattening to separated pairs and bounded instantiation.

A separated pair splits a constraint into defining atoms (phi1) and a
boolean part (phi2).  phi1 holds only equations of the shapes

    len(a) = l,   c = wr(b, i, e),   diff_n(a, b) = k,   const(i) = c

over plain constants, with a length atom present for every array constant
in sight and lower diff levels present below any higher one.  phi2 holds
boolean combinations of index atoms and of read/element equalities; writes,
diffs, lengths and constant arrays never occur there.

Flattening hoists every such operation out of an input formula by naming
the offending subterm with a fresh constant (recording the definition in a
ledger for later back-substitution).  Array equalities cannot live in
either part, so the atom a = b is rewritten in place, under any polarity,
to "the largest disagreement index is 0 and the two reads at 0 agree",
with the disagreement index hoisted like any other; this is sound because
a definitional atom is conjoined positively while the rewritten atom keeps
its position in the boolean skeleton.

Bounded instantiation (`zero_instantiate`) then compiles each phi1 atom
into its quantifier-free consequences over a finite set I of index names:
one instance of the defining characterization per name in I, plus the
ground guards.  The result stays a separated pair, is monotone in I and is
idempotent for fixed I.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import (
    And,
    Eq,
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
    FalseF,
    conj,
    disj,
    implies,
    iff,
    mk_eq,
    mk_le,
    mk_lt,
    neg,
)


@dataclass(frozen=True)
class LenAtom:
    arr: Term
    length: Term


@dataclass(frozen=True)
class WrAtom:
    lhs: Term  # lhs = wr(arr, idx, val)
    arr: Term
    idx: Term
    val: Term


@dataclass(frozen=True)
class DiffAtom:
    a: Term
    b: Term
    level: int
    k: Term


@dataclass(frozen=True)
class ConstAtom:
    idx: Term
    arr: Term


class NamingLedger:
    """Fresh-constant factory with a memo, colors, and introduction order."""

    def __init__(self, bank: TermBank, coloring: dict[str, str] | None = None):
        self.bank = bank
        self.coloring = coloring  # None outside interpolation sessions
        self.defs: list[tuple[Term, Term]] = []  # (name, named term), in order
        self.by_term: dict[Term, Term] = {}

    def fresh(self, sort: Sort, prefix: str, tag: str | None = None) -> Term:
        name = f"!{prefix}{self.bank.fresh_counter}"
        self.bank.fresh_counter += 1
        self.bank.sig.declare_const(name, sort)
        if self.coloring is not None:
            self.coloring[name] = tag if tag is not None else "common"
        return self.bank.const(name)

    def tag_of_term(self, t: Term) -> str | None:
        """Color a fresh name the way the named term is colored."""
        if self.coloring is None:
            return None
        from .kernel import term_symbols

        syms: set[str] = set()
        term_symbols(t, syms)
        has_a = any(self.coloring.get(s) == "A" for s in syms)
        has_b = any(self.coloring.get(s) == "B" for s in syms)
        if has_a and has_b:
            raise ValueError(f"term {t} mixes strict symbols of both sides")
        return "A" if has_a else ("B" if has_b else "common")

    def name_for(self, t: Term, prefix: str) -> tuple[Term, bool]:
        """Memoized fresh name for t; the flag reports a fresh introduction."""
        hit = self.by_term.get(t)
        if hit is not None:
            return hit, False
        name = self.fresh(t.sort, prefix, self.tag_of_term(t))
        self.by_term[t] = name
        self.defs.append((name, t))
        return name, True

    def back_substitution(self) -> list[tuple[Term, Term]]:
        """(name, term) pairs in reverse introduction order."""
        return list(reversed(self.defs))


@dataclass
class SeparatedPair:
    ledger: NamingLedger
    lens: dict[Term, Term] = field(default_factory=dict)  # array const -> length const
    wrs: list[WrAtom] = field(default_factory=list)
    diffs: dict[tuple[int, int], list[DiffAtom]] = field(default_factory=dict)
    consts: list[ConstAtom] = field(default_factory=list)
    phi2: list[Formula] = field(default_factory=list)
    _phi2_seen: set[Formula] = field(default_factory=set)

    @property
    def bank(self) -> TermBank:
        return self.ledger.bank

    def add_phi2(self, f: Formula) -> None:
        if isinstance(f, TrueF) or f in self._phi2_seen:
            return
        self._phi2_seen.add(f)
        self.phi2.append(f)

    def phi1_atoms(self) -> list:
        out: list = [LenAtom(a, l) for a, l in self.lens.items()]
        out.extend(self.wrs)
        for chain in self.diffs.values():
            out.extend(chain)
        out.extend(self.consts)
        return out

    def phi1_formulas(self) -> list[Formula]:
        """phi1 atoms re-expressed as formulas of the full language."""
        bank = self.bank
        out: list[Formula] = []
        for a, l in self.lens.items():
            out.append(mk_eq(bank.length(a), l))
        for w in self.wrs:
            out.append(mk_eq(w.lhs, bank.wr(w.arr, w.idx, w.val)))
        for chain in self.diffs.values():
            for d in chain:
                out.append(mk_eq(bank.expand_iterated_diff(d.a, d.b, d.level), d.k))
        for c in self.consts:
            out.append(mk_eq(bank.const_array(c.idx), c.arr))
        return out

    def array_constants(self) -> list[Term]:
        return list(self.lens.keys())

    def index_names(self) -> list[Term]:
        """INDEX constants occurring anywhere in the pair, including 0."""
        out: dict[int, Term] = {}
        bank = self.bank

        def note_term(t: Term) -> None:
            base = t.base
            if base.sort is Sort.INDEX and not base.args:
                out.setdefault(base.id, base)
            for a in t.args:
                note_term(a)
            if t.offset:
                note_term(t.base)

        def note_formula(f: Formula) -> None:
            if isinstance(f, (Eq, Le)):
                note_term(f.lhs)
                note_term(f.rhs)
            elif isinstance(f, PredApp):
                for a in f.args:
                    note_term(a)
            elif isinstance(f, Not):
                note_formula(f.arg)
            elif isinstance(f, (And, Or)):
                for g in f.args:
                    note_formula(g)
            elif isinstance(f, ForallIdx):
                note_formula(f.body)

        z = bank.zero()
        out[z.id] = z
        for f in self.phi2:
            note_formula(f)
        for l in self.lens.values():
            out.setdefault(l.id, l)
        for w in self.wrs:
            note_term(w.idx)
            note_term(w.val)
        for chain in self.diffs.values():
            for d in chain:
                out.setdefault(d.k.id, d.k)
        for c in self.consts:
            note_term(c.idx)
        return list(out.values())

    def ensure_length(self, arr: Term) -> Term:
        got = self.lens.get(arr)
        if got is not None:
            return got
        name, _ = self.ledger.name_for(self.bank.length(arr), "l")
        self.lens[arr] = name
        return name

    def diff_chain(self, a: Term, b: Term) -> list[DiffAtom]:
        return self.diffs.get((a.id, b.id), [])


def flatten(phi: Formula, ledger: NamingLedger) -> SeparatedPair:
    """Equisatisfiable separated pair for a quantifier-free formula."""
    sp = SeparatedPair(ledger)
    sp.add_phi2(_hoist_formula(phi, sp))
    # every array constant mentioned anywhere needs a length atom
    for arr in _array_constants_of(sp):
        sp.ensure_length(arr)
    return sp


def _array_constants_of(sp: SeparatedPair) -> list[Term]:
    out: dict[int, Term] = {}

    def note_term(t: Term) -> None:
        if t.sort is Sort.ARRAY and not t.args:
            out.setdefault(t.id, t)
        for a in t.args:
            note_term(a)

    def note(f: Formula) -> None:
        if isinstance(f, (Eq, Le)):
            note_term(f.lhs)
            note_term(f.rhs)
        elif isinstance(f, PredApp):
            for a in f.args:
                note_term(a)
        elif isinstance(f, Not):
            note(f.arg)
        elif isinstance(f, (And, Or)):
            for g in f.args:
                note(g)

    for f in sp.phi2:
        note(f)
    for w in sp.wrs:
        for t in (w.lhs, w.arr):
            out.setdefault(t.id, t)
        note_term(w.val)
    for chain in sp.diffs.values():
        for d in chain:
            out.setdefault(d.a.id, d.a)
            out.setdefault(d.b.id, d.b)
    for c in sp.consts:
        out.setdefault(c.arr.id, c.arr)
    for a in sp.lens:
        out.setdefault(a.id, a)
    return list(out.values())


def _hoist_formula(f: Formula, sp: SeparatedPair, conjunctive: bool = True) -> Formula:
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        return neg(_hoist_formula(f.arg, sp, False))
    if isinstance(f, And):
        return conj(*(_hoist_formula(g, sp, conjunctive) for g in f.args))
    if isinstance(f, Or):
        return disj(*(_hoist_formula(g, sp, False) for g in f.args))
    if isinstance(f, PredApp):
        return PredApp(f.name, tuple(_hoist_term(a, sp) for a in f.args))
    if isinstance(f, Le):
        return mk_le(_hoist_index(f.lhs, sp, name_shifts=False),
                     _hoist_index(f.rhs, sp, name_shifts=False))
    if isinstance(f, Eq):
        if f.lhs.sort is Sort.ARRAY:
            # a positively asserted defining equation is already a defining
            # atom; only equalities under negation or disjunction need the
            # disagreement-index rewrite
            if conjunctive:
                direct = _direct_def_atom(f.lhs, f.rhs, sp)
                if direct is not None:
                    return direct
            a = _hoist_array(f.lhs, sp)
            b = _hoist_array(f.rhs, sp)
            k = _name_diff(a, b, sp)
            bank = sp.bank
            return conj(
                mk_eq(k, bank.zero()),
                mk_eq(bank.rd(a, bank.zero()), bank.rd(b, bank.zero())),
            )
        if f.lhs.sort is Sort.INDEX:
            return mk_eq(_hoist_index(f.lhs, sp, name_shifts=False),
                         _hoist_index(f.rhs, sp, name_shifts=False))
        return mk_eq(_hoist_term(f.lhs, sp), _hoist_term(f.rhs, sp))
    raise TypeError(f"cannot flatten {f!r}")


def _direct_def_atom(lhs: Term, rhs: Term, sp: SeparatedPair) -> Formula | None:
    """Turn `c = wr(b, i, e)` or `c = const(i)` into a phi1 atom in place."""
    from .kernel import TRUE

    if rhs.head not in ("wr", "const") and lhs.head in ("wr", "const"):
        lhs, rhs = rhs, lhs
    if rhs.head == "wr":
        name = _hoist_array(lhs, sp)
        b = _hoist_array(rhs.args[0], sp)
        i = _hoist_index(rhs.args[1], sp, name_shifts=True)
        e = _hoist_term(rhs.args[2], sp)
        atom = WrAtom(name, b, i, e)
        if atom not in sp.wrs:
            sp.wrs.append(atom)
        _memo_name(sp, sp.bank.wr(b, i, e), name)
        return TRUE
    if rhs.head == "const":
        name = _hoist_array(lhs, sp)
        i = _hoist_index(rhs.args[0], sp, name_shifts=True)
        atom = ConstAtom(i, name)
        if atom not in sp.consts:
            sp.consts.append(atom)
        _memo_name(sp, sp.bank.const_array(i), name)
        return TRUE
    return None


def _memo_name(sp: SeparatedPair, term: Term, name: Term) -> None:
    """Reuse a user constant as the term's name, unless colors disagree."""
    ledger = sp.ledger
    if ledger.coloring is not None:
        if ledger.coloring.get(name.head) != ledger.tag_of_term(term):
            return
    ledger.by_term.setdefault(term, name)


def _hoist_term(t: Term, sp: SeparatedPair) -> Term:
    if t.sort is Sort.ARRAY:
        return _hoist_array(t, sp)
    if t.sort is Sort.INDEX:
        return _hoist_index(t, sp, name_shifts=False)
    bank = sp.bank
    if t.head == "rd":
        a = _hoist_array(t.args[0], sp)
        i = _hoist_index(t.args[1], sp, name_shifts=True)
        return bank.rd(a, i)
    if t.args:  # free function application
        return bank.app(t.head, tuple(_hoist_term(a, sp) for a in t.args))
    return t


def _hoist_array(t: Term, sp: SeparatedPair) -> Term:
    bank = sp.bank
    if not t.args:
        return t
    if t.head == "wr":
        a = _hoist_array(t.args[0], sp)
        i = _hoist_index(t.args[1], sp, name_shifts=True)
        e = _hoist_term(t.args[2], sp)
        w = bank.wr(a, i, e)
        name, fresh = sp.ledger.name_for(w, "w")
        atom = WrAtom(name, a, i, e)
        if atom not in sp.wrs:
            sp.wrs.append(atom)
        return name
    if t.head == "const":
        i = _hoist_index(t.args[0], sp, name_shifts=True)
        c = bank.const_array(i)
        name, fresh = sp.ledger.name_for(c, "c")
        atom = ConstAtom(i, name)
        if atom not in sp.consts:
            sp.consts.append(atom)
        return name
    # free ARRAY-valued function application: hoist arguments, name the result
    app = bank.app(t.head, tuple(_hoist_term(a, sp) for a in t.args))
    name, fresh = sp.ledger.name_for(app, "a")
    sp.add_phi2(mk_eq(name, app))
    return name


def _hoist_index(t: Term, sp: SeparatedPair, name_shifts: bool) -> Term:
    bank = sp.bank
    base = t.base
    if not base.args:
        # displaced names and numerals must be named in read/write positions
        # so the instantiation set reaches their positions
        if t.offset and name_shifts:
            name, fresh = sp.ledger.name_for(t, "i")
            if fresh:
                sp.add_phi2(mk_eq(name, t))
            return name
        return t
    if base.head == "len":
        a = _hoist_array(base.args[0], sp)
        l = sp.ensure_length(a)
        out = bank.shift(l, t.offset) if t.offset else l
        return _hoist_index(out, sp, name_shifts) if (t.offset and name_shifts) else out
    if base.head == "diff":
        a = _hoist_array(base.args[0], sp)
        b = _hoist_array(base.args[1], sp)
        k = _name_diff(a, b, sp)
        out = bank.shift(k, t.offset) if t.offset else k
        return _hoist_index(out, sp, name_shifts) if (t.offset and name_shifts) else out
    # free INDEX-valued function application
    app = bank.app(base.head, tuple(_hoist_term(a, sp) for a in base.args))
    name, fresh = sp.ledger.name_for(app, "i")
    if fresh:
        sp.add_phi2(mk_eq(name, app))
    out = bank.shift(name, t.offset) if t.offset else name
    return _hoist_index(out, sp, name_shifts) if (t.offset and name_shifts) else out


def _name_diff(a: Term, b: Term, sp: SeparatedPair) -> Term:
    d = sp.bank.diff(a, b)
    name, fresh = sp.ledger.name_for(d, "d")
    chain = sp.diffs.setdefault((a.id, b.id), [])
    if not any(x.level == 1 for x in chain):
        chain.append(DiffAtom(a, b, 1, name))
        chain.sort(key=lambda x: x.level)
    return name


def diff_chain_complete(sp: SeparatedPair, a: Term, b: Term, upto: int) -> list[DiffAtom]:
    """Extend the (a, b) chain with fresh names up to the requested level."""
    chain = sp.diffs.setdefault((a.id, b.id), [])
    have = {x.level for x in chain}
    for lvl in range(1, upto + 1):
        if lvl in have:
            continue
        term = sp.bank.expand_iterated_diff(a, b, lvl)
        name, _ = sp.ledger.name_for(term, "k")
        chain.append(DiffAtom(a, b, lvl, name))
    chain.sort(key=lambda x: x.level)
    return chain


def zero_instantiate(sp: SeparatedPair, instantiation_set: list[Term]) -> SeparatedPair:
    """Extend phi2 with the I-instances of every phi1 atom's characterization.

    Adding the same instances twice is a no-op, so the operation is
    idempotent for a fixed instantiation set and monotone in it.
    """
    bank = sp.bank
    out = SeparatedPair(sp.ledger)
    out.lens = dict(sp.lens)
    out.wrs = list(sp.wrs)
    out.diffs = {k: list(v) for k, v in sp.diffs.items()}
    out.consts = list(sp.consts)
    for f in sp.phi2:
        out.add_phi2(f)
    I = list(instantiation_set)

    for arr, l in out.lens.items():
        out.add_phi2(mk_le(bank.zero(), l))
        for t in I:
            out.add_phi2(
                iff(
                    neg(mk_eq(bank.rd(arr, t), bank.bot())),
                    conj(mk_le(bank.zero(), t), mk_le(t, l)),
                )
            )

    for w in out.wrs:
        lb = out.lens[w.arr]
        not_bot = neg(mk_eq(w.val, bank.bot()))
        inside = conj(mk_le(bank.zero(), w.idx), mk_le(w.idx, lb))
        out.add_phi2(implies(conj(not_bot, inside), mk_eq(bank.rd(w.lhs, w.idx), w.val)))
        out.add_phi2(
            implies(
                disj(mk_lt(w.idx, bank.zero()), mk_lt(lb, w.idx), mk_eq(w.val, bank.bot())),
                mk_eq(bank.rd(w.lhs, w.idx), bank.rd(w.arr, w.idx)),
            )
        )
        for t in I:
            out.add_phi2(
                implies(neg(mk_eq(t, w.idx)), mk_eq(bank.rd(w.lhs, t), bank.rd(w.arr, t)))
            )

    for (aid, bid), chain in out.diffs.items():
        ks = [d.k for d in sorted(chain, key=lambda x: x.level)]
        a, b = chain[0].a, chain[0].b
        la, lb = out.lens[a], out.lens[b]
        l = len(ks)
        for j in range(l - 1):
            out.add_phi2(mk_le(ks[j + 1], ks[j]))
        out.add_phi2(mk_le(bank.zero(), ks[-1]))
        for j in range(l - 1):
            out.add_phi2(
                implies(
                    mk_lt(ks[j + 1], ks[j]),
                    neg(mk_eq(bank.rd(a, ks[j]), bank.rd(b, ks[j]))),
                )
            )
            out.add_phi2(
                implies(
                    conj(mk_eq(la, lb), mk_eq(ks[j], ks[j + 1])),
                    mk_eq(ks[j], bank.zero()),
                )
            )
        for j in range(l):
            out.add_phi2(
                implies(
                    mk_eq(bank.rd(a, ks[j]), bank.rd(b, ks[j])),
                    mk_eq(ks[j], bank.zero()),
                )
            )
        for t in I:
            out.add_phi2(
                implies(
                    mk_lt(ks[-1], t),
                    disj(
                        mk_eq(bank.rd(a, t), bank.rd(b, t)),
                        *[mk_eq(t, ks[j]) for j in range(l - 1)],
                    ),
                )
            )
        out.add_phi2(implies(mk_lt(lb, la), conj(mk_eq(ks[0], ks[-1]), mk_eq(ks[-1], la))))
        out.add_phi2(implies(mk_lt(la, lb), conj(mk_eq(ks[0], ks[-1]), mk_eq(ks[-1], lb))))

    for c in out.consts:
        la = out.lens[c.arr]
        # the length of a constant array is the max of its parameter and 0
        out.add_phi2(mk_le(c.idx, la))
        out.add_phi2(mk_le(bank.zero(), la))
        out.add_phi2(disj(mk_eq(la, c.idx), mk_eq(la, bank.zero())))
        for t in I:
            out.add_phi2(
                implies(
                    conj(mk_le(bank.zero(), t), mk_le(t, la)),
                    mk_eq(bank.rd(c.arr, t), bank.el()),
                )
            )
    return out


# ---------------------------------------------------------------------------
# Base-problem construction: reads become unary function applications
# ---------------------------------------------------------------------------


def read_fun_name(arr: Term) -> str:
    return f"!rd_{arr.head}"


def to_base_formulas(sp: SeparatedPair) -> list[Formula]:
    """phi2 with rd(a, i) rewritten to a unary application for each array."""
    bank = sp.bank
    for arr in _array_constants_of(sp):
        fname = read_fun_name(arr)
        if not bank.sig.is_declared(fname):
            bank.sig.declare_fun(fname, (Sort.INDEX,), Sort.ELEM)

    def conv_term(t: Term) -> Term:
        if t.head == "rd":
            arr = t.args[0]
            if arr.args:
                raise ValueError(f"unflattened read argument {arr}")
            inner = bank.app(read_fun_name(arr), (conv_term(t.args[1]),))
            return bank.shift(inner, t.offset) if t.offset else inner
        if not t.args:
            return t
        out = bank.app(t.head, tuple(conv_term(a) for a in t.args))
        return bank.shift(out, t.offset) if t.offset else out

    def conv(f: Formula) -> Formula:
        if isinstance(f, (TrueF, FalseF)):
            return f
        if isinstance(f, Eq):
            return mk_eq(conv_term(f.lhs), conv_term(f.rhs))
        if isinstance(f, Le):
            return mk_le(conv_term(f.lhs), conv_term(f.rhs))
        if isinstance(f, PredApp):
            return PredApp(f.name, tuple(conv_term(a) for a in f.args))
        if isinstance(f, Not):
            return neg(conv(f.arg))
        if isinstance(f, And):
            return conj(*(conv(g) for g in f.args))
        if isinstance(f, Or):
            return disj(*(conv(g) for g in f.args))
        raise TypeError(f)

    return [conv(f) for f in sp.phi2]
