"""The decision procedure, the interpolation pipeline, and the verifier.

Deciding satisfiability: flatten the input into a separated pair, extend
phi2 with the bounded instances of every defining atom over all occurring
index names, rewrite reads to unary function applications, and hand the
result to the index+equality base solver.  The pair is satisfiable exactly
when the instantiated phi2 is, so no array reasoning survives past this
point.

When array constants occur under free functions or predicates the identity
of arrays becomes observable, which the reduction alone does not track.  In
CARDC mode the procedure then case-splits every pair of array constants:
either the two are merged (one name replaces the other), or they are
declared distinct and a fresh disagreement witness index is introduced,
with the reads at that witness forced apart.  This completion is an
extension of the core procedure and is refused outside CARDC mode.

Interpolation (CARD, plain: free constants but no free functions or
predicates) runs three steps on a mutually unsatisfiable pair A, B:

1. for every pair of distinct shared array constants, name the first
   1 + max(N_A, N_B) iterated disagreement indices on both sides, where
   N_X counts the side-local index constants used as write positions —
   enough names that the two sides can only disagree at indices one of
   them can already talk about;
2. instantiate each side over its own index constants;
3. interpolate the two instantiated boolean parts in the base language,
   then rewrite fresh shared names back to the terms they abbreviate, in
   reverse introduction order.

Every returned interpolant has passed the three-condition verifier: the
A side entails it, it is inconsistent with the B side, and it mentions
only shared symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .base_solver import (
    BaseSat,
    BaseUnsat,
    base_check,
    external_interpolate,
    tree_interpolate,
)
from .errors import BaseStillSat, NotUnsat, UnsupportedFragment
from .kernel import (
    Formula,
    Sort,
    Term,
    TermBank,
    conj,
    mk_eq,
    neg,
    substitute,
    symbols_of,
)
from .reduction import (
    NamingLedger,
    SeparatedPair,
    diff_chain_complete,
    flatten,
    read_fun_name,
    to_base_formulas,
    zero_instantiate,
)


@dataclass
class VerifyReport:
    a_entails: bool
    inconsistent_with_b: bool
    symbols_shared: bool

    @property
    def ok(self) -> bool:
        return self.a_entails and self.inconsistent_with_b and self.symbols_shared


@dataclass
class Verdict:
    status: str  # "sat" | "unsat"
    model: BaseSat | None = None
    interpolant: Formula | None = None
    report: VerifyReport | None = None
    branches: int = 1


def _array_touching_symbols(phi: Formula, bank: TermBank) -> set[str]:
    out = set()
    for s in symbols_of(phi):
        rank = bank.sig.free_funs.get(s)
        if rank and (Sort.ARRAY in rank[0] or rank[1] is Sort.ARRAY):
            out.add(s)
    return out


def _element_facts(bank: TermBank) -> list[Formula]:
    """The undefined value and the default element are distinct."""
    return [neg(mk_eq(bank.bot(), bank.el()))]


def check_sat(phi: Formula, bank: TermBank, mode: str = "CARD") -> Verdict:
    """Decide a quantifier-free formula.

    `mode` is "CARD" or "CARDC"; constant arrays and the free-array-symbol
    completion require CARDC.
    """
    if mode not in ("CARD", "CARDC"):
        raise ValueError(mode)
    needs_split = bool(_array_touching_symbols(phi, bank))
    if needs_split and mode != "CARDC":
        raise UnsupportedFragment(
            "free symbols over ARRAY require CARDC mode (array identity completion)"
        )
    ledger = NamingLedger(bank)
    sp = flatten(phi, ledger)
    branches = _identity_branches(sp, needs_split)
    count = 0
    for branch in branches:
        count += 1
        inst = zero_instantiate(branch, branch.index_names())
        res = base_check(to_base_formulas(inst) + _element_facts(bank), bank)
        if isinstance(res, BaseSat):
            return Verdict("sat", model=res, branches=count)
    return Verdict("unsat", branches=count)


def _identity_branches(sp: SeparatedPair, split: bool):
    """Case-split array-constant pairs into merged/distinct branches."""
    if not split:
        yield sp
        return

    def go(pair: SeparatedPair, pairs: list[tuple[Term, Term]]):
        if not pairs:
            yield pair
            return
        (a, b), rest = pairs[0], pairs[1:]
        merged = _merge_arrays(pair, a, b)
        yield from go(merged, [(x, y) for x, y in rest if y is not b and x is not b])
        distinct = _copy_pair(pair)
        chain = diff_chain_complete(distinct, a, b, 1)
        k = chain[0].k
        bank = distinct.bank
        distinct.add_phi2(neg(mk_eq(bank.rd(a, k), bank.rd(b, k))))
        yield from go(distinct, rest)

    arrays = sp.array_constants()
    pairs = [(arrays[i], arrays[j]) for i in range(len(arrays)) for j in range(i + 1, len(arrays))]
    yield from go(sp, pairs)


def _copy_pair(sp: SeparatedPair) -> SeparatedPair:
    out = SeparatedPair(sp.ledger)
    out.lens = dict(sp.lens)
    out.wrs = list(sp.wrs)
    out.diffs = {k: list(v) for k, v in sp.diffs.items()}
    out.consts = list(sp.consts)
    for f in sp.phi2:
        out.add_phi2(f)
    return out


def _merge_arrays(sp: SeparatedPair, keep: Term, drop: Term) -> SeparatedPair:
    """The branch where two array constants denote the same array."""
    from .reduction import ConstAtom, DiffAtom, WrAtom

    bank = sp.bank
    mapping = {drop.head: keep}

    def sub(t: Term) -> Term:
        return bank.substitute_term(t, mapping)

    out = SeparatedPair(sp.ledger)
    for arr, l in sp.lens.items():
        arr2 = sub(arr)
        if arr2 in out.lens and out.lens[arr2] is not l:
            out.add_phi2(mk_eq(out.lens[arr2], l))
        else:
            out.lens[arr2] = l
    out.wrs = [WrAtom(sub(w.lhs), sub(w.arr), w.idx, sub(w.val)) for w in sp.wrs]
    for chain in sp.diffs.values():
        for d in chain:
            a2, b2 = sub(d.a), sub(d.b)
            lst = out.diffs.setdefault((a2.id, b2.id), [])
            if not any(x.level == d.level for x in lst):
                lst.append(DiffAtom(a2, b2, d.level, d.k))
                lst.sort(key=lambda x: x.level)
    out.consts = [ConstAtom(c.idx, sub(c.arr)) for c in sp.consts]
    for f in sp.phi2:
        out.add_phi2(substitute(f, mapping, bank))
    return out


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def count_wr_index_constants(sp: SeparatedPair) -> int:
    """Distinct index constants used as write positions in the flattened side."""
    return len({w.idx.base.head for w in sp.wrs})


@dataclass
class InterpolationSession:
    bank: TermBank
    coloring: dict[str, str]
    ledger: NamingLedger
    sp_a: SeparatedPair
    sp_b: SeparatedPair
    n_a: int = 0
    n_b: int = 0
    n_levels: int = 1
    common_pairs: list[tuple[Term, Term]] = field(default_factory=list)


def _occurrence_coloring(a0: Formula, b0: Formula) -> dict[str, str]:
    a_syms, b_syms = symbols_of(a0), symbols_of(b0)
    tags = {}
    for s in a_syms | b_syms:
        tags[s] = "common" if (s in a_syms and s in b_syms) else ("A" if s in a_syms else "B")
    return tags


def _sync_common_definitions(session: InterpolationSession) -> None:
    """Shared-term definitions belong to both sides, like shared lengths."""
    from .reduction import ConstAtom, DiffAtom, WrAtom

    coloring = session.coloring
    for name, term in list(session.ledger.defs):
        if coloring.get(name.head) != "common":
            continue
        for sp in (session.sp_a, session.sp_b):
            if term.head == "len":
                sp.lens.setdefault(term.args[0], name)
            elif term.head == "wr":
                atom = WrAtom(name, term.args[0], term.args[1], term.args[2])
                if atom not in sp.wrs:
                    sp.wrs.append(atom)
            elif term.head == "diff":
                chain = sp.diffs.setdefault((term.args[0].id, term.args[1].id), [])
                if not any(x.level == 1 for x in chain):
                    chain.append(DiffAtom(term.args[0], term.args[1], 1, name))
                    chain.sort(key=lambda x: x.level)
            elif term.head == "const":
                atom = ConstAtom(term.args[0], name)
                if atom not in sp.consts:
                    sp.consts.append(atom)
    for sp in (session.sp_a, session.sp_b):
        from .reduction import _array_constants_of

        for arr in _array_constants_of(sp):
            sp.ensure_length(arr)


def prepare_session(a0: Formula, b0: Formula, bank: TermBank) -> InterpolationSession:
    """Flatten both sides with shared naming and run the naming step."""
    coloring = _occurrence_coloring(a0, b0)
    ledger = NamingLedger(bank, coloring)
    sp_a = flatten(a0, ledger)
    sp_b = flatten(b0, ledger)
    session = InterpolationSession(bank, coloring, ledger, sp_a, sp_b)
    _sync_common_definitions(session)
    session.n_a = count_wr_index_constants(sp_a)
    session.n_b = count_wr_index_constants(sp_b)
    session.n_levels = 1 + max(session.n_a, session.n_b)

    commons = sorted(
        (a for a in set(sp_a.array_constants()) & set(sp_b.array_constants())
         if coloring.get(a.head) == "common"),
        key=lambda t: t.head,
    )
    for i in range(len(commons)):
        for j in range(i + 1, len(commons)):
            c1, c2 = commons[i], commons[j]
            session.common_pairs.append((c1, c2))
            diff_chain_complete(sp_a, c1, c2, session.n_levels)
            diff_chain_complete(sp_b, c1, c2, session.n_levels)
    return session


def _base_tags(session: InterpolationSession) -> dict[str, str]:
    tags = dict(session.coloring)
    for sp in (session.sp_a, session.sp_b):
        for arr in sp.array_constants():
            tags[read_fun_name(arr)] = tags.get(arr.head, "common")
    return tags


def _back_substitute(theta: Formula, session: InterpolationSession) -> Formula:
    bank = session.bank

    # reads first: !rd_a(t) becomes rd(a, t)
    from .kernel import And, Eq, FalseF, Le, Not, Or, PredApp, TrueF, disj, implies, mk_le

    rev_reads = {}
    for sp in (session.sp_a, session.sp_b):
        for arr in sp.array_constants():
            rev_reads[read_fun_name(arr)] = arr

    def conv_term(t: Term) -> Term:
        if t.head in rev_reads:
            inner = bank.rd(rev_reads[t.head], conv_term(t.args[0]))
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

    out = conv(theta)
    for name, term in session.ledger.back_substitution():
        out = substitute(out, {name.head: term}, bank)
    return out


def interpolate(a0: Formula, b0: Formula, bank: TermBank,
                backend: str = "internal",
                adapter_cmd: list[str] | None = None,
                adapter_timeout: float = 30.0) -> Verdict:
    """Verified interpolant for a mutually unsatisfiable CARD pair.

    Plain interpolation only: free constants are fine, free functions,
    predicates and constant arrays are outside this algorithm's fragment.
    """
    for phi in (a0, b0):
        if _array_touching_symbols(phi, bank):
            raise UnsupportedFragment("free symbols over ARRAY are not supported here")
        for s in symbols_of(phi):
            if s in bank.sig.free_funs:
                raise UnsupportedFragment(
                    "free functions/predicates need the general variant, which is open"
                )
        from .kernel import subterms

        if any(t.head == "const" for t in subterms(phi)):
            raise UnsupportedFragment("constant arrays: interpolation in CARDC is open")

    if check_sat(conj(a0, b0), bank, "CARD").status != "unsat":
        raise NotUnsat("interpolation requires a mutually unsatisfiable pair")

    session = prepare_session(a0, b0, bank)
    sp_a = zero_instantiate(session.sp_a, session.sp_a.index_names())
    sp_b = zero_instantiate(session.sp_b, session.sp_b.index_names())
    # the element-sort fact is theory knowledge, hence fine on both sides
    base_a = to_base_formulas(sp_a) + _element_facts(bank)
    base_b = to_base_formulas(sp_b) + _element_facts(bank)
    if isinstance(base_check(base_a + base_b, bank), BaseSat):
        raise BaseStillSat(
            "reduced pair is satisfiable although the inputs are not; this is a bug"
        )
    tags = _base_tags(session)
    if backend == "external":
        theta_base = external_interpolate(
            base_a, base_b, bank, adapter_cmd or [], timeout=adapter_timeout, tags=tags
        )
    else:
        theta_base = tree_interpolate(base_a, base_b, bank, tags)
    theta = _back_substitute(theta_base, session)
    report = verify(a0, b0, theta, bank, "CARD")
    if not report.ok:
        raise BaseStillSat("computed interpolant failed verification; this is a bug")
    return Verdict("unsat", interpolant=theta, report=report)


def verify(a0: Formula, b0: Formula, candidate: Formula, bank: TermBank,
           mode: str = "CARD", extra_common: set[str] | None = None) -> VerifyReport:
    """The three interpolant conditions, each checked through check_sat."""
    shared = (symbols_of(a0) & symbols_of(b0)) | (extra_common or set())
    symbols_ok = symbols_of(candidate) <= shared
    a_entails = check_sat(conj(a0, neg(candidate)), bank, mode).status == "unsat"
    inconsistent = check_sat(conj(candidate, b0), bank, mode).status == "unsat"
    return VerifyReport(a_entails, inconsistent, symbols_ok)
