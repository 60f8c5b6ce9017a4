"""Satisfiability and interpolation for the index+equality base language.

A base problem is a boolean combination of index atoms (order/equality over
INDEX terms) and equality-logic atoms (reads rewritten to unary function
applications, element equalities, encoded predicates).  There are no array
operations left at this level.

Deciding a base problem:

* boolean structure is handled by lazy DNF expansion: a backtracking
  enumerator walks the NNF formula set, accumulating a cube of literals and
  pruning any branch whose partial cube is already refuted by one of the
  component theories;
* each full cube goes through a Nelson-Oppen style combination loop: the
  index solver and the congruence closure each veto or accept, entailed
  equalities between shared INDEX terms are exchanged, and because the
  integer index theory is not convex, undetermined shared pairs are split
  on demand.  A cube is satisfiable exactly when both theories accept the
  same arrangement of the shared terms.

Interpolation distributes over the DNF (disjunction over A-cubes of the
conjunction over B-cubes of the per-cube interpolant) and computes per-cube
interpolants by recursive case analysis: single-theory refutations defer to
the component interpolators, and otherwise the procedure branches on an
undecided shared equality, combining branch interpolants with or / and /
guarded composition depending on which side owns the split atom.  A split
over a pair spanning both strict vocabularies is rerouted through a shared
witness term; if no witness exists within the search bound the failure is
reported, never papered over.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass, field

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

from .errors import (
    AdapterFailure,
    BaseStillSat,
    MixedLiteral,
    NoSeparatingTerm,
    NotUnsat,
    UnverifiedInterpolant,
)
from .euf import EufSat, EufUnsat, euf_check_conj, euf_interpolate_conj
from .index_theory import TiSat, TiUnsat, ti_check_conj, ti_interpolate_conj
from .kernel import (
    FALSE,
    TRUE,
    And,
    Eq,
    FalseF,
    Formula,
    Le,
    Not,
    Or,
    PredApp,
    Sort,
    Term,
    TermBank,
    TrueF,
    conj,
    disj,
    implies,
    mk_eq,
    neg,
    symbols_of,
)

ARRAY_OPS = ("wr", "diff", "len", "const")


@dataclass
class BaseProblem:
    """Formulas over the index+equality language plus a symbol coloring."""

    formulas: list[Formula]
    tags: dict[str, str] | None = None  # name -> "A" | "B" | "common"


@dataclass
class Arrangement:
    """Equivalence-plus-order over shared INDEX terms, equivalence over ELEM."""

    index_groups: list[list[Term]]  # ordered by assigned value
    elem_classes: list[list[Term]]


@dataclass
class BaseSat:
    assignment: dict[Term, int]
    classes: list[list[Term]]
    arrangement: Arrangement
    cube: list[Formula] = field(default_factory=list)


@dataclass
class BaseUnsat:
    pass


def check_base_shape(formulas: list[Formula]) -> None:
    """Assert the no-array-operations invariant of base problems."""
    from .kernel import subterms

    for phi in formulas:
        for t in subterms(phi):
            if t.head in ARRAY_OPS:
                raise ValueError(f"array operation {t.head} in base problem: {t}")

    def no_array_eq(f: Formula) -> None:
        if isinstance(f, Eq) and f.lhs.sort is Sort.ARRAY:
            raise ValueError(f"ARRAY equality in base problem: {f}")
        if isinstance(f, Not):
            no_array_eq(f.arg)
        elif isinstance(f, (And, Or)):
            for g in f.args:
                no_array_eq(g)

    for phi in formulas:
        no_array_eq(phi)


# ---------------------------------------------------------------------------
# Literal bookkeeping
# ---------------------------------------------------------------------------


def _is_index_lit(lit: Formula) -> bool:
    inner = lit.arg if isinstance(lit, Not) else lit
    if isinstance(inner, Le):
        return True
    return isinstance(inner, Eq) and inner.lhs.sort is Sort.INDEX


def _split_cube(cube: list[Formula]) -> tuple[list[Formula], list[Formula]]:
    """(index literals, equality-logic literals); INDEX equalities go to both."""
    ti: list[Formula] = []
    euf: list[Formula] = []
    for lit in cube:
        inner = lit.arg if isinstance(lit, Not) else lit
        if isinstance(inner, Le):
            ti.append(lit)
        elif isinstance(inner, Eq) and inner.lhs.sort is Sort.INDEX:
            ti.append(lit)
            euf.append(lit)
        else:
            euf.append(lit)
    return ti, euf


def _shared_index_terms(cube: list[Formula], bank: TermBank) -> list[Term]:
    """INDEX terms visible to both theories: equality operands and EUF arguments."""
    out: dict[int, Term] = {}

    def note(t: Term) -> None:
        if t.sort is Sort.INDEX:
            out.setdefault(t.id, t)

    def walk(t: Term) -> None:
        for a in t.args:
            note(a)
            walk(a)

    for lit in cube:
        inner = lit.arg if isinstance(lit, Not) else lit
        if isinstance(inner, Eq):
            if inner.lhs.sort is Sort.INDEX:
                note(inner.lhs)
                note(inner.rhs)
            walk(inner.lhs)
            walk(inner.rhs)
        elif isinstance(inner, Le):
            walk(inner.lhs)
            walk(inner.rhs)
        elif isinstance(inner, PredApp):
            for a in inner.args:
                note(a)
                walk(a)
    return list(out.values())


def _all_index_terms(cube: list[Formula]) -> list[Term]:
    """Every INDEX-sorted term occurring anywhere in the cube."""
    out: dict[int, Term] = {}

    def walk(t: Term) -> None:
        if t.sort is Sort.INDEX:
            out.setdefault(t.id, t)
        for a in t.args:
            walk(a)
        if t.offset:
            walk(t.base)

    for lit in cube:
        inner = lit.arg if isinstance(lit, Not) else lit
        if isinstance(inner, (Eq, Le)):
            walk(inner.lhs)
            walk(inner.rhs)
        elif isinstance(inner, PredApp):
            for a in inner.args:
                walk(a)
    return list(out.values())


def _decided(cube: list[Formula]) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    eqs: set[tuple[int, int]] = set()
    neqs: set[tuple[int, int]] = set()
    for lit in cube:
        inner = lit.arg if isinstance(lit, Not) else lit
        if isinstance(inner, Eq) and inner.lhs.sort is Sort.INDEX:
            key = (min(inner.lhs.id, inner.rhs.id), max(inner.lhs.id, inner.rhs.id))
            (neqs if isinstance(lit, Not) else eqs).add(key)
    return eqs, neqs


def _pair_key(s: Term, t: Term) -> tuple[int, int]:
    return (min(s.id, t.id), max(s.id, t.id))


# ---------------------------------------------------------------------------
# Combined cube check (Nelson-Oppen with splitting on demand)
# ---------------------------------------------------------------------------


def combined_check(cube: list[Formula], bank: TermBank) -> BaseSat | BaseUnsat:
    """Decide a conjunction of base literals."""
    return _combined(list(cube), bank, 0)


def _combined(cube: list[Formula], bank: TermBank, depth: int) -> BaseSat | BaseUnsat:
    if depth > 120:
        raise RecursionError("combination split depth exceeded")
    while True:
        ti_lits, euf_lits = _split_cube(cube)
        r_ti = ti_check_conj(ti_lits, bank)
        if isinstance(r_ti, TiUnsat):
            return BaseUnsat()
        r_euf = euf_check_conj(euf_lits, bank)
        if isinstance(r_euf, EufUnsat):
            return BaseUnsat()

        shared = _shared_index_terms(cube, bank)
        eqs, neqs = _decided(cube)

        # propagate equalities one side has derived and the other cannot see
        rep: dict[int, Term] = {}
        for cls in r_euf.classes:
            for t in cls:
                rep[t.id] = cls[0]
        new: list[Formula] = []
        for i in range(len(shared)):
            for j in range(i + 1, len(shared)):
                s, t = shared[i], shared[j]
                key = _pair_key(s, t)
                if key in eqs or key in neqs:
                    continue
                if rep.get(s.id) is not None and rep.get(s.id) is rep.get(t.id):
                    new.append(mk_eq(s, t))
                elif _value(r_ti, s) == _value(r_ti, t):
                    # model-equal: check genuine entailment before propagating
                    if isinstance(ti_check_conj(ti_lits + [neg(mk_eq(s, t))], bank), TiUnsat):
                        new.append(mk_eq(s, t))
        if new:
            cube = cube + new
            continue

        undecided = [
            neg(mk_eq(shared[i], shared[j]))
            for i in range(len(shared))
            for j in range(i + 1, len(shared))
            if _pair_key(shared[i], shared[j]) not in eqs
            and _pair_key(shared[i], shared[j]) not in neqs
        ]
        r_ti_d = ti_check_conj(ti_lits + undecided, bank)
        r_euf_d = (
            euf_check_conj(euf_lits + undecided, bank)
            if not isinstance(r_ti_d, TiUnsat)
            else None
        )
        if isinstance(r_ti_d, TiSat) and isinstance(r_euf_d, EufSat):
            groups: dict[int, list[Term]] = {}
            for t in shared:
                groups.setdefault(_value(r_ti_d, t), []).append(t)
            elem_classes = [[t for t in cls if t.sort is Sort.ELEM] for cls in r_euf_d.classes]
            arrangement = Arrangement(
                [groups[v] for v in sorted(groups)],
                [c for c in elem_classes if c],
            )
            return BaseSat(dict(r_ti_d.assignment), r_euf_d.classes, arrangement, list(cube))

        failing_core = r_ti_d.core if isinstance(r_ti_d, TiUnsat) else r_euf_d.core  # type: ignore[union-attr]
        culprit = next((lit for lit in failing_core if lit in undecided), None)
        if culprit is None:
            # the refutation used only real literals: genuinely unsat
            return BaseUnsat()
        inner = culprit.arg  # type: ignore[union-attr]
        eq = mk_eq(inner.lhs, inner.rhs)
        left = _combined(cube + [eq], bank, depth + 1)
        if isinstance(left, BaseSat):
            return left
        cube = cube + [culprit]


def _value(r: TiSat, t: Term) -> int:
    if t.base not in r.assignment:
        r.assignment[t.base] = 0
    return r.value(t)


def _cross_theory_core(
    cube_lits: list[Formula], bank: TermBank, deep: bool = True
) -> list[Formula] | None:
    """Per-theory screening plus one round of entailed-equality exchange.

    Returns a core of input literals if the cube is refuted, else None.
    A refutation that leans on an equality derived by the other theory is
    mapped back through that theory's explanation so callers can attribute
    the conflict to real cube literals.  The index-to-closure direction
    needs one entailment query per model-equal pair, so callers can switch
    it off (`deep=False`) on hot paths.
    """
    from .euf import _close

    ti_lits, euf_lits = _split_cube(cube_lits)
    r_ti = ti_check_conj(ti_lits, bank)
    if isinstance(r_ti, TiUnsat):
        return r_ti.core
    r_euf = euf_check_conj(euf_lits, bank)
    if isinstance(r_euf, EufUnsat):
        return r_euf.core

    shared = _shared_index_terms(cube_lits, bank)
    eqs, neqs = _decided(cube_lits)

    # equalities the closure knows and the index side does not
    rep: dict[int, Term] = {}
    for cls in r_euf.classes:
        for t in cls:
            rep[t.id] = cls[0]
    euf_derived: list[tuple[Formula, tuple[Term, Term]]] = []
    ti_derived: list[tuple[Formula, tuple[Term, Term]]] = []
    for i in range(len(shared)):
        for j in range(i + 1, len(shared)):
            s, t = shared[i], shared[j]
            if _pair_key(s, t) in eqs or _pair_key(s, t) in neqs:
                continue
            if rep.get(s.id) is not None and rep.get(s.id) is rep.get(t.id):
                euf_derived.append((mk_eq(s, t), (s, t)))
            elif deep and _value(r_ti, s) == _value(r_ti, t):
                if isinstance(ti_check_conj(ti_lits + [neg(mk_eq(s, t))], bank), TiUnsat):
                    ti_derived.append((mk_eq(s, t), (s, t)))
    if euf_derived:
        r = ti_check_conj(ti_lits + [e for e, _ in euf_derived], bank)
        if isinstance(r, TiUnsat):
            from .euf import _step_literals

            cc, _ = _close(euf_lits, bank)
            out = []
            for lit in r.core:
                pair = next((p for e, p in euf_derived if e == lit), None)
                if pair is None:
                    out.append(lit)
                else:
                    out.extend(_step_literals(cc, cc.explain(pair[0], pair[1])))
            return list(dict.fromkeys(out))
    if ti_derived:
        r2 = euf_check_conj(euf_lits + [e for e, _ in ti_derived], bank)
        if isinstance(r2, EufUnsat):
            out = []
            for lit in r2.core:
                pair = next((p for e, p in ti_derived if e == lit), None)
                if pair is None:
                    out.append(lit)
                else:
                    sub = ti_check_conj(ti_lits + [neg(mk_eq(pair[0], pair[1]))], bank)
                    if isinstance(sub, TiUnsat):
                        out.extend(l for l in sub.core)
            return list(dict.fromkeys(out))
    return None


# ---------------------------------------------------------------------------
# Lazy DNF enumeration
# ---------------------------------------------------------------------------


def _nnf(f: Formula, sign: bool = True) -> Formula:
    if isinstance(f, Not):
        return _nnf(f.arg, not sign)
    if isinstance(f, And):
        parts = tuple(_nnf(g, sign) for g in f.args)
        return And(parts) if sign else Or(parts)
    if isinstance(f, Or):
        parts = tuple(_nnf(g, sign) for g in f.args)
        return Or(parts) if sign else And(parts)
    if isinstance(f, TrueF):
        return TRUE if sign else FALSE
    if isinstance(f, FalseF):
        return FALSE if sign else TRUE
    return f if sign else Not(f)


def _is_literal(f: Formula) -> bool:
    return not isinstance(f, (And, Or, TrueF, FalseF))


class _Node:
    """Compiled NNF node for the cube enumerator."""

    __slots__ = ("kind", "atom", "pol", "children", "atoms")

    def __init__(self, kind, atom=None, pol=True, children=(), atoms=frozenset()):
        self.kind = kind  # "lit" | "and" | "or" | "true" | "false"
        self.atom = atom
        self.pol = pol
        self.children = children
        self.atoms = atoms


_TRUE_NODE = _Node("true")
_FALSE_NODE = _Node("false")


def _compile_nnf(f: Formula) -> _Node:
    if isinstance(f, TrueF):
        return _TRUE_NODE
    if isinstance(f, FalseF):
        return _FALSE_NODE
    if isinstance(f, Not) and _is_literal(f.arg):
        return _Node("lit", f.arg, False, atoms=frozenset((f.arg,)))
    if _is_literal(f):
        return _Node("lit", f, True, atoms=frozenset((f,)))
    kids = tuple(_compile_nnf(g) for g in f.args)  # type: ignore[union-attr]
    atoms = frozenset().union(*(k.atoms for k in kids))
    return _Node("and" if isinstance(f, And) else "or", children=kids, atoms=atoms)


def enum_consistent_cubes(formulas: list[Formula], bank: TermBank):
    """Yield theory-screened cubes whose disjunction covers the conjunction.

    Backtracking expansion with unit propagation: after every decision the
    remaining formulas are simplified against the cube, forced disjuncts
    are asserted without branching, and the partial cube is screened with
    the per-theory checks.  Callers needing a definitive verdict must still
    run combined_check on each produced cube.
    """
    pending0 = [_compile_nnf(_nnf(f)) for f in formulas]

    def simplify(n: _Node, cube: dict[Formula, bool]) -> _Node:
        if n.kind in ("true", "false"):
            return n
        if not (n.atoms & cube.keys()):
            return n
        if n.kind == "lit":
            have = cube[n.atom]
            return _TRUE_NODE if have == n.pol else _FALSE_NODE
        out = []
        if n.kind == "and":
            for k in n.children:
                s = simplify(k, cube)
                if s.kind == "false":
                    return _FALSE_NODE
                if s.kind == "and":
                    out.extend(s.children)
                elif s.kind != "true":
                    out.append(s)
            if not out:
                return _TRUE_NODE
            if len(out) == 1:
                return out[0]
            return _Node("and", children=tuple(out),
                         atoms=frozenset().union(*(k.atoms for k in out)))
        for k in n.children:
            s = simplify(k, cube)
            if s.kind == "true":
                return _TRUE_NODE
            if s.kind == "or":
                out.extend(s.children)
            elif s.kind != "false":
                out.append(s)
        if not out:
            return _FALSE_NODE
        if len(out) == 1:
            return out[0]
        return _Node("or", children=tuple(out),
                     atoms=frozenset().union(*(k.atoms for k in out)))

    # minimized conflict cores seen so far; a cube containing one is dead
    # on arrival, which stops re-deriving the same refutation in sibling
    # subtrees (memoized pruning, not clause learning)
    seen_cores: dict[frozenset, None] = {}

    def conflict_core(cube_lits: list[Formula], deep: bool) -> list[Formula] | None:
        cube_set = set(cube_lits)
        for core in seen_cores:
            if core <= cube_set:
                return list(core)
        ti_lits, euf_lits = _split_cube(cube_lits)
        r_ti = ti_check_conj(ti_lits, bank)
        core = None
        if isinstance(r_ti, TiUnsat):
            core = r_ti.core
        else:
            r_euf = euf_check_conj(euf_lits, bank)
            if isinstance(r_euf, EufUnsat):
                core = r_euf.core
        if core is not None:
            if len(seen_cores) >= 3000:
                seen_cores.clear()
            seen_cores[frozenset(core)] = None
        return core

    def as_literal(atom: Formula, pol: bool) -> Formula:
        return atom if pol else Not(atom)

    def guide(cube_lits: list[Formula]):
        """Current per-theory models, for ordering branch children."""
        ti_lits, euf_lits = _split_cube(cube_lits)
        r_ti = ti_check_conj(ti_lits, bank)
        r_euf = euf_check_conj(euf_lits, bank)
        model = r_ti.assignment if isinstance(r_ti, TiSat) else {}
        rep: dict[int, int] = {}
        if isinstance(r_euf, EufSat):
            for cls in r_euf.classes:
                for t in cls:
                    rep[t.id] = cls[0].id
        return model, rep

    def atom_truth(atom: Formula, model: dict[Term, int], rep: dict[int, int]) -> bool | None:
        def tval(t: Term):
            v = model.get(t.base)
            return None if v is None else v + t.offset

        if isinstance(atom, Le):
            lv, rv = tval(atom.lhs), tval(atom.rhs)
            if lv is not None and rv is not None:
                return lv <= rv
        elif isinstance(atom, Eq) and atom.lhs.sort is Sort.INDEX:
            lv, rv = tval(atom.lhs), tval(atom.rhs)
            if lv is not None and rv is not None:
                return lv == rv
        elif isinstance(atom, Eq):
            lr, rr = rep.get(atom.lhs.id), rep.get(atom.rhs.id)
            if lr is not None and lr == rr:
                return True
        return None

    # conflict-directed backjumping: after a theory conflict the refuting
    # core names the deepest decision that matters, and sibling choices at
    # deeper levels cannot repair it, so they are skipped wholesale
    jump: list[int | None] = [None]

    def go(pending: list[_Node], cube: dict[Formula, bool],
           cube_lits: list[Formula], lit_level: dict[Formula, int], level: int):
        # propagate to fixpoint, re-simplifying only disjunctions that
        # mention freshly decided atoms
        grew = False
        fresh: set[Formula] | None = None  # None = everything is fresh
        while True:
            nxt: list[_Node] = []
            new_atoms: set[Formula] = set()
            i = 0
            work = list(pending)
            while i < len(work):
                n = work[i]
                i += 1
                if n.kind == "true":
                    continue
                if n.kind == "false":
                    jump[0] = level
                    return
                if n.kind == "and":
                    work.extend(n.children)
                    continue
                if n.kind == "lit":
                    have = cube.get(n.atom)
                    if have is not None:
                        if have != n.pol:
                            jump[0] = level
                            return
                        continue
                    cube[n.atom] = n.pol
                    lit = as_literal(n.atom, n.pol)
                    cube_lits.append(lit)
                    lit_level[lit] = level
                    new_atoms.add(n.atom)
                    grew = True
                    continue
                # disjunction
                if fresh is not None and not new_atoms and not (n.atoms & fresh):
                    nxt.append(n)
                    continue
                s = simplify(n, cube)
                if s.kind == "false":
                    jump[0] = level
                    return
                if s.kind in ("true", "and", "lit"):
                    work.append(s)
                    continue
                nxt.append(s)
            pending = nxt
            fresh = new_atoms
            if not new_atoms:
                break
        if grew:
            core = conflict_core(cube_lits, deep=(level % 3 == 0))
            if core is not None:
                jump[0] = max((lit_level.get(l, 0) for l in core), default=0)
                return
        if not pending:
            yield list(cube_lits)
            return
        # two-way semantic split on an undecided atom of the smallest
        # pending clause (the most propagation-prone spot), preferring the
        # atom that occurs most often overall; the polarity the current
        # per-theory models suggest is tried first
        counts: dict[Formula, int] = {}
        for n in pending:
            for a in n.atoms:
                if a not in cube:
                    counts[a] = counts.get(a, 0) + 1
        smallest = min(pending, key=lambda n: len(n.children))
        cands = [a for a in smallest.atoms if a not in cube]
        atom = max(cands, key=lambda a: counts.get(a, 0))
        model, rep = guide(cube_lits)
        suggested = atom_truth(atom, model, rep)
        polarities = (True, False) if suggested in (True, None) else (False, True)
        mark = len(cube_lits)
        for pol in polarities:
            choice = _Node("lit", atom, pol, atoms=frozenset((atom,)))
            saved = dict(cube)
            saved_levels = dict(lit_level)
            yield from go(pending + [choice], cube, cube_lits, lit_level, level + 1)
            del cube_lits[mark:]
            cube.clear()
            cube.update(saved)
            lit_level.clear()
            lit_level.update(saved_levels)
            if jump[0] is not None:
                if jump[0] >= level + 1:
                    jump[0] = None  # our decision was involved; try a sibling
                else:
                    return  # conflict is independent of everything below `jump`

    yield from go(pending0, {}, [], {}, 0)
    jump[0] = None


def base_check(problem: BaseProblem | list[Formula], bank: TermBank) -> BaseSat | BaseUnsat:
    """Sound and complete satisfiability for base problems."""
    formulas = problem.formulas if isinstance(problem, BaseProblem) else problem
    for cube in enum_consistent_cubes(formulas, bank):
        res = combined_check(cube, bank)
        if isinstance(res, BaseSat):
            return res
    return BaseUnsat()


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def _occurrence_tags(a_forms: list[Formula], b_forms: list[Formula]) -> dict[str, str]:
    a_syms = set().union(*(symbols_of(f) for f in a_forms)) if a_forms else set()
    b_syms = set().union(*(symbols_of(f) for f in b_forms)) if b_forms else set()
    out = {}
    for s in a_syms | b_syms:
        out[s] = "common" if (s in a_syms and s in b_syms) else ("A" if s in a_syms else "B")
    return out


def _formula_side(f: Formula, tags: dict[str, str]) -> str:
    """"A", "B", "common", or "mixed" by the strict symbols f mentions."""
    has_a = has_b = False
    for s in symbols_of(f):
        tag = tags.get(s, "common")
        has_a |= tag == "A"
        has_b |= tag == "B"
    if has_a and has_b:
        return "mixed"
    if has_a:
        return "A"
    if has_b:
        return "B"
    return "common"


class _CubeInterpolator:
    """Recursive case analysis for one jointly unsatisfiable cube pair."""

    def __init__(self, bank: TermBank, tags: dict[str, str], offset_bound: int = 0):
        self.bank = bank
        self.tags = tags
        self.offset_bound = offset_bound
        self.steps = 0
        self.cache: dict[tuple[frozenset, frozenset], Formula] = {}

    def interpolate_pair(self, a: list[Formula], b: list[Formula]) -> Formula:
        """Entry point with a fresh step budget and memoized results."""
        key = (frozenset(a), frozenset(b))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        self.steps = 0
        theta = self.interpolate(a, b)
        if len(self.cache) > 10_000:
            self.cache.clear()
        self.cache[key] = theta
        return theta

    def interpolate(self, a: list[Formula], b: list[Formula]) -> Formula:
        self.steps += 1
        if self.steps > 3000:
            raise NoSeparatingTerm("cube interpolation budget exceeded")
        if isinstance(combined_check(a, self.bank), BaseUnsat):
            return FALSE
        if isinstance(combined_check(b, self.bank), BaseUnsat):
            return TRUE
        ti_a, euf_a = _split_cube(a)
        ti_b, euf_b = _split_cube(b)
        if isinstance(ti_check_conj(ti_a + ti_b, self.bank), TiUnsat):
            return ti_interpolate_conj(ti_a, ti_b, self.bank)
        if isinstance(euf_check_conj(euf_a + euf_b, self.bank), EufUnsat):
            try:
                return euf_interpolate_conj(euf_a, euf_b, self.bank, self.tags)
            except MixedLiteral:
                anchored = self._anchor_split(a, b)
                if anchored is not None:
                    return anchored
                raise NoSeparatingTerm(
                    "no shared witness term for a mixed equality step"
                )
        split = self._find_split(a, b)
        if split is None:
            raise NotUnsat("cube pair is satisfiable")
        return self._branch(a, b, split)

    # -- branching --------------------------------------------------------

    def _branch(self, a: list[Formula], b: list[Formula], eq: Formula) -> Formula:
        side = _formula_side(eq, self.tags)
        if side == "mixed":
            anchored = self._anchor_split(a, b)
            if anchored is not None:
                return anchored
            raise NoSeparatingTerm(f"cannot split on mixed equality {eq}")
        if side == "A":
            t1 = self.interpolate(a + [eq], b)
            t2 = self.interpolate(a + [neg(eq)], b)
            return disj(t1, t2)
        if side == "B":
            t1 = self.interpolate(a, b + [eq])
            t2 = self.interpolate(a, b + [neg(eq)])
            return conj(t1, t2)
        t1 = self.interpolate(a + [eq], b + [eq])
        t2 = self.interpolate(a + [neg(eq)], b + [neg(eq)])
        return conj(implies(eq, t1), implies(neg(eq), t2))

    def _find_split(self, a: list[Formula], b: list[Formula]) -> Formula | None:
        cube = a + b
        ti_lits, euf_lits = _split_cube(cube)
        shared = _shared_index_terms(cube, self.bank)
        eqs, neqs = _decided(cube)
        undecided = [
            mk_eq(shared[i], shared[j])
            for i in range(len(shared))
            for j in range(i + 1, len(shared))
            if _pair_key(shared[i], shared[j]) not in eqs
            and _pair_key(shared[i], shared[j]) not in neqs
        ]
        d_lits = [neg(e) for e in undecided]
        r_ti = ti_check_conj(ti_lits + d_lits, self.bank)
        if isinstance(r_ti, TiUnsat):
            for lit in r_ti.core:
                if lit in d_lits:
                    return lit.arg  # type: ignore[union-attr]
        r_euf = euf_check_conj(euf_lits + d_lits, self.bank)
        if isinstance(r_euf, EufUnsat):
            for lit in r_euf.core:
                if lit in d_lits:
                    return lit.arg  # type: ignore[union-attr]
        return None

    # -- shared-term anchoring for mixed pairs ------------------------------

    def _anchor_split(self, a: list[Formula], b: list[Formula]) -> Formula | None:
        """Branch on strict-term = shared-term, guided by the joint index model."""
        cube = a + b
        ti_lits, _ = _split_cube(cube)
        r = ti_check_conj(ti_lits, self.bank)
        if not isinstance(r, TiSat):
            return None
        shared_terms = _shared_index_terms(cube, self.bank)
        eqs, neqs = _decided(cube)
        commons = [
            t for t in _all_index_terms(cube)
            if _formula_side(mk_eq(t, t), self.tags) == "common"
        ]
        # the candidate spread is pinned at construction time so that anchor
        # terms injected by earlier splits cannot widen the search themselves
        spread = self.offset_bound if self.bank.sig.has_shifts else 0
        candidates: list[Term] = []
        seen: set[int] = set()
        for off in sorted(range(-spread, spread + 1), key=abs):
            for c in commons:
                t = self.bank.shift(c, off) if off else c
                if t.id not in seen:
                    seen.add(t.id)
                    candidates.append(t)
        for s in shared_terms:
            side = _formula_side(mk_eq(s, s), self.tags)
            if side not in ("A", "B"):
                continue
            sval = _value(r, s)
            for t in candidates:
                if _value(r, t) != sval:
                    continue
                key = _pair_key(s, t)
                if key in eqs or key in neqs:
                    continue
                eq = mk_eq(s, t)
                if side == "A":
                    t1 = self.interpolate(a + [eq], b)
                    t2 = self.interpolate(a + [neg(eq)], b)
                    return disj(t1, t2)
                t1 = self.interpolate(a, b + [eq])
                t2 = self.interpolate(a, b + [neg(eq)])
                return conj(t1, t2)
        return None


def base_interpolate(
    a_forms: list[Formula],
    b_forms: list[Formula],
    bank: TermBank,
    tags: dict[str, str] | None = None,
    verify: bool = True,
) -> Formula:
    """Interpolant for a jointly unsatisfiable pair of base-problem formula sets.

    Distributes over the lazy DNF: the result is the disjunction over
    consistent A-cubes of the conjunction over consistent B-cubes of the
    per-cube interpolant.
    """
    if tags is None:
        tags = _occurrence_tags(a_forms, b_forms)
    if isinstance(base_check(a_forms + b_forms, bank), BaseSat):
        raise NotUnsat("base_interpolate: pair is satisfiable")

    a_cubes = [
        c for c in enum_consistent_cubes(a_forms, bank)
        if isinstance(combined_check(c, bank), BaseSat)
    ]
    b_cubes = [
        c for c in enum_consistent_cubes(b_forms, bank)
        if isinstance(combined_check(c, bank), BaseSat)
    ]
    if not a_cubes:
        return FALSE
    if not b_cubes:
        return TRUE
    offsets = [
        abs(t.offset)
        for cubes in (a_cubes, b_cubes)
        for cube in cubes
        for t in _shared_index_terms(cube, bank)
    ]
    interp = _CubeInterpolator(bank, tags, offset_bound=1 + max(offsets or [0]))
    disjuncts = []
    for alpha in a_cubes:
        conjuncts = [interp.interpolate_pair(list(alpha), list(beta)) for beta in b_cubes]
        disjuncts.append(conj(*conjuncts))
    theta = disj(*disjuncts)
    if verify:
        _verify_base_interpolant(theta, a_forms, b_forms, bank, tags)
    return theta


class _TreeInterpolator:
    """Interpolation along the boolean search tree.

    The same lazy-DNF search that decides the conjunction also yields an
    interpolant: every theory conflict at a leaf is interpolated as a small
    cube pair (split by which side's formulas produced each literal), and
    branch results combine by the ownership of the decision atom — a
    disjunction for an A-side case split, a conjunction for a B-side one,
    and a guard for a shared atom.  A conflict whose minimized core does
    not mention the decisions below some level is reused verbatim for all
    skipped siblings, mirroring the solver's backjumping.

    This avoids materializing the full cube-product of the two sides,
    which is exponential in the number of instantiated clauses.
    """

    def __init__(self, bank: TermBank, tags: dict[str, str], offset_bound: int):
        self.bank = bank
        self.tags = tags
        self.cube_interp = _CubeInterpolator(bank, tags, offset_bound)
        self.found_model: BaseSat | None = None

    def run(self, a_forms: list[Formula], b_forms: list[Formula]) -> Formula:
        pending = [(_compile_nnf(_nnf(f)), "A") for f in a_forms]
        pending += [(_compile_nnf(_nnf(f)), "B") for f in b_forms]
        theta, _ = self._go(pending, {}, [], [], {}, 0)
        if self.found_model is not None:
            raise NotUnsat("tree interpolation: pair is satisfiable")
        return theta

    # cube: atom -> (polarity, "A"|"B"|"both")
    def _go(self, pending, cube, a_cube, b_cube, lit_level, level):
        bank = self.bank
        marks = (len(a_cube), len(b_cube))
        lit_of = lambda atom, pol: atom if pol else Not(atom)

        def undo():
            del a_cube[marks[0]:]
            del b_cube[marks[1]:]

        def add_lit(atom, pol, side):
            cube[atom] = (pol, side)
            lit = lit_of(atom, pol)
            lit_level[lit] = level
            if side in ("A", "both"):
                a_cube.append(lit)
            if side in ("B", "both"):
                b_cube.append(lit)

        grew = False
        fresh = None
        saved_cube = dict(cube)
        saved_levels = dict(lit_level)

        def restore():
            cube.clear()
            cube.update(saved_cube)
            lit_level.clear()
            lit_level.update(saved_levels)
            undo()

        while True:
            nxt = []
            new_atoms: set[Formula] = set()
            work = list(pending)
            i = 0
            while i < len(work):
                n, side = work[i]
                i += 1
                if n.kind == "true":
                    continue
                if n.kind == "false":
                    restore()
                    return (FALSE if side == "A" else TRUE), None
                if n.kind == "and":
                    work.extend((k, side) for k in n.children)
                    continue
                if n.kind == "lit":
                    have = cube.get(n.atom)
                    if have is not None:
                        old_pol, old_side = have
                        if old_pol == n.pol:
                            if old_side != "both" and side != old_side:
                                # both sides now own this literal
                                cube[n.atom] = (n.pol, "both")
                                lit = lit_of(n.atom, n.pol)
                                missing = "B" if old_side == "A" else "A"
                                (a_cube if missing == "A" else b_cube).append(lit)
                                new_atoms.add(n.atom)
                            continue
                        theta = self._complement_leaf(n.atom, n.pol, side, cube)
                        restore()
                        return theta, None
                    add_lit(n.atom, n.pol, side)
                    new_atoms.add(n.atom)
                    grew = True
                    continue
                if fresh is not None and not new_atoms and not (n.atoms & fresh):
                    nxt.append((n, side))
                    continue
                s = _tree_simplify(n, cube, side)
                if s.kind == "false":
                    # every disjunct of this side's clause is refuted in place
                    theta = self._refuted_theta(n, side, cube)
                    restore()
                    return theta, None
                if s.kind in ("true", "and", "lit"):
                    work.append((s, side))
                    continue
                nxt.append((s, side))
            pending = nxt
            fresh = new_atoms
            if not new_atoms:
                break

        if grew:
            got = self._theory_conflict(a_cube, b_cube, lit_level)
            if got is not None:
                theta, jump_to = got
                restore()
                return theta, (jump_to if jump_to < level else None)
        if not pending:
            res = combined_check(a_cube + b_cube, self.bank)
            if isinstance(res, BaseSat):
                self.found_model = res
                restore()
                return TRUE, None
            theta = self.cube_interp.interpolate_pair(list(a_cube), list(b_cube))
            restore()
            return theta, None

        counts: dict[Formula, int] = {}
        for n, _side in pending:
            for a in n.atoms:
                if a not in cube:
                    counts[a] = counts.get(a, 0) + 1
        smallest, clause_side = min(pending, key=lambda ns: len(ns[0].children))
        # undecided atoms, or atoms the clause's own side cannot see yet:
        # re-deciding those shares them across the split
        cands = [
            a for a in smallest.atoms
            if a not in cube or cube[a][1] not in (clause_side, "both")
        ]
        atom = max(cands, key=lambda a: counts.get(a, 0))
        side = _formula_side(atom, self.tags)
        owner = {"A": "A", "B": "B", "common": "both"}.get(side)
        if owner is None:
            raise NoSeparatingTerm(f"decision atom {atom} spans both strict vocabularies")

        thetas = []
        jump_seen = None
        for pol in (True, False):
            node = _Node("lit", atom, pol, atoms=frozenset((atom,)))
            theta, jump_to = self._go(
                pending + [(node, owner)], cube, a_cube, b_cube, lit_level, level + 1
            )
            if self.found_model is not None:
                restore()
                return TRUE, None
            if jump_to is not None and jump_to < level:
                restore()
                return theta, jump_to
            thetas.append(theta)
        restore()
        if owner == "A":
            return disj(*thetas), jump_seen
        if owner == "B":
            return conj(*thetas), jump_seen
        g = atom
        t_true, t_false = thetas
        if t_true == t_false:
            return t_true, jump_seen
        if isinstance(t_true, FalseF):
            return conj(neg(g), t_false), jump_seen
        if isinstance(t_false, FalseF):
            return conj(g, t_true), jump_seen
        return conj(implies(g, t_true), implies(neg(g), t_false)), jump_seen

    def _complement_leaf(self, atom, new_pol, new_side, cube):
        old_pol, old_side = cube[atom]
        sides = set()
        for s, pol in ((old_side, old_pol), (new_side, new_pol)):
            if s == "both":
                sides.update(("A", "B"))
            else:
                sides.add(s)
        if sides == {"A"}:
            return FALSE
        if sides == {"B"}:
            return TRUE
        # cross-side: the A side entails its polarity of the shared atom
        a_pol = old_pol if old_side in ("A", "both") else new_pol
        return atom if a_pol else Not(atom)

    def _refuted_theta(self, node, side, cube):
        """Interpolant contribution of a side formula refuted by the cube."""
        if node.kind == "lit":
            return self._complement_leaf(node.atom, node.pol, side, cube)
        if node.kind == "false":
            return FALSE if side == "A" else TRUE
        if node.kind == "and":
            for child in node.children:
                if _tree_simplify(child, cube, side).kind == "false":
                    return self._refuted_theta(child, side, cube)
            return FALSE if side == "A" else TRUE
        # disjunction: every branch is refuted; case-split over them
        thetas = [self._refuted_theta(child, side, cube) for child in node.children]
        return disj(*thetas) if side == "A" else conj(*thetas)

    def _theory_conflict(self, a_cube, b_cube, lit_level):
        a_set, b_set = set(a_cube), set(b_cube)
        ti_lits, euf_lits = _split_cube(a_cube + b_cube)
        core = None
        r_ti = ti_check_conj(ti_lits, self.bank)
        if isinstance(r_ti, TiUnsat):
            core = r_ti.core
        else:
            r_euf = euf_check_conj(euf_lits, self.bank)
            if isinstance(r_euf, EufUnsat):
                core = r_euf.core
        if core is None:
            return None
        a_core = [l for l in core if l in a_set]
        b_core = [l for l in core if l in b_set and l not in a_set]
        theta = self.cube_interp.interpolate_pair(a_core, b_core)
        jump_to = max((lit_level.get(l, 0) for l in core), default=0)
        return theta, jump_to


def _tree_simplify(n: _Node, cube: dict, side: str) -> _Node:
    """Simplify against the cube entries this side is allowed to see.

    A clause may only be reduced by literals its own side has derived (or
    by shared decisions); anything else must flow through a decision on the
    shared atom, otherwise propagated literals would silently mix the two
    vocabularies and the interpolant composition would be unsound.
    """
    if n.kind in ("true", "false"):
        return n
    if not (n.atoms & cube.keys()):
        return n
    if n.kind == "lit":
        entry = cube.get(n.atom)
        if entry is None or entry[1] not in (side, "both"):
            return n
        return _TRUE_NODE if entry[0] == n.pol else _FALSE_NODE
    out = []
    if n.kind == "and":
        for k in n.children:
            s = _tree_simplify(k, cube, side)
            if s.kind == "false":
                return _FALSE_NODE
            if s.kind == "and":
                out.extend(s.children)
            elif s.kind != "true":
                out.append(s)
        if not out:
            return _TRUE_NODE
        if len(out) == 1:
            return out[0]
        return _Node("and", children=tuple(out),
                     atoms=frozenset().union(*(k.atoms for k in out)))
    for k in n.children:
        s = _tree_simplify(k, cube, side)
        if s.kind == "true":
            return _TRUE_NODE
        if s.kind == "or":
            out.extend(s.children)
        elif s.kind != "false":
            out.append(s)
    if not out:
        return _FALSE_NODE
    if len(out) == 1:
        return out[0]
    return _Node("or", children=tuple(out),
                 atoms=frozenset().union(*(k.atoms for k in out)))


def tree_interpolate(
    a_forms: list[Formula],
    b_forms: list[Formula],
    bank: TermBank,
    tags: dict[str, str] | None = None,
    verify: bool = True,
) -> Formula:
    """Interpolant via the boolean search tree; scales past the cube product."""
    if tags is None:
        tags = _occurrence_tags(a_forms, b_forms)
    offsets = [abs(t.offset) for f in a_forms + b_forms for t in _shared_index_terms([f], bank)]
    interp = _TreeInterpolator(bank, tags, offset_bound=1 + max(offsets or [0]))
    theta = interp.run(a_forms, b_forms)
    if verify:
        _verify_base_interpolant(theta, a_forms, b_forms, bank, tags)
    return theta


def _verify_base_interpolant(
    theta: Formula,
    a_forms: list[Formula],
    b_forms: list[Formula],
    bank: TermBank,
    tags: dict[str, str],
) -> None:
    bad = [s for s in symbols_of(theta) if tags.get(s, "common") != "common"]
    if bad:
        raise UnverifiedInterpolant(f"interpolant mentions strict symbols {bad}")
    if isinstance(base_check(a_forms + [neg(theta)], bank), BaseSat):
        raise UnverifiedInterpolant("A does not entail the interpolant")
    if isinstance(base_check([theta] + b_forms, bank), BaseSat):
        raise UnverifiedInterpolant("interpolant is consistent with B")


# ---------------------------------------------------------------------------
# External adapter
# ---------------------------------------------------------------------------


def render_smtlib(a_forms: list[Formula], b_forms: list[Formula], bank: TermBank) -> str:
    """SMT-LIB 2 text for the pair, with the two sides named A and B."""
    decls: list[str] = [
        "(set-option :produce-interpolants true)",
        "(set-logic QF_UFLIA)",
        "(declare-sort Elem 0)",
        "(declare-sort Arr 0)",
        "(declare-sort Boolv 0)",
        f"(declare-fun {_smt_name('bot')} () Elem)",
        f"(declare-fun {_smt_name('el')} () Elem)",
        f"(declare-fun {_smt_name('!tt')} () Boolv)",
        f"(declare-fun {_smt_name('!ff')} () Boolv)",
    ]
    sortname = {Sort.INDEX: "Int", Sort.ELEM: "Elem", Sort.ARRAY: "Arr", Sort.BOOL: "Boolv"}
    sig = bank.sig
    for name, sort in sig.free_consts.items():
        decls.append(f"(declare-fun {_smt_name(name)} () {sortname[sort]})")
    for name, (args, res) in sig.free_funs.items():
        argstr = " ".join(sortname[s] for s in args)
        decls.append(f"(declare-fun {_smt_name(name)} ({argstr}) {sortname[res]})")
    a_txt = " ".join(_smt_formula(f) for f in a_forms) or "true"
    b_txt = " ".join(_smt_formula(f) for f in b_forms) or "true"
    return "\n".join(
        decls
        + [
            f"(assert (! (and {a_txt}) :interpolation-group A))",
            f"(assert (! (and {b_txt}) :interpolation-group B))",
            "(check-sat)",
            "(get-interpolant A)",
        ]
    )


def _smt_name(name: str) -> str:
    return "|" + name + "|" if name.startswith("!") else name


def _smt_term(t: Term) -> str:
    if t.offset:
        base = _smt_term(t.base)
        return f"(+ {base} {t.offset})" if t.offset > 0 else f"(- {base} {-t.offset})"
    if not t.args:
        return "0" if t.head == "0" else _smt_name(t.head)
    return "(" + " ".join([_smt_name(t.head)] + [_smt_term(a) for a in t.args]) + ")"


def _smt_formula(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        return f"(= {_smt_term(f.lhs)} {_smt_term(f.rhs)})"
    if isinstance(f, Le):
        return f"(<= {_smt_term(f.lhs)} {_smt_term(f.rhs)})"
    if isinstance(f, PredApp):
        app = "(" + " ".join([_smt_name(f.name)] + [_smt_term(a) for a in f.args]) + ")"
        return f"(= {app} {_smt_name('!tt')})"
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(_smt_formula(g) for g in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(_smt_formula(g) for g in f.args) + ")"
    raise TypeError(f)


def external_interpolate(
    a_forms: list[Formula],
    b_forms: list[Formula],
    bank: TermBank,
    adapter_cmd: list[str],
    timeout: float = 30.0,
    tags: dict[str, str] | None = None,
) -> Formula:
    """Delegate interpolation to a subprocess, then re-verify its answer.

    The adapter receives the SMT-LIB rendering on stdin and must reply with
    a single s-expression in the problem syntax.  Whatever comes back is
    re-parsed and checked against the three interpolant conditions with the
    internal engine; an unverifiable answer is rejected.
    """
    if tags is None:
        tags = _occurrence_tags(a_forms, b_forms)
    script = render_smtlib(a_forms, b_forms, bank)
    try:
        proc = subprocess.run(
            adapter_cmd,
            input=script.encode(),
            capture_output=True,
            timeout=timeout,
        )
    except (subprocess.TimeoutExpired, OSError) as exc:
        raise AdapterFailure(str(exc)) from exc
    if proc.returncode != 0:
        raise AdapterFailure(f"adapter exited {proc.returncode}: {proc.stderr.decode()!r}")
    text = proc.stdout.decode().strip()
    if not text:
        raise AdapterFailure("adapter produced no output")
    from .frontend import parse_base_formula

    try:
        theta = parse_base_formula(text, bank)
    except Exception as exc:
        raise AdapterFailure(f"unparseable adapter reply: {exc}") from exc
    _verify_base_interpolant(theta, a_forms, b_forms, bank, tags)
    return theta
