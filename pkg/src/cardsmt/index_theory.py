"""Decision, interpolation and witness-term search for the index theories.

Two index theories are supported behind one difference-constraint engine:

* TO  -- linear orders with a distinguished 0.  Atoms are `s <= t`, `s = t`
  and their negations over plain constants.  A strict step is encoded as a
  weight -1 edge; a conjunction is unsatisfiable exactly when the constraint
  graph has a cycle of negative total weight (i.e. one containing a strict
  edge) or a disequality whose endpoints are forced equal.
* IDL -- integers with 0, succ, pred and the order.  Atoms may carry
  succ/pred displacements; `s <= t` contributes the edge `base(s) <=
  base(t) + (off(t) - off(s))` and a negated order atom flips with a -1.

An edge `u -> v` with weight `w` records the constraint `v <= u + w`.
Disequalities are non-convex in both theories and are handled by branching
on the two strict orientations; unsat cores are minimized under
single-literal removal before being returned.

Conjunction interpolation contracts the maximal same-side runs of the
refuting cycle into order atoms between the (necessarily shared) boundary
nodes; disequality branches disjoin or conjoin the sub-interpolants
depending on which side owns the split literal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoTermFound, NotUnsat, UnsupportedAtom
from .kernel import (
    Eq,
    Formula,
    Le,
    Not,
    Or,
    Sort,
    Term,
    TermBank,
    conj,
    disj,
    mk_eq,
    mk_le,
    neg,
)


@dataclass
class TiSat:
    assignment: dict[Term, int]  # base term -> integer (or order rank for TO)

    def value(self, t: Term) -> int:
        return self.assignment[t.base] + t.offset


@dataclass
class TiUnsat:
    core: list[Formula]


@dataclass(frozen=True)
class IndexTheoryContract:
    """Capabilities every index theory implementation must provide."""

    name: str
    conjunction_sat: bool = True
    unsat_core: bool = True
    conjunction_interpolation: bool = True
    equality_interpolating_terms: bool = True


TO_CONTRACT = IndexTheoryContract("TO")
IDL_CONTRACT = IndexTheoryContract("IDL")


@dataclass(frozen=True)
class _Edge:
    src: Term  # base term
    dst: Term  # base term; constraint: dst <= src + weight
    weight: int
    lit: Formula  # provenance


def _index_pair(lit: Formula) -> tuple[Term, Term] | None:
    inner = lit.arg if isinstance(lit, Not) else lit
    if isinstance(inner, Le):
        return inner.lhs, inner.rhs
    if isinstance(inner, Eq) and inner.lhs.sort is Sort.INDEX:
        return inner.lhs, inner.rhs
    return None


def _edges_of(lit: Formula, mode: str) -> list[_Edge] | str:
    """Edges contributed by one literal, or "diseq" for a disequality."""
    pair = _index_pair(lit)
    if pair is None:
        raise UnsupportedAtom(f"not an index-theory literal: {lit}")
    s, t = pair
    if mode == "TO" and (s.offset or t.offset):
        raise UnsupportedAtom("succ/pred displacements are not TO atoms")
    inner = lit.arg if isinstance(lit, Not) else lit
    if isinstance(inner, Le):
        if not isinstance(lit, Not):
            # s <= t
            return [_Edge(t.base, s.base, t.offset - s.offset, lit)]
        # not (s <= t): t < s
        return [_Edge(s.base, t.base, s.offset - t.offset - 1, lit)]
    if not isinstance(lit, Not):
        return [
            _Edge(t.base, s.base, t.offset - s.offset, lit),
            _Edge(s.base, t.base, s.offset - t.offset, lit),
        ]
    return "diseq"


def _split(lits: list[Formula], mode: str) -> tuple[list[_Edge], list[Formula]]:
    edges: list[_Edge] = []
    diseqs: list[Formula] = []
    for lit in lits:
        got = _edges_of(lit, mode)
        if got == "diseq":
            diseqs.append(lit)
        else:
            edges.extend(got)  # type: ignore[arg-type]
    return edges, diseqs


def _bellman_ford(edges: list[_Edge]) -> tuple[dict[Term, int], list[_Edge] | None]:
    """Shortest-path potentials from a virtual source; (dist, cycle-or-None)."""
    nodes: list[Term] = []
    seen: set[int] = set()
    for e in edges:
        for n in (e.src, e.dst):
            if n.id not in seen:
                seen.add(n.id)
                nodes.append(n)
    dist: dict[Term, int] = {n: 0 for n in nodes}
    pred: dict[Term, _Edge] = {}
    last_relaxed: Term | None = None
    # extra rounds guarantee every node on the predecessor walk has a pred
    for _ in range(2 * len(nodes) + 4):
        changed = False
        for e in edges:
            cand = dist[e.src] + e.weight
            if cand < dist[e.dst]:
                dist[e.dst] = cand
                pred[e.dst] = e
                changed = True
                last_relaxed = e.dst
        if not changed:
            return dist, None
    assert last_relaxed is not None
    v = last_relaxed
    seen_walk: dict[int, int] = {}
    walk: list[Term] = []
    while v.id not in seen_walk:
        seen_walk[v.id] = len(walk)
        walk.append(v)
        v = pred[v].src
    cycle = [pred[u] for u in walk[seen_walk[v.id] :]]
    cycle.reverse()
    return dist, cycle


def _strict(small: Term, big: Term) -> Formula:
    """small < big, as a literal."""
    return neg(mk_le(big, small))


def ti_check_conj(lits: list[Formula], bank: TermBank) -> TiSat | TiUnsat:
    """Decide a conjunction of index atoms and negated atoms.

    Sat results carry a concrete integer assignment (an order embedding for
    TO) normalized so the builtin 0 maps to 0; Unsat results carry a core
    that stays unsat and is minimal under removing any single literal.
    Verdicts are memoized per bank (the enumerators re-check many cubes
    sharing the same literal set).
    """
    cache = getattr(bank, "_ti_cache", None)
    if cache is None:
        cache = bank._ti_cache = {}  # type: ignore[attr-defined]
    key = frozenset(lits)
    hit = cache.get(key)
    if hit is not None:
        # fresh assignment copy: callers may extend it with default values
        return TiSat(dict(hit.assignment)) if isinstance(hit, TiSat) else hit
    mode = bank.sig.index_theory
    res = _check(list(lits), bank, mode)
    if isinstance(res, TiUnsat):
        res = TiUnsat(_minimize(res.core, bank, mode))
    else:
        zero = bank.zero()
        base = res.assignment.get(zero, 0)
        if base:
            res = TiSat({t: v - base for t, v in res.assignment.items()})
    if len(cache) > 200_000:
        cache.clear()
    cache[key] = res
    return res


def _check(lits: list[Formula], bank: TermBank, mode: str) -> TiSat | TiUnsat:
    edges, diseqs = _split(lits, mode)
    dist, cycle = _bellman_ford(edges)
    if cycle is not None:
        return TiUnsat(list(dict.fromkeys(e.lit for e in cycle)))
    assign = TiSat(dist)
    for d in diseqs:
        s, t = _index_pair(d)  # type: ignore[misc]
        if s.base not in assign.assignment:
            assign.assignment[s.base] = 0
        if t.base not in assign.assignment:
            assign.assignment[t.base] = 0
        if assign.value(s) == assign.value(t):
            left = _check(lits + [_strict(s, t)], bank, mode)
            if isinstance(left, TiSat):
                return left
            right = _check(lits + [_strict(t, s)], bank, mode)
            if isinstance(right, TiSat):
                return right
            lt1, lt2 = _strict(s, t), _strict(t, s)
            core = [l for l in left.core if l != lt1] + [l for l in right.core if l != lt2] + [d]
            return TiUnsat(list(dict.fromkeys(core)))
    for lit in lits:  # make sure isolated names get a value
        pair = _index_pair(lit)
        if pair:
            for t in pair:
                assign.assignment.setdefault(t.base, 0)
    return assign


def _minimize(core: list[Formula], bank: TermBank, mode: str) -> list[Formula]:
    kept = list(core)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1 :]
        if isinstance(_check(trial, bank, mode), TiUnsat):
            kept = trial
        else:
            i += 1
    return kept


# ---------------------------------------------------------------------------
# Conjunction interpolation
# ---------------------------------------------------------------------------


def _run_summary(bank: TermBank, start: Term, end: Term, weight: int, mode: str) -> Formula:
    """Atom summarizing a path start -> end of total weight: end <= start + weight."""
    if mode == "IDL":
        return mk_le(end, bank.shift(start, weight))
    if weight >= 0:
        return mk_le(end, start)
    return _strict(end, start)


def _contract_cycle(cycle: list[_Edge], a_lits: set[Formula], bank: TermBank, mode: str) -> Formula:
    """Interpolant from a refuting cycle: conjunction of A-run summaries."""
    sides = ["A" if e.lit in a_lits else "B" for e in cycle]
    # rotate so the cycle starts at a color boundary
    k = next(i for i in range(len(cycle)) if sides[i] != sides[i - 1])
    cycle = cycle[k:] + cycle[:k]
    sides = sides[k:] + sides[:k]
    pieces: list[Formula] = []
    i = 0
    n = len(cycle)
    while i < n:
        j = i
        weight = 0
        while j < n and sides[j] == sides[i]:
            weight += cycle[j].weight
            j += 1
        if sides[i] == "A":
            pieces.append(_run_summary(bank, cycle[i].src, cycle[j - 1].dst, weight, mode))
        i = j
    return conj(*pieces)


def ti_interpolate_conj(a_lits: list[Formula], b_lits: list[Formula], bank: TermBank) -> Formula:
    """Interpolant for a jointly unsatisfiable pair of index-literal sets.

    The result only mentions constants occurring on both sides: run
    boundaries of the refuting cycle touch literals of both colors, so each
    contraction endpoint is shared.  Disequality splits recurse, disjoining
    over A-side splits and conjoining over B-side ones.
    """
    mode = bank.sig.index_theory
    if isinstance(_check(a_lits + b_lits, bank, mode), TiSat):
        raise NotUnsat("ti_interpolate_conj: pair is satisfiable")
    return _interp(list(a_lits), list(b_lits), bank, mode)


def _interp(a_lits: list[Formula], b_lits: list[Formula], bank: TermBank, mode: str) -> Formula:
    from .kernel import FALSE, TRUE

    if isinstance(_check(a_lits, bank, mode), TiUnsat):
        return FALSE
    if isinstance(_check(b_lits, bank, mode), TiUnsat):
        return TRUE
    edges, diseqs = _split(a_lits + b_lits, mode)
    dist, cycle = _bellman_ford(edges)
    if cycle is not None:
        return _contract_cycle(cycle, set(a_lits), bank, mode)
    # edges alone are satisfiable: some disequality forces a split
    assign = TiSat(dist)
    for d in diseqs:
        s, t = _index_pair(d)  # type: ignore[misc]
        assign.assignment.setdefault(s.base, 0)
        assign.assignment.setdefault(t.base, 0)
        if assign.value(s) == assign.value(t):
            in_a = d in a_lits
            lt1, lt2 = _strict(s, t), _strict(t, s)
            if in_a:
                th1 = _interp(a_lits + [lt1], b_lits, bank, mode)
                th2 = _interp(a_lits + [lt2], b_lits, bank, mode)
                return disj(th1, th2)
            th1 = _interp(a_lits, b_lits + [lt1], bank, mode)
            th2 = _interp(a_lits, b_lits + [lt2], bank, mode)
            return conj(th1, th2)
    raise NotUnsat("ti_interpolate_conj: no refutation found")


# ---------------------------------------------------------------------------
# Equality-interpolating witness terms
# ---------------------------------------------------------------------------


def ti_equality_interpolating_terms(
    a_lits: list[Formula],
    b_lits: list[Formula],
    y1: list[Term],
    y2: list[Term],
    bank: TermBank,
) -> tuple[Term, ...]:
    """Shared terms witnessing an entailed cross-side variable equality.

    Requires a_lits & b_lits to entail that some y1 equals some y2 (checked
    by refuting the all-disequal strengthening).  Candidates are the shared
    constants, displaced by succ/pred within the problem's offset spread for
    IDL; every returned tuple has been validated by an unsat check, never
    guessed.
    """
    mode = bank.sig.index_theory
    all_dis = [neg(mk_eq(u, v)) for u in y1 for v in y2]
    if isinstance(_check(a_lits + b_lits + all_dis, bank, mode), TiSat):
        raise NoTermFound("premises do not entail any cross-side equality")

    strict_y = {t.base.id for t in y1} | {t.base.id for t in y2}
    common = _common_bases(a_lits, b_lits)
    spread = 1 + max(
        [abs(t.offset) for lit in a_lits + b_lits for t in (_index_pair(lit) or ())] or [0]
    )
    offsets = range(-spread, spread + 1) if mode == "IDL" else (0,)
    cands: list[Term] = []
    for off in sorted(offsets, key=abs):
        for base in common:
            if base.id in strict_y:
                continue
            cands.append(bank.shift(base, off) if off else base)

    ys = y1 + y2
    if isinstance(_check(a_lits + b_lits + _all_apart(ys, cands), bank, mode), TiSat):
        raise NoTermFound("no shared witness term within the offset bound")
    kept = list(cands)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1 :]
        if trial and isinstance(
            _check(a_lits + b_lits + _all_apart(ys, trial), bank, mode), TiUnsat
        ):
            kept = trial
        else:
            i += 1
    return tuple(kept)


def _all_apart(ys: list[Term], cands: list[Term]) -> list[Formula]:
    return [neg(mk_eq(y, c)) for y in ys for c in cands]


def _common_bases(a_lits: list[Formula], b_lits: list[Formula]) -> list[Term]:
    def bases(lits: list[Formula]) -> dict[int, Term]:
        out: dict[int, Term] = {}
        for lit in lits:
            pair = _index_pair(lit)
            if pair:
                for t in pair:
                    out[t.base.id] = t.base
        return out

    in_a, in_b = bases(a_lits), bases(b_lits)
    return [t for tid, t in in_a.items() if tid in in_b]


# ---------------------------------------------------------------------------
# max encoding
# ---------------------------------------------------------------------------


def ti_max_encode(i: Term, j: Term, bank: TermBank, fresh_name: str) -> tuple[Term, list[Formula]]:
    """Fresh m constrained to be max(i, j): i <= m, j <= m, m = i or m = j."""
    bank.sig.declare_const(fresh_name, Sort.INDEX)
    m = bank.const(fresh_name)
    lits: list[Formula] = [mk_le(i, m), mk_le(j, m), Or((mk_eq(m, i), mk_eq(m, j)))]
    return m, lits
