"""Congruence closure with explanations and conjunction interpolation.

Ground equality reasoning over interned terms of any sort.  Boolean
predicate atoms are encoded as equations between the predicate application
(a BOOL-sorted term) and the builtin constants tt/ff, which are implicitly
distinct; everything else is plain equality logic.

The closure keeps a proof forest alongside the union-find: every merge
records either the input literal or the congruence pair that caused it, so
any derived equality can be replayed as an oriented chain of steps whose
congruence steps recursively explain their argument equalities.

Interpolation for a jointly unsatisfiable pair works on that chain.  The
chain is cut into maximal same-side runs; a run's endpoints occur in
literals of both sides and are therefore shared.  A run may lean on
equalities proved by the other side (through congruence children), which
become hypotheses of its summary.  The interpolant is the conjunction of
all summary implications owned by the side opposite to the refuting
disequality (negated when the disequality itself belongs to the first
side).  A step that cannot be attributed to either side raises
MixedLiteral; the combination layer repairs such steps by introducing
shared witness terms, never this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MixedLiteral, NotUnsat
from .kernel import (
    FALSE,
    TRUE,
    Eq,
    Formula,
    Not,
    PredApp,
    Term,
    TermBank,
    conj,
    mk_eq,
    neg,
    symbols_of,
    term_symbols,
)

Reason = tuple  # ("lit", Formula) | ("cong", Term, Term)


class CongruenceClosure:
    def __init__(self) -> None:
        self.rep: dict[Term, Term] = {}
        self.size: dict[Term, int] = {}
        self.use: dict[Term, list[Term]] = {}
        self.sigtab: dict[tuple, Term] = {}
        self.pf_parent: dict[Term, tuple[Term, Reason]] = {}
        self.pending: list[tuple[Term, Term, Reason]] = []

    # -- union-find -------------------------------------------------------

    def add(self, t: Term) -> None:
        if t in self.rep:
            return
        for a in t.args:
            self.add(a)
        self.rep[t] = t
        self.size[t] = 1
        self.use[t] = []
        if t.args:
            for a in t.args:
                self.use[self.find(a)].append(t)
            self._register_sig(t)
        self._flush()

    def find(self, t: Term) -> Term:
        r = self.rep[t]
        while r is not self.rep[r]:
            r = self.rep[r]
        # path compression
        while self.rep[t] is not r:
            self.rep[t], t = r, self.rep[t]
        return r

    def _sig(self, t: Term) -> tuple:
        return (t.head, t.offset, tuple(self.find(a).id for a in t.args))

    def _register_sig(self, t: Term) -> None:
        key = self._sig(t)
        other = self.sigtab.get(key)
        if other is None:
            self.sigtab[key] = t
        elif self.find(other) is not self.find(t):
            self.pending.append((t, other, ("cong", t, other)))

    def merge(self, s: Term, t: Term, reason: Reason) -> None:
        self.add(s)
        self.add(t)
        self.pending.append((s, t, reason))
        self._flush()

    def _flush(self) -> None:
        while self.pending:
            s, t, reason = self.pending.pop()
            rs, rt = self.find(s), self.find(t)
            if rs is rt:
                continue
            self._pf_link(s, t, reason)
            if self.size[rs] > self.size[rt]:
                rs, rt = rt, rs
            # rs's class moves into rt's
            moved_use = self.use[rs]
            self.rep[rs] = rt
            self.size[rt] += self.size[rs]
            for app in moved_use:
                self._register_sig(app)
            self.use[rt].extend(moved_use)
            self.use[rs] = []

    # -- proof forest -----------------------------------------------------

    def _pf_link(self, s: Term, t: Term, reason: Reason) -> None:
        # make s the root of its proof tree, then hang it under t
        chain: list[tuple[Term, Term, Reason]] = []
        u = s
        while u in self.pf_parent:
            p, r = self.pf_parent[u]
            chain.append((u, p, r))
            u = p
        for u, p, r in reversed(chain):
            del self.pf_parent[u]
            self.pf_parent[p] = (u, r)
        self.pf_parent[s] = (t, reason)

    def _pf_root_path(self, u: Term) -> list[Term]:
        out = [u]
        while u in self.pf_parent:
            u = self.pf_parent[u][0]
            out.append(u)
        return out

    def explain(self, s: Term, t: Term) -> list[tuple[Term, Term, Reason]]:
        """Oriented steps s -> ... -> t, each an input literal or congruence."""
        if s is t:
            return []
        ps, pt = self._pf_root_path(s), self._pf_root_path(t)
        on_ps = {u.id: i for i, u in enumerate(ps)}
        j = next(i for i, u in enumerate(pt) if u.id in on_ps)
        nca = pt[j]
        steps: list[tuple[Term, Term, Reason]] = []
        u = s
        while u is not nca:
            p, r = self.pf_parent[u]
            steps.append((u, p, r))
            u = p
        tail: list[tuple[Term, Term, Reason]] = []
        u = t
        while u is not nca:
            p, r = self.pf_parent[u]
            tail.append((p, u, r))
            u = p
        steps.extend(reversed(tail))
        return steps

    def are_equal(self, s: Term, t: Term) -> bool:
        self.add(s)
        self.add(t)
        return self.find(s) is self.find(t)


@dataclass
class EufSat:
    classes: list[list[Term]]


@dataclass
class EufUnsat:
    core: list[Formula]
    conflict: Formula | None = None  # the refuted disequality (None for tt/ff)


def _encode(lit: Formula, bank: TermBank) -> tuple[str, Term, Term, Formula]:
    """Literal -> ("eq"|"diseq", lhs, rhs, original)."""
    pos, inner = True, lit
    if isinstance(lit, Not):
        pos, inner = False, lit.arg
    if isinstance(inner, PredApp):
        t = bank.app(inner.name, inner.args)
        return ("eq", t, bank.tt() if pos else bank.ff(), lit)
    if isinstance(inner, Eq):
        return ("eq" if pos else "diseq", inner.lhs, inner.rhs, lit)
    raise MixedLiteral(f"not an equality-logic literal: {lit}")


def _close(lits: list[Formula], bank: TermBank) -> tuple[CongruenceClosure, list[tuple[Term, Term, Formula]]]:
    cc = CongruenceClosure()
    diseqs: list[tuple[Term, Term, Formula]] = []
    cc.add(bank.tt())
    cc.add(bank.ff())
    for lit in lits:
        kind, l, r, orig = _encode(lit, bank)
        if kind == "eq":
            cc.merge(l, r, ("lit", orig))
        else:
            cc.add(l)
            cc.add(r)
            diseqs.append((l, r, orig))
    return cc, diseqs


def _step_literals(cc: CongruenceClosure, steps) -> list[Formula]:
    out: list[Formula] = []
    for x, y, reason in steps:
        if reason[0] == "lit":
            out.append(reason[1])
        else:
            for ax, ay in zip(x.args, y.args):
                out.extend(_step_literals(cc, cc.explain(ax, ay)))
    return out


def euf_check_conj(lits: list[Formula], bank: TermBank) -> EufSat | EufUnsat:
    """Congruence-closure verdict for a conjunction of ground literals.

    Verdicts are memoized per bank; the boolean enumerators re-check many
    cubes sharing a literal set.
    """
    cache = getattr(bank, "_euf_cache", None)
    if cache is None:
        cache = bank._euf_cache = {}  # type: ignore[attr-defined]
    key = frozenset(lits)
    hit = cache.get(key)
    if hit is not None:
        return hit
    res = _euf_check_conj(lits, bank)
    if len(cache) > 200_000:
        cache.clear()
    cache[key] = res
    return res


def _euf_check_conj(lits: list[Formula], bank: TermBank) -> EufSat | EufUnsat:
    cc, diseqs = _close(lits, bank)
    if cc.find(bank.tt()) is cc.find(bank.ff()):
        steps = cc.explain(bank.tt(), bank.ff())
        return EufUnsat(list(dict.fromkeys(_step_literals(cc, steps))), None)
    for l, r, orig in diseqs:
        if cc.find(l) is cc.find(r):
            steps = cc.explain(l, r)
            core = list(dict.fromkeys(_step_literals(cc, steps) + [orig]))
            return EufUnsat(core, orig)
    groups: dict[Term, list[Term]] = {}
    for t in list(cc.rep):
        groups.setdefault(cc.find(t), []).append(t)
    return EufSat(list(groups.values()))


def euf_entailed_var_equalities(
    lits: list[Formula], candidates: list[tuple[Term, Term]], bank: TermBank
) -> set[tuple[Term, Term]]:
    """Candidate pairs merged by the closure of `lits` (assumed satisfiable)."""
    cc, _ = _close(lits, bank)
    out = set()
    for x, y in candidates:
        cc.add(x)
        cc.add(y)
        if cc.find(x) is cc.find(y):
            out.add((x, y))
    return out


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


@dataclass
class _Piece:
    side: str  # "A" | "B"
    start: Term
    end: Term
    deps: list[Formula] = field(default_factory=list)  # shared equalities assumed


class _Interpolator:
    def __init__(self, cc: CongruenceClosure, lit_side: dict[Formula, str], tags: dict[str, str]):
        self.cc = cc
        self.lit_side = lit_side
        self.tags = tags
        self.obligations: dict[str, list[tuple[tuple[Formula, ...], Formula]]] = {"A": [], "B": []}

    def side_ok(self, t: Term, side: str) -> bool:
        syms: set[str] = set()
        term_symbols(t, syms)
        return all(self.tags.get(s, "common") in (side, "common") for s in syms)

    def is_common(self, t: Term) -> bool:
        return self.side_ok(t, "A") and self.side_ok(t, "B")

    def run(self, s: Term, t: Term, conflict_side: str) -> Formula:
        pieces = self.pieces_of_path(s, t)
        self.emit_runs(pieces)
        keep = "A" if conflict_side == "B" else "B"
        impls = []
        for deps, eq in self.obligations[keep]:
            if not (self.is_common(eq.lhs) and self.is_common(eq.rhs)):  # type: ignore[union-attr]
                raise MixedLiteral(f"summary {eq} spans strict symbols of both sides")
            impls.append(self.impl(deps, eq))
        theta = conj(*impls)
        return theta if keep == "A" else neg(theta)

    @staticmethod
    def impl(deps: tuple[Formula, ...], eq: Formula) -> Formula:
        from .kernel import implies

        return implies(conj(*deps), eq) if deps else eq

    def pieces_of_path(self, s: Term, t: Term) -> list[_Piece]:
        out: list[_Piece] = []
        for x, y, reason in self.cc.explain(s, t):
            if reason[0] == "lit":
                lit = reason[1]
                out.append(_Piece(self.lit_side[lit], x, y))
            else:
                out.extend(self.congruence_pieces(x, y))
        return out

    def congruence_pieces(self, x: Term, y: Term) -> list[_Piece]:
        """Decompose f(u1..un) ~ f(v1..vn) into single-side pieces.

        Arguments are replaced left to right; each child path contributes its
        own runs, and the enclosing application follows along.  When the
        application terms of a sub-step are only colorable on the side
        opposite to the child run, the child's summary equality (a shared
        atom) becomes a hypothesis of the piece instead.
        """
        bank = x._bank

        def rebuild(args: list[Term]) -> Term:
            t = bank._mk_checked(x.head, tuple(args))
            return bank.shift(t, x.offset) if x.offset else t

        cur_args = list(x.args)
        prev_app = x
        out: list[_Piece] = []
        for i in range(len(x.args)):
            child_runs = self.merge_pieces(self.pieces_of_path(x.args[i], y.args[i]))
            for piece in child_runs:
                cur_args[i] = piece.end
                next_app = rebuild(cur_args)
                self.cc.add(next_app)
                apps_ok = {s for s in ("A", "B")
                           if self.side_ok(prev_app, s) and self.side_ok(next_app, s)}
                if piece.side in apps_ok:
                    out.append(_Piece(piece.side, prev_app, next_app, piece.deps))
                elif apps_ok:
                    # lean on the child's shared summary; emit the child run
                    summary = mk_eq(piece.start, piece.end)
                    if not (self.is_common(piece.start) and self.is_common(piece.end)):
                        raise MixedLiteral(
                            f"cannot color step {prev_app} ~ {next_app}"
                        )
                    self.emit_runs([piece])
                    side = apps_ok.pop()
                    out.append(_Piece(side, prev_app, next_app, [summary]))
                else:
                    raise MixedLiteral(f"cannot color step {prev_app} ~ {next_app}")
                prev_app = next_app
            cur_args[i] = y.args[i]
        return out

    @staticmethod
    def merge_pieces(pieces: list[_Piece]) -> list[_Piece]:
        out: list[_Piece] = []
        for p in pieces:
            if out and out[-1].side == p.side:
                out[-1] = _Piece(p.side, out[-1].start, p.end, out[-1].deps + p.deps)
            else:
                out.append(p)
        return out

    def emit_runs(self, pieces: list[_Piece]) -> None:
        # commonality of the summaries that reach the interpolant is
        # enforced at assembly time; runs of the discarded side may touch
        # strict symbols freely
        for run in self.merge_pieces(pieces):
            if run.start is run.end:
                continue
            eq = mk_eq(run.start, run.end)
            deps = tuple(dict.fromkeys(run.deps))
            self.obligations[run.side].append((deps, eq))


def _occurrence_tags(a_lits: list[Formula], b_lits: list[Formula]) -> dict[str, str]:
    a_syms = set().union(*(symbols_of(l) for l in a_lits)) if a_lits else set()
    b_syms = set().union(*(symbols_of(l) for l in b_lits)) if b_lits else set()
    tags = {}
    for s in a_syms | b_syms:
        tags[s] = "common" if (s in a_syms and s in b_syms) else ("A" if s in a_syms else "B")
    return tags


def euf_interpolate_conj(
    a_lits: list[Formula],
    b_lits: list[Formula],
    bank: TermBank,
    tags: dict[str, str] | None = None,
) -> Formula:
    """Interpolant for a jointly unsatisfiable pair of equality-logic literal sets.

    `tags` maps symbol names to "A" / "B" / "common"; by default a symbol is
    common exactly when it occurs on both sides.
    """
    if tags is None:
        tags = _occurrence_tags(a_lits, b_lits)
    if isinstance(euf_check_conj(a_lits, bank), EufUnsat):
        return FALSE
    if isinstance(euf_check_conj(b_lits, bank), EufUnsat):
        return TRUE
    res = euf_check_conj(a_lits + b_lits, bank)
    if not isinstance(res, EufUnsat):
        raise NotUnsat("euf_interpolate_conj: pair is satisfiable")

    cc, _ = _close(a_lits + b_lits, bank)
    lit_side = {}
    for lit in b_lits:
        lit_side[lit] = "B"
    for lit in a_lits:
        lit_side[lit] = "A"
    if res.conflict is None:
        s, t = bank.tt(), bank.ff()
        conflict_side = "B"
    else:
        inner = res.conflict.arg  # Not(Eq)
        s, t = inner.lhs, inner.rhs
        conflict_side = lit_side[res.conflict]
    return _Interpolator(cc, lit_side, tags).run(s, t, conflict_side)
