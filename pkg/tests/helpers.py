"""Shared test utilities: NNF/DNF expansion and small-model search."""

from cardsmt.kernel import (
    Le,
    Sort,
    FALSE,
    TRUE,
    And,
    Eq,
    FalseF,
    Formula,
    Not,
    Or,
    PredApp,
    TrueF,
    neg,
)


def dnf_cubes(phi: Formula) -> list[list[Formula]]:
    """Cubes (lists of literals) whose disjunction is equivalent to phi."""

    def nnf(f, sign):
        if isinstance(f, Not):
            return nnf(f.arg, not sign)
        if isinstance(f, And):
            return ("and" if sign else "or", [nnf(g, sign) for g in f.args])
        if isinstance(f, Or):
            return ("or" if sign else "and", [nnf(g, sign) for g in f.args])
        if isinstance(f, TrueF):
            return ("lit", TRUE if sign else FALSE)
        if isinstance(f, FalseF):
            return ("lit", FALSE if sign else TRUE)
        return ("lit", f if sign else neg(f))

    def cubes(node):
        kind, payload = node
        if kind == "lit":
            if payload == TRUE:
                return [[]]
            if payload == FALSE:
                return []
            return [[payload]]
        if kind == "and":
            acc = [[]]
            for child in payload:
                acc = [c + d for c in acc for d in cubes(child)]
            return acc
        out = []
        for child in payload:
            out.extend(cubes(child))
        return out

    return cubes(nnf(phi, True))


class EufModelSearch:
    """Exhaustive finite-model search for ground equality-logic literals.

    Separate domain per sort, all of size `dom`; tt/ff are pinned to two
    distinct BOOL values.  Functions are tables filled lazily at the argument
    tuples that actually occur.
    """

    def __init__(self, lits, bank, dom=3):
        self.bank = bank
        self.dom = dom
        self.lits = list(lits)
        self.consts = []
        seen = set()
        self.apps = []
        for lit in self.lits:
            for t in self._terms(lit):
                self._collect(t, seen)

    def _terms(self, lit):
        inner = lit.arg if isinstance(lit, Not) else lit
        if isinstance(inner, Eq):
            return [inner.lhs, inner.rhs]
        if isinstance(inner, PredApp):
            return list(inner.args) + [self.bank.app(inner.name, inner.args)]
        raise TypeError(lit)

    def _collect(self, t, seen):
        if t.id in seen:
            return
        seen.add(t.id)
        for a in t.args:
            self._collect(a, seen)
        if t.args:
            self.apps.append(t)
        else:
            self.consts.append(t)

    def _eval(self, t, cvals, tables):
        if not t.args:
            return cvals[t.id]
        args = tuple(self._eval(a, cvals, tables) for a in t.args)
        key = (t.head, t.offset, args)
        return tables.get(key)

    def _lit_holds(self, lit, cvals, tables):
        pos, inner = True, lit
        if isinstance(lit, Not):
            pos, inner = False, lit.arg
        if isinstance(inner, PredApp):
            # predicates are characteristic functions: the negation pins ff
            v = self._eval(self.bank.app(inner.name, inner.args), cvals, tables)
            target = cvals[self.bank.tt().id] if pos else cvals[self.bank.ff().id]
            return v == target
        res = self._eval(inner.lhs, cvals, tables) == self._eval(inner.rhs, cvals, tables)
        return res if pos else not res

    def satisfiable(self):
        consts = self.consts
        tt, ff = self.bank.tt(), self.bank.ff()
        fixed = {tt.id: 1, ff.id: 0}

        def assign_consts(i, cvals):
            if i == len(consts):
                return self.fill_tables(0, cvals, {})
            c = consts[i]
            if c.id in fixed:
                cvals[c.id] = fixed[c.id]
                return assign_consts(i + 1, cvals)
            for v in range(self.dom):
                cvals[c.id] = v
                if assign_consts(i + 1, cvals):
                    return True
            return False

        return assign_consts(0, {})

    def fill_tables(self, i, cvals, tables):
        # app points in dependency order (args collected first)
        if i == len(self.apps):
            return all(self._lit_holds(l, cvals, tables) for l in self.lits)
        t = self.apps[i]
        args = tuple(self._eval(a, cvals, tables) for a in t.args)
        key = (t.head, t.offset, args)
        if key in tables:
            return self.fill_tables(i + 1, cvals, tables)
        for v in range(self.dom):
            tables[key] = v
            if self.fill_tables(i + 1, cvals, tables):
                return True
        del tables[key]
        return False


class BaseBrute:
    """Window/small-domain search for conjunctions of base literals.

    The window is sized from the cube itself: every satisfiable difference
    system has a solution whose adjacent sorted values differ by at most one
    more than the largest displacement, so a radius of (#names + 1) * (1 +
    max offset) around zero is exhaustive.
    """

    def __init__(self, bank, lits, elem_dom=3):
        self.bank = bank
        self.lits = list(lits)
        self.elem_dom = elem_dom
        self.idx_consts, self.elem_consts, self.apps = [], [], []
        seen = set()
        offs = [0]
        for lit in self.lits:
            inner = lit.arg if isinstance(lit, Not) else lit
            for t in (inner.lhs, inner.rhs):
                self._collect(t, seen)
                offs.append(abs(t.offset))
        radius = (len(self.idx_consts) + 1) * (1 + max(offs))
        self.lo, self.hi = -radius, radius

    def _collect(self, t, seen):
        if t.id in seen:
            return
        seen.add(t.id)
        base = t.base
        if base.args:
            for a in base.args:
                self._collect(a, seen)
            if base.id not in {x.id for x in self.apps}:
                self.apps.append(base)
        elif base.head == "0" or base.head in ("bot", "el"):
            pass
        elif base.sort is Sort.INDEX:
            if base.id not in {x.id for x in self.idx_consts}:
                self.idx_consts.append(base)
        elif base.sort is Sort.ELEM:
            if base.id not in {x.id for x in self.elem_consts}:
                self.elem_consts.append(base)

    def _tval(self, t, env, tables):
        base = t.base
        if base.head == "0" and not base.args:
            v = 0
        elif not base.args:
            v = env[base.id]
        else:
            args = tuple(self._tval(a, env, tables) for a in base.args)
            v = tables[(base.head, args)]
        return v + t.offset

    def _eval(self, t, env, tables):
        # elem side: bot=0, el=1, others from env/tables
        if t.sort is Sort.INDEX:
            return ("i", self._tval(t, env, tables))
        if not t.args:
            if t.head == "bot":
                return ("e", 0)
            if t.head == "el":
                return ("e", 1)
            return ("e", env[t.id])
        args = tuple(self._tval(a, env, tables) for a in t.args)
        return ("e", tables[(t.head, args)])

    def _holds(self, lit, env, tables):
        pos, inner = (False, lit.arg) if isinstance(lit, Not) else (True, lit)
        if isinstance(inner, Le):
            res = self._tval(inner.lhs, env, tables) <= self._tval(inner.rhs, env, tables)
        else:
            res = self._eval(inner.lhs, env, tables) == self._eval(inner.rhs, env, tables)
        return res if pos else not res

    def _index_only_decided(self, lit, assigned):
        inner = lit.arg if isinstance(lit, Not) else lit

        def pure(t):
            return t.sort is Sort.INDEX and not t.base.args and (
                t.base.head == "0" or t.base.id in assigned
            )

        return pure(inner.lhs) and pure(inner.rhs)

    def satisfiable(self):
        def idx_phase(i, env):
            if i == len(self.idx_consts):
                return elem_phase(0, env)
            for v in range(self.lo, self.hi + 1):
                env[self.idx_consts[i].id] = v
                if all(
                    self._holds(l, env, {})
                    for l in self.lits
                    if self._index_only_decided(l, env.keys())
                ):
                    if idx_phase(i + 1, env):
                        return True
            del env[self.idx_consts[i].id]
            return False

        def elem_phase(i, env):
            if i == len(self.elem_consts):
                return table_phase(0, env, {})
            for v in range(self.elem_dom):
                env[self.elem_consts[i].id] = v
                if elem_phase(i + 1, env):
                    return True
            return False

        def table_phase(i, env, tables):
            if i == len(self.apps):
                return all(self._holds(l, env, tables) for l in self.lits)
            t = self.apps[i]
            args = tuple(self._tval(a, env, tables) for a in t.args)
            key = (t.head, args)
            if key in tables:
                return table_phase(i + 1, env, tables)
            for v in range(self.elem_dom):
                tables[key] = v
                if table_phase(i + 1, env, tables):
                    return True
            del tables[key]
            return False

        return idx_phase(0, {})
