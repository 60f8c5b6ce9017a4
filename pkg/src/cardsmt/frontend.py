"""Problem-file parsing, printing, and symbol coloring.

Problem files are s-expressions.  Commands:

    (set-theory CARD|CARDC)
    (set-index-theory TO|IDL)
    (declare-const name Index|Elem|Array)
    (declare-fun name (Sort*) Sort|Bool)
    (assert F)  (assert-A F)  (assert-B F)
    (check-sat)
    (get-interpolant)
    (beth-define (x*) (y*) F)

Terms: (rd a i), (wr a i e), (diff a b), (len a), (const i), bot, el, 0,
(succ i), (pred i), integer numerals under IDL; atoms (<= i j), (= s t) and
the sugar (< i j) and (max i j); boolean (and ...), (or ...), (not ...),
true, false.  The max sugar expands to a fresh constant constrained to be
the larger argument; the defining constraints are conjoined onto the
enclosing assertion, which is sound in every polarity because the fresh
name is functionally determined.

Multiple assertions of the same kind conjoin.  A file carries at most one
goal: a definability query if beth-define occurs, an interpolation query if
get-interpolant occurs (with the A/B parts collected from assert-A and
assert-B), and otherwise a satisfiability query over all assertions; a
check over a file with A/B parts conjoins both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ConstNotEnabled,
    DuplicateSymbol,
    ParseError,
    SortMismatch,
    UnknownSymbol,
)
from .kernel import (
    FALSE,
    TRUE,
    Formula,
    PredApp,
    Signature,
    Sort,
    Term,
    TermBank,
    conj,
    disj,
    mk_eq,
    mk_le,
    mk_lt,
    neg,
    print_formula,
    symbols_of,
)

# ---------------------------------------------------------------------------
# Tokenizer / reader
# ---------------------------------------------------------------------------


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out: list[_Tok] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            out.append(_Tok(c, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < len(text) and text[j] not in " \t\r\n();":
                j += 1
            out.append(_Tok(text[i:j], line, col))
            col += j - i
            i = j
    return out


def _read_all(tokens: list[_Tok]):
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input", 0, 0)
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError("unbalanced parenthesis", tok.line, tok.col)
                if tokens[pos].text == ")":
                    pos += 1
                    return (tok, items)
                items.append(read())
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.line, tok.col)
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def _is_numeral(s: str) -> bool:
    return s.lstrip("-").isdigit() and s.lstrip("-") != ""


# ---------------------------------------------------------------------------
# Problem and coloring
# ---------------------------------------------------------------------------


@dataclass
class SatGoal:
    formula: Formula


@dataclass
class InterpGoal:
    a0: Formula
    b0: Formula


@dataclass
class BethGoal:
    params: list[str]
    defined: list[str]
    delta: Formula


@dataclass
class Problem:
    theory_mode: str  # CARD | CARDC
    index_theory: str  # TO | IDL
    bank: TermBank
    asserts: list[Formula] = field(default_factory=list)
    asserts_a: list[Formula] = field(default_factory=list)
    asserts_b: list[Formula] = field(default_factory=list)
    wants_check: bool = False
    wants_interpolant: bool = False
    beth: BethGoal | None = None

    @property
    def goal(self):
        if self.beth is not None:
            return self.beth
        if self.wants_interpolant:
            return InterpGoal(conj(*self.asserts_a), conj(*self.asserts_b))
        return SatGoal(conj(*(self.asserts + self.asserts_a + self.asserts_b)))


@dataclass
class Coloring:
    tags: dict[str, str]

    def tag(self, name: str) -> str:
        return self.tags.get(name, "common")

    def as_dict(self) -> dict[str, str]:
        return dict(self.tags)


def color(a0: Formula, b0: Formula) -> Coloring:
    """Occurrence-based symbol classification for an interpolation pair."""
    a_syms, b_syms = symbols_of(a0), symbols_of(b0)
    tags = {}
    for s in a_syms | b_syms:
        tags[s] = "common" if (s in a_syms and s in b_syms) else ("A" if s in a_syms else "B")
    return Coloring(tags)


def color_extend(coloring: Coloring, new_symbol: str, tag: str) -> Coloring:
    """Register a fresh constant's color; naming a shared term keeps it shared."""
    if new_symbol in coloring.tags:
        raise DuplicateSymbol(new_symbol)
    if tag not in ("A", "B", "common"):
        raise ValueError(tag)
    out = dict(coloring.tags)
    out[new_symbol] = tag
    return Coloring(out)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_SORT_NAMES = {"Index": Sort.INDEX, "Elem": Sort.ELEM, "Array": Sort.ARRAY}


class _Parser:
    def __init__(self, text: str):
        self.forms = _read_all(_tokenize(text))
        self.theory_mode = "CARD"
        self.index_theory = "IDL"
        self.decls: list[tuple] = []
        self.body: list[tuple] = []

    def run(self) -> Problem:
        # configuration first, in textual order, then declarations/assertions
        for form in self.forms:
            head = self._head(form)
            if head == "set-theory":
                self.theory_mode = self._one_symbol(form, ("CARD", "CARDC"))
            elif head == "set-index-theory":
                self.index_theory = self._one_symbol(form, ("TO", "IDL"))
            else:
                self.body.append(form)
        sig = Signature(self.index_theory, const_enabled=self.theory_mode == "CARDC")
        bank = TermBank(sig)
        problem = Problem(self.theory_mode, self.index_theory, bank)
        for form in self.body:
            self._command(form, problem)
        return problem

    # -- helpers ------------------------------------------------------------

    @staticmethod
    def _head(form) -> str | None:
        if isinstance(form, tuple):
            op = form[1][0] if form[1] else None
            if isinstance(op, _Tok):
                return op.text
            return None
        return None

    @staticmethod
    def _err(form, message: str):
        tok = form[0] if isinstance(form, tuple) else form
        raise ParseError(message, tok.line, tok.col)

    def _one_symbol(self, form, allowed) -> str:
        if not isinstance(form, tuple) or len(form[1]) != 2 or not isinstance(form[1][1], _Tok):
            self._err(form, "expected one symbol argument")
        got = form[1][1].text
        if got not in allowed:
            self._err(form, f"expected one of {allowed}, got {got!r}")
        return got

    def _command(self, form, problem: Problem) -> None:
        head = self._head(form)
        if head is None:
            self._err(form, "expected a command")
        items = form[1]
        bank = problem.bank
        if head == "declare-const":
            if len(items) != 3 or not isinstance(items[1], _Tok) or not isinstance(items[2], _Tok):
                self._err(form, "declare-const expects a name and a sort")
            sort = _SORT_NAMES.get(items[2].text)
            if sort is None:
                self._err(items[2], f"unknown sort {items[2].text!r}")
            try:
                bank.sig.declare_const(items[1].text, sort)
            except DuplicateSymbol:
                self._err(items[1], f"duplicate symbol {items[1].text!r}")
        elif head == "declare-fun":
            if len(items) != 4 or not isinstance(items[1], _Tok) or not isinstance(items[2], tuple):
                self._err(form, "declare-fun expects a name, argument sorts, and a result")
            args = []
            for a in items[2][1]:
                if not isinstance(a, _Tok) or a.text not in _SORT_NAMES:
                    self._err(a if isinstance(a, _Tok) else form, "argument sorts are Index|Elem|Array")
                args.append(_SORT_NAMES[a.text])
            res_tok = items[3]
            if not isinstance(res_tok, _Tok):
                self._err(form, "result sort must be a symbol")
            if res_tok.text == "Bool":
                result = Sort.BOOL
            elif res_tok.text in _SORT_NAMES:
                result = _SORT_NAMES[res_tok.text]
            else:
                self._err(res_tok, f"unknown sort {res_tok.text!r}")
            try:
                bank.sig.declare_fun(items[1].text, tuple(args), result)
            except DuplicateSymbol:
                self._err(items[1], f"duplicate symbol {items[1].text!r}")
        elif head in ("assert", "assert-A", "assert-B"):
            if len(items) != 2:
                self._err(form, f"{head} expects one formula")
            side: list[Formula] = []
            phi = self._formula(items[1], problem, side)
            phi = conj(phi, *side)
            {"assert": problem.asserts,
             "assert-A": problem.asserts_a,
             "assert-B": problem.asserts_b}[head].append(phi)
        elif head == "check-sat":
            problem.wants_check = True
        elif head == "get-interpolant":
            problem.wants_interpolant = True
        elif head == "beth-define":
            if len(items) != 4 or not isinstance(items[1], tuple) or not isinstance(items[2], tuple):
                self._err(form, "beth-define expects (params) (defined) formula")
            params = [t.text for t in items[1][1] if isinstance(t, _Tok)]
            defined = [t.text for t in items[2][1] if isinstance(t, _Tok)]
            side = []
            delta = self._formula(items[3], problem, side)
            problem.beth = BethGoal(params, defined, conj(delta, *side))
        else:
            self._err(form, f"unknown command {head!r}")

    # -- formulas and terms ---------------------------------------------------

    def _formula(self, form, problem: Problem, side: list[Formula]) -> Formula:
        bank = problem.bank
        if isinstance(form, _Tok):
            if form.text == "true":
                return TRUE
            if form.text == "false":
                return FALSE
            # nullary predicate
            if form.text in bank.sig.free_funs:
                self._err(form, f"{form.text!r} expects arguments")
            if bank.sig.free_consts.get(form.text) is Sort.BOOL:
                return PredApp(form.text, ())
            self._err(form, f"expected a formula, got {form.text!r}")
        op = form[1][0]
        if not isinstance(op, _Tok):
            self._err(form, "expected an operator")
        name, args = op.text, form[1][1:]
        if name == "and":
            return conj(*(self._formula(a, problem, side) for a in args))
        if name == "or":
            return disj(*(self._formula(a, problem, side) for a in args))
        if name == "not":
            if len(args) != 1:
                self._err(form, "not expects one argument")
            return neg(self._formula(args[0], problem, side))
        if name == "=":
            if len(args) != 2:
                self._err(form, "= expects two arguments")
            lhs = self._term(args[0], problem, side)
            rhs = self._term(args[1], problem, side)
            try:
                return mk_eq(lhs, rhs)
            except SortMismatch as exc:
                self._err(form, str(exc))
        if name in ("<=", "<"):
            if len(args) != 2:
                self._err(form, f"{name} expects two arguments")
            lhs = self._term(args[0], problem, side)
            rhs = self._term(args[1], problem, side)
            try:
                return mk_le(lhs, rhs) if name == "<=" else mk_lt(lhs, rhs)
            except SortMismatch as exc:
                self._err(form, str(exc))
        rank = problem.bank.sig.free_funs.get(name)
        if rank and rank[1] is Sort.BOOL:
            if len(args) != len(rank[0]):
                self._err(form, f"{name} expects {len(rank[0])} arguments")
            terms = tuple(self._term(a, problem, side) for a in args)
            for t, want in zip(terms, rank[0]):
                if t.sort is not want:
                    self._err(form, f"{name}: argument of sort {t.sort} where {want} expected")
            return PredApp(name, terms)
        self._err(form, f"expected a formula, got {name!r}")

    def _term(self, form, problem: Problem, side: list[Formula]) -> Term:
        bank = problem.bank
        if isinstance(form, _Tok):
            text = form.text
            if _is_numeral(text):
                n = int(text)
                if n != 0 and not bank.sig.has_shifts:
                    self._err(form, "integer numerals require the IDL index theory")
                return bank.numeral(n)
            try:
                return bank.const(text)
            except UnknownSymbol:
                self._err(form, f"unknown symbol {text!r}")
        op = form[1][0]
        if not isinstance(op, _Tok):
            self._err(form, "expected a term")
        name, args = op.text, form[1][1:]
        if name == "max":
            if len(args) != 2:
                self._err(form, "max expects two arguments")
            from .index_theory import ti_max_encode
            from .reduction import NamingLedger

            i = self._term(args[0], problem, side)
            j = self._term(args[1], problem, side)
            if i.sort is not Sort.INDEX or j.sort is not Sort.INDEX:
                self._err(form, "max applies to Index terms")
            m, lits = ti_max_encode(i, j, bank, f"!m{bank.fresh_counter}")
            bank.fresh_counter += 1
            side.extend(lits)
            return m
        terms = tuple(self._term(a, problem, side) for a in args)
        try:
            return bank.app(name, terms)
        except ConstNotEnabled:
            self._err(form, "const requires CARDC mode (set-theory CARDC)")
        except (UnknownSymbol, SortMismatch) as exc:
            self._err(form, str(exc))


def parse(text: str) -> Problem:
    """Parse problem text; total on the grammar, raising ParseError otherwise."""
    return _Parser(text).run()


def parse_base_formula(text: str, bank: TermBank) -> Formula:
    """One formula over the base (index+equality) language, for adapter replies.

    Accepts the problem syntax plus the arithmetic sugar (+ t k) / (- t k)
    for displacements, since external engines answer in that form.
    """
    forms = _read_all(_tokenize(text))
    if len(forms) != 1:
        raise ParseError("expected exactly one s-expression", 1, 1)

    def term(form) -> Term:
        if isinstance(form, _Tok):
            if _is_numeral(form.text):
                return bank.numeral(int(form.text))
            name = form.text.strip("|")
            return bank.const(name)
        op = form[1][0]
        name, args = op.text, form[1][1:]
        if name in ("+", "-"):
            if len(args) != 2 or not isinstance(args[1], _Tok) or not _is_numeral(args[1].text):
                raise ParseError("displacement must be (+ t k) or (- t k)", op.line, op.col)
            k = int(args[1].text)
            return bank.shift(term(args[0]), k if name == "+" else -k)
        name = name.strip("|")
        return bank.app(name, tuple(term(a) for a in args))

    def formula(form) -> Formula:
        if isinstance(form, _Tok):
            if form.text == "true":
                return TRUE
            if form.text == "false":
                return FALSE
            raise ParseError(f"expected a formula, got {form.text!r}", form.line, form.col)
        op = form[1][0]
        name, args = op.text, form[1][1:]
        if name == "and":
            return conj(*(formula(a) for a in args))
        if name == "or":
            return disj(*(formula(a) for a in args))
        if name == "not":
            return neg(formula(args[0]))
        if name == "=":
            return mk_eq(term(args[0]), term(args[1]))
        if name == "<=":
            return mk_le(term(args[0]), term(args[1]))
        if name == "<":
            return mk_lt(term(args[0]), term(args[1]))
        raise ParseError(f"unknown connective {name!r}", op.line, op.col)

    return formula(forms[0])


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def print_problem(problem: Problem) -> str:
    """Problem text that parses back to a structurally identical problem."""
    sig = problem.bank.sig
    lines = [f"(set-theory {problem.theory_mode})",
             f"(set-index-theory {problem.index_theory})"]
    sortname = {Sort.INDEX: "Index", Sort.ELEM: "Elem", Sort.ARRAY: "Array", Sort.BOOL: "Bool"}
    for name, sort in sig.free_consts.items():
        if name.startswith("!"):
            continue
        if sort is Sort.BOOL:
            lines.append(f"(declare-fun {name} () Bool)")
        else:
            lines.append(f"(declare-const {name} {sortname[sort]})")
    for name, (args, res) in sig.free_funs.items():
        argstr = " ".join(sortname[s] for s in args)
        lines.append(f"(declare-fun {name} ({argstr}) {sortname[res]})")
    for phi in problem.asserts:
        lines.append(f"(assert {print_formula(phi)})")
    for phi in problem.asserts_a:
        lines.append(f"(assert-A {print_formula(phi)})")
    for phi in problem.asserts_b:
        lines.append(f"(assert-B {print_formula(phi)})")
    if problem.beth is not None:
        xs = " ".join(problem.beth.params)
        ys = " ".join(problem.beth.defined)
        lines.append(f"(beth-define ({xs}) ({ys}) {print_formula(problem.beth.delta)})")
    if problem.wants_check:
        lines.append("(check-sat)")
    if problem.wants_interpolant:
        lines.append("(get-interpolant)")
    return "\n".join(lines) + "\n"
