import random

import pytest

from cardsmt.errors import BudgetExceeded, DomainOverflow
from cardsmt.kernel import (
    Signature,
    Sort,
    TermBank,
    conj,
    mk_eq,
    mk_le,
    neg,
)
from cardsmt.oracle import (
    BOT,
    EL,
    ArrayValue,
    FunctionalModel,
    OracleBoundedUnsat,
    OracleSat,
    const_array,
    enumerate_and_decide,
    evaluate,
    small_model_bound,
)

import axioms


def mk_bank(theory="IDL", const_enabled=True,
            arrs=("a", "b", "c"), idxs=("i", "j"), elems=("x", "y")):
    sig = Signature(theory, const_enabled=const_enabled)
    for n in arrs:
        sig.declare_const(n, Sort.ARRAY)
    for n in idxs:
        sig.declare_const(n, Sort.INDEX)
    for n in elems:
        sig.declare_const(n, Sort.ELEM)
    sig.declare_const("_h", Sort.INDEX)
    return sig, TermBank(sig)


def random_model(rng, bank, lo=-2, hi=6, elem_size=3, max_len=3):
    sig = bank.sig
    dom = tuple([BOT, EL] + [f"e{k}" for k in range(elem_size - 2)])
    m = FunctionalModel(lo, hi, dom)
    for n, sort in sig.free_consts.items():
        if sort is Sort.ARRAY:
            ln = rng.randint(0, max_len)
            m.arrays[n] = ArrayValue(ln, tuple(rng.choice(dom[1:]) for _ in range(ln + 1)))
        elif sort is Sort.INDEX:
            m.idx[n] = rng.randint(lo, hi)
        elif sort is Sort.ELEM:
            m.elems[n] = rng.choice(dom)
    return m


def random_terms(rng, bank, m, kinds):
    out = []
    arr_names = [n for n, s in bank.sig.free_consts.items() if s is Sort.ARRAY]
    idx_names = [n for n, s in bank.sig.free_consts.items() if s is Sort.INDEX]
    elem_names = [n for n, s in bank.sig.free_consts.items() if s is Sort.ELEM]
    for kind in kinds:
        if kind == "arr":
            t = bank.const(rng.choice(arr_names))
            if rng.random() < 0.4:
                t = bank.wr(
                    t,
                    bank.const(rng.choice(idx_names)),
                    bank.const(rng.choice(elem_names)),
                )
            out.append(t)
        elif kind == "idx":
            r = rng.random()
            if r < 0.5:
                t = bank.const(rng.choice(idx_names))
            elif r < 0.8:
                t = bank.numeral(rng.randint(0, 3))
            else:
                t = bank.length(bank.const(rng.choice(arr_names)))
            out.append(t)
        else:
            out.append(bank.const(rng.choice(elem_names)) if rng.random() < 0.7 else bank.el())
    return out


def test_write_undefined_is_identity_everywhere():
    rng = random.Random(3)
    sig, bank = mk_bank()
    for _ in range(50):
        m = random_model(rng, bank, hi=6)
        y = bank.const("a")
        inst = mk_eq(bank.wr(y, bank.numeral(5), bank.bot()), y)
        assert evaluate(m, inst)


def test_diff_of_equal_length_zero_arrays():
    sig, bank = mk_bank()
    m = FunctionalModel(-2, 4, (BOT, EL, "e0"))
    m.arrays["a"] = ArrayValue(0, ("e0",))
    m.arrays["b"] = ArrayValue(0, (EL,))
    assert evaluate(m, mk_eq(bank.diff(bank.const("a"), bank.const("b")), bank.zero()))
    assert evaluate(
        m, neg(mk_eq(bank.rd(bank.const("a"), bank.zero()), bank.rd(bank.const("b"), bank.zero())))
    )


def test_all_axioms_hold_on_random_models():
    rng = random.Random(11)
    sig, bank = mk_bank()
    failures = []
    for name, builder, arity in axioms.ALL_AXIOMS + axioms.CONST_AXIOMS:
        for _ in range(120):
            m = random_model(rng, bank)
            args = random_terms(rng, bank, m, arity)
            try:
                ok = evaluate(m, builder(bank, *args))
            except DomainOverflow:
                continue
            if not ok:
                failures.append((name, [str(a) for a in args]))
    assert not failures, failures[:5]


def test_triangle_inequality_bulk():
    rng = random.Random(29)
    sig, bank = mk_bank()
    a, b, c = bank.const("a"), bank.const("b"), bank.const("c")
    for _ in range(2000):
        m = random_model(rng, bank)
        assert evaluate(m, axioms.law_diff_triangle(bank, a, b, c))


def test_const_array_semantics():
    sig, bank = mk_bank()
    m = FunctionalModel(-2, 4, (BOT, EL))
    assert const_array(-1) == ArrayValue(0, (EL,))
    assert evaluate(m, mk_eq(bank.length(bank.const_array(bank.numeral(2))), bank.numeral(2)))
    assert evaluate(m, mk_eq(bank.rd(bank.const_array(bank.numeral(2)), bank.numeral(1)), bank.el()))


def test_domain_overflow():
    sig, bank = mk_bank()
    m = FunctionalModel(-1, 2, (BOT, EL))
    m.idx["i"] = 2
    with pytest.raises(DomainOverflow):
        evaluate(m, mk_le(bank.shift(bank.const("i"), 1), bank.numeral(2)))


# --- enumeration -------------------------------------------------------------


def test_enumerate_defined_at_zero_conflict():
    sig, bank = mk_bank(arrs=("a",), idxs=(), elems=())
    a = bank.const("a")
    phi = conj(mk_eq(bank.length(a), bank.zero()), mk_eq(bank.rd(a, bank.zero()), bank.bot()))
    res = enumerate_and_decide(phi, bank, lo=-1, hi=2, elem_size=2, max_len=2)
    assert isinstance(res, OracleBoundedUnsat)
    # estimate is 2 + one array slot = 3 > hi, so this window is only advisory
    assert not res.authoritative
    res2 = enumerate_and_decide(phi, bank)
    assert isinstance(res2, OracleBoundedUnsat) and res2.authoritative


def test_enumerate_selfdiff():
    sig, bank = mk_bank(arrs=("a",), idxs=(), elems=())
    a = bank.const("a")
    phi = neg(mk_eq(bank.diff(a, a), bank.zero()))
    res = enumerate_and_decide(phi, bank)
    assert isinstance(res, OracleBoundedUnsat)


def test_enumerate_sat_with_witness():
    sig, bank = mk_bank(arrs=("a",), idxs=("i",), elems=())
    a, i = bank.const("a"), bank.const("i")
    phi = conj(mk_eq(bank.rd(a, i), bank.el()), mk_le(bank.zero(), i))
    res = enumerate_and_decide(phi, bank)
    assert isinstance(res, OracleSat)
    assert evaluate(res.model, phi)


def test_enumerate_budget():
    sig, bank = mk_bank()
    a, b = bank.const("a"), bank.const("b")
    phi = neg(mk_eq(bank.diff(a, b), bank.diff(b, a)))
    with pytest.raises(BudgetExceeded):
        enumerate_and_decide(phi, bank, budget=5)


def test_small_model_bound_counts():
    sig, bank = mk_bank()
    phi = conj(
        mk_eq(bank.diff(bank.const("a"), bank.const("b")), bank.const("i")),
        mk_le(bank.const("i"), bank.numeral(2)),
    )
    # 2 + i + a + b + one diff occurrence + shift 2
    assert small_model_bound(phi, bank) == 2 + 1 + 2 + 1 + 2


def test_iterated_diff_on_self_is_zero():
    rng = random.Random(13)
    sig, bank = mk_bank()
    a = bank.const("a")
    lvl2 = bank.expand_iterated_diff(a, a, 2)
    for _ in range(60):
        m = random_model(rng, bank, hi=6)
        assert evaluate(m, mk_eq(lvl2, bank.zero()))
        assert evaluate(m, mk_eq(bank.expand_iterated_diff(a, a, 3), bank.zero()))
