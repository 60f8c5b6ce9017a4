"""Seeded random formula generators shared by the test modules."""

from cardsmt.kernel import Signature, Sort, TermBank, conj, disj, mk_eq, mk_le, neg


def fresh_card_bank(n_arrays=2, n_idx=3, n_elems=3, theory="IDL", const_enabled=False):
    sig = Signature(theory, const_enabled=const_enabled)
    arrs = [f"a{k}" for k in range(n_arrays)]
    idxs = [f"i{k}" for k in range(n_idx)]
    elems = [f"x{k}" for k in range(n_elems)]
    for n in arrs:
        sig.declare_const(n, Sort.ARRAY)
    for n in idxs:
        sig.declare_const(n, Sort.INDEX)
    for n in elems:
        sig.declare_const(n, Sort.ELEM)
    bank = TermBank(sig)
    return bank, arrs, idxs, elems


def random_array_term(rng, bank, arrs, idxs, elems, depth=0):
    t = bank.const(rng.choice(arrs))
    while depth < 2 and rng.random() < 0.35:
        t = bank.wr(
            t,
            random_index_term(rng, bank, arrs, idxs, elems, depth + 1),
            random_elem_term(rng, bank, arrs, idxs, elems, depth + 1),
        )
        depth += 1
    return t


def random_index_term(rng, bank, arrs, idxs, elems, depth=0):
    r = rng.random()
    if r < 0.45 or depth >= 2:
        t = bank.const(rng.choice(idxs)) if idxs and rng.random() < 0.8 else bank.zero()
    elif r < 0.65:
        t = bank.numeral(rng.randint(0, 2))
    elif r < 0.85:
        t = bank.length(random_array_term(rng, bank, arrs, idxs, elems, depth + 1))
    else:
        t = bank.diff(
            random_array_term(rng, bank, arrs, idxs, elems, depth + 1),
            random_array_term(rng, bank, arrs, idxs, elems, depth + 1),
        )
    if bank.sig.has_shifts and rng.random() < 0.25:
        t = bank.shift(t, rng.choice((-1, 1)))
    return t


def random_elem_term(rng, bank, arrs, idxs, elems, depth=0):
    r = rng.random()
    if r < 0.45 or depth >= 2:
        return bank.const(rng.choice(elems)) if elems and rng.random() < 0.75 else (
            bank.bot() if rng.random() < 0.5 else bank.el()
        )
    return bank.rd(
        random_array_term(rng, bank, arrs, idxs, elems, depth + 1),
        random_index_term(rng, bank, arrs, idxs, elems, depth + 1),
    )


def random_literal(rng, bank, arrs, idxs, elems):
    r = rng.random()
    if r < 0.35:
        lit = mk_le(
            random_index_term(rng, bank, arrs, idxs, elems),
            random_index_term(rng, bank, arrs, idxs, elems),
        )
    elif r < 0.55:
        lit = mk_eq(
            random_index_term(rng, bank, arrs, idxs, elems),
            random_index_term(rng, bank, arrs, idxs, elems),
        )
    elif r < 0.85:
        lit = mk_eq(
            random_elem_term(rng, bank, arrs, idxs, elems),
            random_elem_term(rng, bank, arrs, idxs, elems),
        )
    else:
        lit = mk_eq(
            random_array_term(rng, bank, arrs, idxs, elems),
            random_array_term(rng, bank, arrs, idxs, elems),
        )
    return neg(lit) if rng.random() < 0.4 else lit


def random_card_formula(rng, bank, arrs, idxs, elems, max_lits=8):
    n = rng.randint(1, max_lits)
    lits = [random_literal(rng, bank, arrs, idxs, elems) for _ in range(n)]
    # mostly conjunctions with occasional disjunctive structure
    if n >= 3 and rng.random() < 0.4:
        k = rng.randint(1, n - 1)
        return conj(disj(*lits[:k + 1]), *lits[k + 1:])
    return conj(*lits)


def bounded_card_formula(rng, bank, arrs, idxs, elems, max_lits=8):
    """Ground formula with at most two write terms and one diff term.

    This is the shape of the big agreement corpus: literals stay shallow so
    both the engine and the model enumeration finish fast, while still
    exercising writes, diffs, lengths and array equalities.
    """
    budget = {"wr": 2, "diff": 1}

    def arr_term():
        t = bank.const(rng.choice(arrs))
        if budget["wr"] > 0 and rng.random() < 0.3:
            budget["wr"] -= 1
            t = bank.wr(t, idx_term(False), elem_term(False))
        return t

    def idx_term(allow_diff=True):
        r = rng.random()
        if r < 0.5:
            t = bank.const(rng.choice(idxs)) if idxs and rng.random() < 0.8 else bank.zero()
        elif r < 0.7:
            t = bank.numeral(rng.randint(0, 2)) if bank.sig.has_shifts else bank.zero()
        elif r < 0.9 or not (allow_diff and budget["diff"] > 0):
            t = bank.length(bank.const(rng.choice(arrs)))
        else:
            budget["diff"] -= 1
            t = bank.diff(bank.const(rng.choice(arrs)), bank.const(rng.choice(arrs)))
        if bank.sig.has_shifts and rng.random() < 0.2:
            t = bank.shift(t, rng.choice((-1, 1)))
        return t

    def elem_term(allow_rd=True):
        if allow_rd and rng.random() < 0.45:
            return bank.rd(bank.const(rng.choice(arrs)), idx_term(False))
        if elems and rng.random() < 0.7:
            return bank.const(rng.choice(elems))
        return bank.bot() if rng.random() < 0.4 else bank.el()

    def lit():
        r = rng.random()
        if r < 0.35:
            l = mk_le(idx_term(), idx_term())
        elif r < 0.55:
            l = mk_eq(idx_term(), idx_term())
        elif r < 0.9:
            l = mk_eq(elem_term(), elem_term())
        else:
            l = mk_eq(arr_term(), arr_term())
        return neg(l) if rng.random() < 0.4 else l

    n = rng.randint(1, max_lits)
    lits = [lit() for _ in range(n)]
    if n >= 3 and rng.random() < 0.4:
        k = rng.randint(1, n - 1)
        return conj(disj(*lits[: k + 1]), *lits[k + 1 :])
    return conj(*lits)
