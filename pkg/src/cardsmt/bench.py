"""Scaling family and size/time reporting for the reduction pipeline.

The family at size m has m shared array constants, m shared index
constants, and one write per array (all writes at the same position, so
each side contributes a single write index).  Both sides mention every
array and every index constant, which makes all of them shared and forces
the naming step to produce a full set of pairwise disagreement chains —
the worst case for the reduction's size.

For each m the report records the number of defining atoms after the
naming step, the number of atoms in the instantiated boolean part, the
number of atoms in the final base problem, and the wall time of the
reduction (naming + instantiation + read rewriting; the base solver is not
run here).  The table is written as CSV and, when a directory is given, a
log-log growth figure is rendered next to it.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

from .engine import prepare_session
from .kernel import (
    And,
    Eq,
    Formula,
    Le,
    Not,
    Or,
    PredApp,
    Signature,
    Sort,
    TermBank,
    conj,
    mk_eq,
)
from .reduction import to_base_formulas, zero_instantiate


def count_atoms(formulas: list[Formula]) -> int:
    """Distinct atomic formulas; instances share most of their atoms, and
    the distinct count is what the base solver's search branches over."""
    seen: set[Formula] = set()

    def go(f: Formula) -> None:
        if isinstance(f, (Eq, Le, PredApp)):
            seen.add(f)
        elif isinstance(f, Not):
            go(f.arg)
        elif isinstance(f, (And, Or)):
            for g in f.args:
                go(g)

    for f in formulas:
        go(f)
    return len(seen)


def family_pair(m: int) -> tuple[Formula, Formula, TermBank]:
    """The size-m member: m shared arrays, m shared indices, one write each."""
    sig = Signature("IDL")
    arrs = [f"c{k}" for k in range(m)]
    idxs = [f"i{k}" for k in range(m)]
    for n in arrs:
        sig.declare_const(n, Sort.ARRAY)
    for n in idxs:
        sig.declare_const(n, Sort.INDEX)
    sig.declare_const("e", Sort.ELEM)
    bank = TermBank(sig)
    e = bank.const("e")
    w = bank.const("i0")
    a_parts = [
        mk_eq(bank.rd(bank.wr(bank.const(arrs[j]), w, e), bank.const(idxs[j])), e)
        for j in range(m)
    ]
    b_parts = [
        mk_eq(
            bank.rd(bank.const(arrs[j]), bank.const(idxs[j])),
            bank.rd(bank.const(arrs[(j + 1) % m]), bank.const(idxs[(j + 1) % m])),
        )
        for j in range(m)
    ]
    return conj(*a_parts), conj(*b_parts), bank


@dataclass
class BenchRow:
    m: int
    phi1_atoms: int
    phi2_atoms_after_step2: int
    base_atoms: int
    wall_ms: float


def run_family(m_values: list[int]) -> list[BenchRow]:
    rows = []
    for m in m_values:
        a0, b0, bank = family_pair(m)
        t0 = time.perf_counter()
        session = prepare_session(a0, b0, bank)
        sp_a = zero_instantiate(session.sp_a, session.sp_a.index_names())
        sp_b = zero_instantiate(session.sp_b, session.sp_b.index_names())
        base = to_base_formulas(sp_a) + to_base_formulas(sp_b)
        wall = (time.perf_counter() - t0) * 1000.0
        rows.append(
            BenchRow(
                m,
                len(sp_a.phi1_atoms()) + len(sp_b.phi1_atoms()),
                count_atoms(sp_a.phi2) + count_atoms(sp_b.phi2),
                count_atoms(base),
                wall,
            )
        )
    return rows


def to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["m", "phi1_atoms", "phi2_atoms_after_step2", "base_atoms", "wall_ms"])
    for r in rows:
        writer.writerow([r.m, r.phi1_atoms, r.phi2_atoms_after_step2, r.base_atoms, f"{r.wall_ms:.2f}"])
    return buf.getvalue()


def loglog_slope(rows: list[BenchRow]) -> float:
    """Least-squares slope of log(base_atoms) against log(m)."""
    import math

    xs = [math.log(r.m) for r in rows]
    ys = [math.log(r.base_atoms) for r in rows]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = sum((x - mx) ** 2 for x in xs)
    return num / den


def render_figure(rows: list[BenchRow], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ms = [r.m for r in rows]
    atoms = [r.base_atoms for r in rows]
    bound = [40 * m**3 for m in ms]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(ms, atoms, "o-", label="base-problem atoms")
    ax.loglog(ms, bound, "--", color="gray", label=r"40 m$^3$ bound")
    ax.set_xlabel("family size m")
    ax.set_ylabel("atoms after reduction")
    ax.set_title(f"reduction growth (log-log slope {loglog_slope(rows):.2f})")
    ax.legend(loc="best")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
