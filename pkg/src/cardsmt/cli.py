"""Command-line surface.

Commands:

    cardsmt check FILE...        decide satisfiability     (exit 10 sat, 20 unsat)
    cardsmt interpolate FILE     compute an interpolant    (exit 0; 1 sat pair;
                                                            2 unsupported fragment)
    cardsmt beth FILE            definability report
    cardsmt oracle FILE          bounded model search      (exit 10 sat, 20 unsat)
    cardsmt bench                scaling-family CSV + figure

Parse and configuration errors exit 1 with a message on stderr.  The
external interpolation backend is selected with --backend external:<cmd>
or the CARD_INTERP_SOLVER environment variable.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import bench as bench_mod
from .beth import BethQuery, Exhausted, Found, explicit_define_extract, implicit_define_check
from .engine import check_sat, interpolate, verify
from .errors import CardError, NoTermFound, NotUnsat, ParseError, UnsupportedFragment
from .frontend import BethGoal, InterpGoal, SatGoal, parse
from .kernel import print_formula, print_term
from .oracle import OracleBoundedUnsat, OracleSat, enumerate_and_decide


@dataclass
class RunConfig:
    command: str
    paths: list[str] = field(default_factory=list)
    index_theory: str | None = None
    backend: str = "internal"
    adapter_cmd: list[str] = field(default_factory=list)
    timeout: float = 30.0
    verify: bool = False
    window: tuple[int, int] = (-2, 4)
    elems: int = 3
    max_len: int = 3
    max_n: int = 6
    max_depth: int = 2
    jobs: int = 1
    seed: int | None = None
    trace: bool = False
    out_dir: str = "."
    m_max: int = 10

    def validate(self) -> None:
        if self.backend == "external" and not self.adapter_cmd:
            raise CardError("external backend requires a command")
        if self.timeout <= 0:
            raise CardError("timeout must be positive")


def _load(path: str, cfg: RunConfig):
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if cfg.index_theory:
        # override wins over the file's directive
        lines = [l for l in text.splitlines() if "set-index-theory" not in l]
        text = f"(set-index-theory {cfg.index_theory})\n" + "\n".join(lines)
    return parse(text)


def _trace(cfg: RunConfig, message: str) -> None:
    if cfg.trace:
        print(f"; {message}", file=sys.stderr)


def cmd_check_one(path: str, cfg: RunConfig) -> int:
    problem = _load(path, cfg)
    goal = problem.goal
    if isinstance(goal, BethGoal):
        raise CardError("file carries a definability goal; use the beth command")
    phi = goal.formula if isinstance(goal, SatGoal) else None
    if phi is None:
        from .kernel import conj

        phi = conj(goal.a0, goal.b0)
    t0 = time.perf_counter()
    verdict = check_sat(phi, problem.bank, problem.theory_mode)
    _trace(cfg, f"{path}: {verdict.status} in {time.perf_counter() - t0:.3f}s "
                f"over {verdict.branches} identity branch(es)")
    print(verdict.status)
    return 10 if verdict.status == "sat" else 20


def cmd_interpolate(path: str, cfg: RunConfig) -> int:
    problem = _load(path, cfg)
    goal = problem.goal
    if not isinstance(goal, InterpGoal):
        raise CardError("file carries no (get-interpolant) goal with A/B parts")
    verdict = interpolate(
        goal.a0,
        goal.b0,
        problem.bank,
        backend=cfg.backend,
        adapter_cmd=cfg.adapter_cmd,
        adapter_timeout=cfg.timeout,
    )
    print(print_formula(verdict.interpolant))
    if cfg.verify:
        report = verdict.report or verify(goal.a0, goal.b0, verdict.interpolant, problem.bank)
        print(f"(verified {'true' if report.ok else 'false'})")
    return 0


def cmd_beth(path: str, cfg: RunConfig) -> int:
    problem = _load(path, cfg)
    goal = problem.goal
    if not isinstance(goal, BethGoal):
        raise CardError("file carries no (beth-define ...) goal")
    query = BethQuery(goal.delta, goal.params, goal.defined,
                      n_max=cfg.max_n, depth_max=cfg.max_depth)
    res = implicit_define_check(query, problem.bank, problem.theory_mode)
    if isinstance(res, Exhausted):
        print(f"exhausted at N={res.n_max}")
        return 0
    try:
        terms = explicit_define_extract(query, res.n, problem.bank, problem.theory_mode)
        tuple_text = "(" + " ".join(print_term(t) for t in terms) + ")"
        print(f"implicit at N={res.n}; explicit: {tuple_text}")
    except NoTermFound:
        print(f"implicit at N={res.n}; explicit: not found within bounds")
    return 0


def cmd_oracle(path: str, cfg: RunConfig) -> int:
    problem = _load(path, cfg)
    goal = problem.goal
    if not isinstance(goal, SatGoal):
        raise CardError("the oracle decides plain (assert ...) goals")
    lo, hi = cfg.window
    res = enumerate_and_decide(
        goal.formula, problem.bank, lo=lo, hi=hi,
        elem_size=cfg.elems, max_len=cfg.max_len,
    )
    if isinstance(res, OracleSat):
        print("sat")
        return 10
    kind = "authoritative" if res.authoritative else "advisory"
    print(f"bounded-unsat ({kind}, small-model estimate {res.bound})")
    return 20


def cmd_bench(cfg: RunConfig) -> int:
    rows = bench_mod.run_family(list(range(2, cfg.m_max + 1)))
    text = bench_mod.to_csv(rows)
    print(text, end="")
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "bench.csv")
    png_path = os.path.join(cfg.out_dir, "bench.png")
    with open(csv_path, "w", encoding="utf-8") as handle:
        handle.write(text)
    bench_mod.render_figure(rows, png_path)
    _trace(cfg, f"wrote {csv_path} and {png_path}; "
                f"log-log slope {bench_mod.loglog_slope(rows):.2f}")
    return 0


def _run_one(args) -> tuple[str, int, str]:
    path, cfg = args
    import io
    from contextlib import redirect_stdout

    buf = io.StringIO()
    try:
        with redirect_stdout(buf):
            code = cmd_check_one(path, cfg)
    except CardError as exc:
        return path, 1, f"error: {exc}\n"
    return path, code, buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="cardsmt")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--index-theory", choices=("TO", "IDL"))
        p.add_argument("--backend", default="internal")
        p.add_argument("--timeout", type=float, default=30.0)
        p.add_argument("--verify", action="store_true")
        p.add_argument("--window", nargs=2, type=int, metavar=("LO", "HI"), default=(-2, 4))
        p.add_argument("--elems", type=int, default=3)
        p.add_argument("--max-len", type=int, default=3)
        p.add_argument("--max-n", type=int, default=6)
        p.add_argument("--max-depth", type=int, default=2)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int)
        p.add_argument("--trace", action="store_true")

    p_check = sub.add_parser("check", help="decide satisfiability")
    p_check.add_argument("files", nargs="+")
    common(p_check)

    p_interp = sub.add_parser("interpolate", help="compute a verified interpolant")
    p_interp.add_argument("files", nargs=1)
    common(p_interp)

    p_beth = sub.add_parser("beth", help="definability report")
    p_beth.add_argument("files", nargs=1)
    common(p_beth)

    p_oracle = sub.add_parser("oracle", help="bounded model search")
    p_oracle.add_argument("files", nargs=1)
    common(p_oracle)

    p_bench = sub.add_parser("bench", help="scaling-family size/time table")
    p_bench.add_argument("--m-max", type=int, default=10)
    p_bench.add_argument("--out-dir", default=".")
    common(p_bench)

    return top


def config_from_args(args: argparse.Namespace) -> RunConfig:
    backend = getattr(args, "backend", "internal")
    adapter_cmd: list[str] = []
    env_cmd = os.environ.get("CARD_INTERP_SOLVER")
    if env_cmd:
        backend = "external"
        adapter_cmd = env_cmd.split()
    elif backend.startswith("external:"):
        adapter_cmd = backend[len("external:"):].split()
        backend = "external"
    elif backend not in ("internal", "external"):
        raise CardError(f"unknown backend {backend!r}")
    cfg = RunConfig(
        command=args.command,
        paths=list(getattr(args, "files", [])),
        index_theory=getattr(args, "index_theory", None),
        backend=backend,
        adapter_cmd=adapter_cmd,
        timeout=getattr(args, "timeout", 30.0),
        verify=getattr(args, "verify", False),
        window=tuple(getattr(args, "window", (-2, 4))),
        elems=getattr(args, "elems", 3),
        max_len=getattr(args, "max_len", 3),
        max_n=getattr(args, "max_n", 6),
        max_depth=getattr(args, "max_depth", 2),
        jobs=getattr(args, "jobs", 1),
        seed=getattr(args, "seed", None),
        trace=getattr(args, "trace", False),
        out_dir=getattr(args, "out_dir", "."),
        m_max=getattr(args, "m_max", 10),
    )
    cfg.validate()
    if cfg.seed is not None:
        random.seed(cfg.seed)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.command == "bench":
            return cmd_bench(cfg)
        if cfg.command == "interpolate":
            return cmd_interpolate(cfg.paths[0], cfg)
        if cfg.command == "beth":
            return cmd_beth(cfg.paths[0], cfg)
        if cfg.command == "oracle":
            return cmd_oracle(cfg.paths[0], cfg)
        # check, possibly a batch
        if len(cfg.paths) == 1:
            return cmd_check_one(cfg.paths[0], cfg)
        results = []
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(pool.map(_run_one, [(p, cfg) for p in cfg.paths]))
        else:
            results = [_run_one((p, cfg)) for p in cfg.paths]
        failed = False
        for path, code, output in results:
            sys.stdout.write(f"{path}: {output}")
            failed |= code == 1
        return 1 if failed else 0
    except NotUnsat as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UnsupportedFragment as exc:
        print(
            f"error: {exc}\n"
            "interpolation over constant arrays or free symbols is an open extension",
            file=sys.stderr,
        )
        return 2
    except (ParseError, OSError, CardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
