"""Command line entry point.

Verbs: solve and check instance files, generate benchmark instances,
run experiments.  Exit codes: 0 solved/consistent, 1 unsatisfiable,
2 cutoff or exceeded budget, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys

from .. import oracle
from ..core import values_of
from ..oracle import CapExceeded
from ..roots import BC, HC
from .experiments import EXPERIMENTS, run_experiment
from .generators import model_b_instance, mystery_instance, roots_instance
from .instances import InstanceError, build_model, emit_instance, parse_instance


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _build_parser():
    top = _Parser(prog="rangeroots", description=__doc__)
    sub = top.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="search for a solution of an instance file")
    p.add_argument("file")
    p.add_argument("--strategy", choices=("dom", "lex", "set"), default="dom")
    p.add_argument("--time", type=float, default=None, help="time limit in seconds")
    p.add_argument("--fails", type=int, default=None, help="fail limit")
    p.add_argument("--bc", action="store_true", help="bound reasoning on preimage constraints")

    p = sub.add_parser("check", help="propagate once and compare with the oracle")
    p.add_argument("file")
    p.add_argument("--bc", action="store_true")

    p = sub.add_parser("gen", help="generate an instance file")
    kinds = p.add_subparsers(dest="kind", required=True)
    g = kinds.add_parser("roots")
    g.add_argument("n", type=int)
    g.add_argument("m", type=int)
    g.add_argument("k", type=int)
    g.add_argument("r", type=int)
    g.add_argument("--seed", default="0")
    g.add_argument("--free-t", action="store_true", help="leave T unconstrained")
    g.add_argument("--out", default=None)
    g = kinds.add_parser("modelb")
    for name in ("nx", "ny", "nz", "d", "m1", "t", "m2"):
        g.add_argument(name, type=int)
    grp = g.add_mutually_exclusive_group(required=True)
    grp.add_argument("--overlap", action="store_true")
    grp.add_argument("--disjoint", action="store_true")
    g.add_argument("--seed", default="0")
    g.add_argument("--out", default=None)
    g = kinds.add_parser("mystery")
    g.add_argument("s", type=int)
    g.add_argument("--seed", default="0")
    g.add_argument("--among", choices=("roots", "sum"), default="roots")
    g.add_argument("--out", default=None)

    p = sub.add_parser("exp", help="run a named experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--out", default=None, help="report path (default NAME.tsv)")
    p.add_argument("--seed", default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--cls", default=None, help="shape class for the uses experiments")
    p.add_argument("--t", type=int, default=None, help="forbidden tuples for uses-solve")
    p.add_argument("--size", type=int, default=None, help="salesladies for mystery")
    p.add_argument("--depth", type=int, default=None, help="assignments for uses-pruning")
    p.add_argument("--time", type=float, default=None, help="per-search time limit")
    p.add_argument("--fails", type=int, default=None, help="per-search fail limit")
    p.add_argument("--budget", type=float, default=None, help="overall budget in seconds")
    return top


def _print_solution(built):
    store = built.model.store
    for name, var in built.int_ids.items():
        print(f"{name} = {store.int_value(var)}")
    for name, sv in built.set_ids.items():
        vals = sorted(store.set_value(sv))
        print(f"{name} = {{{','.join(str(v) for v in vals)}}}")


def _cmd_solve(args):
    built = build_model(parse_instance(args.file), mode=BC if args.bc else HC)
    res = built.model.solve(strategy=args.strategy, time_limit=args.time, fail_limit=args.fails)
    if res.status == "sat":
        _print_solution(built)
        print(f"# nodes={res.stats.nodes} fails={res.stats.fails} time={res.stats.time:.3f}s")
        return 0
    print(res.status)
    print(f"# nodes={res.stats.nodes} fails={res.stats.fails} time={res.stats.time:.3f}s")
    return 1 if res.status == "unsat" else 2


def _fmt_set(values):
    return "{" + ",".join(str(v) for v in sorted(values)) + "}"


def _cmd_check(args):
    built = build_model(parse_instance(args.file), mode=BC if args.bc else HC)
    model = built.model
    store = model.store
    snap = store.clone()
    ok = model.fixpoint()
    try:
        if args.bc:
            res = oracle.filter_bc(model.specs, snap)
        else:
            res = oracle.filter_hc(model.specs, snap)
    except CapExceeded as exc:
        print(f"oracle budget exceeded: {exc}", file=sys.stderr)
        return 2
    if not res.feasible:
        print("oracle: infeasible")
        print("propagation: " + ("failed" if not ok else "did not fail"))
        return 1
    if not ok:
        print("propagation failed on a feasible instance (unsound)")
        return 1
    weaker = 0
    for name, var in built.int_ids.items():
        if var not in res.int_dom:
            continue
        have = store.int_values(var)
        want = values_of(res.int_dom[var], store.base)
        mark = "==" if have == want else "<"
        weaker += mark == "<"
        print(f"int {name}: {_fmt_set(have)} {mark} oracle {_fmt_set(want)}")
    for name, sv in built.set_ids.items():
        if sv not in res.set_lb:
            continue
        have = (store.lb_values(sv), store.ub_values(sv))
        want = (
            values_of(res.set_lb[sv], store.base),
            values_of(res.set_ub[sv], store.base),
        )
        mark = "==" if have == want else "<"
        weaker += mark == "<"
        print(
            f"set {name}: lb {_fmt_set(have[0])} ub {_fmt_set(have[1])} {mark}"
            f" oracle lb {_fmt_set(want[0])} ub {_fmt_set(want[1])}"
        )
    print("consistent; " + ("exact fixpoint" if not weaker else f"weaker on {weaker} variables"))
    return 0


def _cmd_gen(args):
    if args.kind == "roots":
        inst = roots_instance(args.n, args.m, args.k, args.r, args.seed, free_t=args.free_t)
    elif args.kind == "modelb":
        inst = model_b_instance(
            args.nx, args.ny, args.nz, args.d, args.m1, args.t, args.m2,
            overlap=args.overlap, seed=args.seed,
        )
    else:
        inst = mystery_instance(args.s, args.seed, among_via=args.among)
    text = emit_instance(inst)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_EXP_KEYS = {
    "roots-miss-rate": {"seed", "instances", "budget"},
    "roots-miss-rate-freeT": {"seed", "instances", "budget"},
    "uses-pruning": {"seed", "instances", "budget", "cls", "max_depth"},
    "uses-solve": {"seed", "instances", "budget", "cls", "t", "time_limit", "fail_limit"},
    "mystery": {"seed", "instances", "budget", "size", "time_limit"},
}


def _cmd_exp(args, parser):
    params = {
        "seed": args.seed,
        "instances": args.instances,
        "cls": args.cls,
        "t": args.t,
        "size": args.size,
        "max_depth": args.depth,
        "time_limit": args.time,
        "fail_limit": args.fails,
        "budget": args.budget,
    }
    params = {k: v for k, v in params.items() if v is not None}
    extra = set(params) - _EXP_KEYS[args.name]
    if extra:
        parser.error(f"{args.name} does not take: {', '.join(sorted(extra))}")
    out = args.out or f"{args.name}.tsv"
    report = run_experiment(args.name, out=out, **params)
    print(f"wrote {out} ({len(report.rows)} rows)")
    for key, value in report.meta.items():
        print(f"# {key}={value}")
    return 2 if report.meta.get("partial") else 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.cmd == "solve":
            return _cmd_solve(args)
        if args.cmd == "check":
            return _cmd_check(args)
        if args.cmd == "gen":
            return _cmd_gen(args)
        return _cmd_exp(args, parser)
    except (InstanceError, ValueError, OSError) as exc:
        print(f"rangeroots: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
