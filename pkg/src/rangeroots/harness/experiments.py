"""Experiment drivers and TSV reports.

Five experiments: the preimage miss-rate grid (plus its free-T variant),
pruning-ratio trajectories on random binary CSPs with image-subset side
constraints, full search on the same model family, and the mystery
shopper visit plans.  Every report row carries the seed that regenerates
its instance; a `budget` argument stops a run early and flags the report
as partial.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .. import oracle
from ..catalog import ConstraintSpec, post_global
from ..engine import Model
from ..sets import IntMemberLink, SubsetLink
from .binary import TablePropagator, ValueCover
from .generators import model_b_instance, mystery_instance, roots_instance, shopper_count
from .instances import build_model


@dataclass
class Report:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _cell(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_tsv(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# experiment={report.name}\n")
        for key, value in report.meta.items():
            fh.write(f"# {key}={_cell(value)}\n")
        fh.write("\t".join(report.columns) + "\n")
        for row in report.rows:
            fh.write("\t".join(_cell(c) for c in row) + "\n")


# ----------------------------------------------------------------------
# miss-rate grid


def _atom_misses(init, store, ok, res):
    """Count decided atoms: (oracle-pruned, missed by propagation, and
    pruned by propagation but not by the oracle, which would be a bug)."""
    infeasible = not res.feasible
    failed = not ok
    pruned = missed = over = 0
    for var in range(init.num_int_vars):
        m0 = init.int_mask(var)
        o_rm = m0 if infeasible else m0 & ~res.int_dom.get(var, m0)
        p_rm = m0 if failed else m0 & ~store.int_mask(var)
        pruned += o_rm.bit_count()
        missed += (o_rm & ~p_rm).bit_count()
        over += (p_rm & ~o_rm).bit_count()
    for sv in range(init.num_set_vars):
        lb0, ub0 = init.lb_mask(sv), init.ub_mask(sv)
        free0 = ub0 & ~lb0
        if infeasible:
            o_dec = free0
        else:
            o_dec = free0 & (~res.set_ub.get(sv, ub0) | res.set_lb.get(sv, lb0))
        if failed:
            p_dec = free0
        else:
            p_dec = free0 & (~store.ub_mask(sv) | store.lb_mask(sv))
        pruned += o_dec.bit_count()
        missed += (o_dec & ~p_dec).bit_count()
        over += (p_dec & ~o_dec).bit_count()
    return pruned, missed, over


def _exp_roots_miss(seed=0, instances=100, free_t=False, budget=None):
    t0 = time.perf_counter()
    report = Report(
        "roots-miss-rate-freeT" if free_t else "roots-miss-rate",
        ("n", "m", "k", "r", "instances", "pruned", "missed", "overpruned", "rate", "seed"),
        meta={"instances_per_cell": instances, "free_t": free_t},
    )
    combo_missed = {}
    total_pruned = total_missed = 0
    partial = False
    for n in (4, 5, 6):
        for m in (4, 5, 6):
            for k in range(1, min(n, m)):
                for r in range(1, n * (m - 1) + 1):
                    if budget is not None and time.perf_counter() - t0 > budget:
                        partial = True
                        break
                    cell_seed = f"{seed}:{n}:{m}:{k}:{r}"
                    pruned = missed = over = 0
                    for i in range(instances):
                        inst = roots_instance(n, m, k, r, f"{cell_seed}:{i}", free_t)
                        built = build_model(inst)
                        model = built.model
                        snap = model.store.clone()
                        res = oracle.filter_hc(model.specs, snap)
                        ok = model.fixpoint()
                        p, ms, ov = _atom_misses(snap, model.store, ok, res)
                        pruned += p
                        missed += ms
                        over += ov
                    rate = missed / pruned if pruned else 0.0
                    report.rows.append(
                        (n, m, k, r, instances, pruned, missed, over, rate, cell_seed)
                    )
                    key = (n, m, k)
                    combo_missed[key] = combo_missed.get(key, 0) + missed
                    total_pruned += pruned
                    total_missed += missed
                if partial:
                    break
            if partial:
                break
        if partial:
            break
    report.meta["combos"] = len(combo_missed)
    report.meta["perfect_combos"] = sum(1 for v in combo_missed.values() if v == 0)
    report.meta["miss_rate"] = total_missed / total_pruned if total_pruned else 0.0
    if partial:
        report.meta["partial"] = "budget-exceeded"
    return report


# ----------------------------------------------------------------------
# pruning-ratio trajectories

USES_SHAPES = {
    "A": dict(nx=5, ny=10, nz=18, d=20, m1=35, t=150, m2=3, overlap=True),
    "B": dict(nx=3, ny=4, nz=23, d=20, m1=45, t=150, m2=3, overlap=False),
    "A-full": dict(nx=5, ny=10, nz=35, d=20, m1=70, t=150, m2=3, overlap=True),
    "B-full": dict(nx=5, ny=10, nz=45, d=20, m1=90, t=150, m2=3, overlap=False),
}

SOLVE_SHAPES = {
    "C": dict(nx=5, ny=10, nz=25, d=10, m1=40, m2=2, overlap=True),
    "D": dict(nx=5, ny=10, nz=30, d=10, m1=60, m2=2, overlap=False),
}


def _extract(inst):
    pos = {name: idx for idx, (name, _) in enumerate(inst.ints)}
    tables, scopes = [], []
    for con in inst.cons:
        if con.tag == "table":
            tables.append((pos[con.xs[0]], pos[con.xs[1]], con.values))
        else:
            scopes.append(
                (tuple(pos[n] for n in con.xs), tuple(pos[n] for n in con.ys))
            )
    return pos, tables, scopes


def _post_uses(model, scopes, encoding):
    store = model.store
    for xs, ys in scopes:
        if encoding == "range":
            post_global(model, ConstraintSpec("uses_range", xs=xs, ys=ys))
            continue
        tx = model.set_var(0, store.universe_mask)
        ty = model.set_var(0, store.universe_mask)
        for v in xs:
            model.post(IntMemberLink(v, tx))
        for v in ys:
            model.post(IntMemberLink(v, ty))
        model.post(ValueCover(store, xs, tx))
        model.post(ValueCover(store, ys, ty))
        model.post(SubsetLink(ty, tx))
        model.specs.append(ConstraintSpec("uses_range", xs=xs, ys=ys))


def _measure_state(inst, masks, scopes, encoding):
    nz = len(masks)
    d = len(inst.ints[0][1])
    model = Model(inst.lo, inst.hi)
    for mask in masks:
        model.int_var(mask)
    _post_uses(model, scopes, encoding)
    if not model.fixpoint():
        return 1.0
    left = sum(model.store.int_size(v) for v in range(nz))
    return 1.0 - left / (nz * d)


def _exp_uses_pruning(cls="A", instances=100, seed=0, max_depth=14, budget=None):
    t0 = time.perf_counter()
    shape = USES_SHAPES[cls]
    report = Report(
        "uses-pruning",
        ("cls", "instance", "depth", "range_ratio", "decomp_ratio", "seed"),
        meta={"cls": cls, "instances": instances, **shape},
    )
    sums = [[0.0, 0.0] for _ in range(max_depth + 1)]
    done = 0
    for i in range(instances):
        if budget is not None and time.perf_counter() - t0 > budget:
            report.meta["partial"] = "budget-exceeded"
            break
        iseed = f"{seed}:uses:{cls}:{i}"
        inst = model_b_instance(seed=iseed, **shape)
        _, tables, scopes = _extract(inst)
        nz = len(inst.ints)
        bm = Model(inst.lo, inst.hi)
        for name, vals in inst.ints:
            bm.int_var(vals, name)
        for a, b, pairs in tables:
            bm.post(TablePropagator(bm.store, a, b, pairs))
        alive = bm.fixpoint()
        rng = random.Random(f"{iseed}:traj")
        for depth in range(1, max_depth + 1):
            if alive:
                free = [v for v in range(nz) if bm.store.int_size(v) > 1]
                if free:
                    var = rng.choice(free)
                    bm.store.assign_int(var, rng.choice(bm.store.int_values(var)))
                    alive = bm.fixpoint()
            if alive:
                masks = [bm.store.int_mask(v) for v in range(nz)]
                rr = _measure_state(inst, masks, scopes, "range")
                rd = _measure_state(inst, masks, scopes, "decomp")
            else:
                rr = rd = 1.0
            report.rows.append((cls, i, depth, rr, rd, iseed))
            sums[depth][0] += rr
            sums[depth][1] += rd
        done += 1
    if done:
        report.meta["mean_range"] = ",".join(f"{sums[q][0] / done:.4f}" for q in range(1, max_depth + 1))
        report.meta["mean_decomp"] = ",".join(f"{sums[q][1] / done:.4f}" for q in range(1, max_depth + 1))
    return report


# ----------------------------------------------------------------------
# search experiments


def _exp_uses_solve(cls="C", t=40, instances=10, seed=0, time_limit=30.0, fail_limit=20000, budget=None):
    t0 = time.perf_counter()
    shape = SOLVE_SHAPES[cls]
    report = Report(
        "uses-solve",
        ("cls", "t", "instance", "model", "status", "fails", "nodes", "time", "seed"),
        meta={"cls": cls, "t": t, "instances": instances, **shape},
    )
    for i in range(instances):
        if budget is not None and time.perf_counter() - t0 > budget:
            report.meta["partial"] = "budget-exceeded"
            break
        iseed = f"{seed}:solve:{cls}:{t}:{i}"
        inst = model_b_instance(seed=iseed, t=t, **shape)
        _, tables, scopes = _extract(inst)
        for encoding in ("range", "decomp"):
            model = Model(inst.lo, inst.hi)
            for name, vals in inst.ints:
                model.int_var(vals, name)
            for a, b, pairs in tables:
                model.post(TablePropagator(model.store, a, b, pairs))
                model.specs.append(ConstraintSpec("table", xs=(a, b), values=pairs))
            _post_uses(model, scopes, encoding)
            res = model.solve(strategy="dom", time_limit=time_limit, fail_limit=fail_limit)
            report.rows.append(
                (cls, t, i, f"uses-{encoding}", res.status, res.stats.fails,
                 res.stats.nodes, res.stats.time, iseed)
            )
    return report


def _mystery_branch(n_visit):
    """Visit variables in order, least-loaded shopper first.

    The per-value cardinalities leave no slack to waste, and the counting
    decomposition detects starvation late, so increasing value order
    thrashes.  Balancing the load as we assign keeps search nearly
    backtrack-free; both model variants get the same ordering."""

    def branch(store):
        var = None
        for v in range(store.num_int_vars):
            if store.int_size(v) > 1:
                var = v
                break
        if var is None:
            for sv in range(store.num_set_vars):
                und = store.ub_mask(sv) & ~store.lb_mask(sv)
                if und:
                    elem = (und & -und).bit_length() - 1 + store.base
                    return [("in", sv, elem), ("out", sv, elem)]
            return None
        if var >= n_visit:
            return [("int", var, x) for x in store.int_values(var)]
        usage = {}
        for v in range(n_visit):
            if store.int_is_fixed(v):
                val = store.int_value(v)
                usage[val] = usage.get(val, 0) + 1
        vals = sorted(store.int_values(var), key=lambda x: (usage.get(x, 0), x))
        return [("int", var, x) for x in vals]

    return branch


def _exp_mystery(size=10, instances=10, seed=0, time_limit=60.0, strategy="balanced", budget=None):
    t0 = time.perf_counter()
    report = Report(
        "mystery",
        ("size", "instance", "model", "status", "fails", "nodes", "time", "seed"),
        meta={
            "size": size,
            "shoppers": shopper_count(size),
            "shopper_rule": "s+2 rounded up to a multiple of 4",
            "strategy": strategy,
        },
    )
    names = {"roots": "alld-roots-roots", "sum": "alld-gcc-amongsum"}
    branch = _mystery_branch(4 * size) if strategy == "balanced" else strategy
    for i in range(instances):
        if budget is not None and time.perf_counter() - t0 > budget:
            report.meta["partial"] = "budget-exceeded"
            break
        iseed = f"{seed}:mystery:{size}:{i}"
        for variant in ("sum", "roots"):
            built = build_model(mystery_instance(size, iseed, among_via=variant))
            res = built.model.solve(strategy=branch, time_limit=time_limit)
            report.rows.append(
                (size, i, names[variant], res.status, res.stats.fails,
                 res.stats.nodes, res.stats.time, iseed)
            )
    return report


EXPERIMENTS = {
    "roots-miss-rate": _exp_roots_miss,
    "roots-miss-rate-freeT": lambda **kw: _exp_roots_miss(free_t=True, **kw),
    "uses-pruning": _exp_uses_pruning,
    "uses-solve": _exp_uses_solve,
    "mystery": _exp_mystery,
}


def run_experiment(name, out=None, **params):
    """Run one named experiment; writes a TSV report when out is given."""
    fn = EXPERIMENTS.get(name)
    if fn is None:
        raise ValueError(f"unknown experiment {name!r}")
    report = fn(**params)
    if out is not None:
        write_tsv(report, out)
    return report
