"""Decompositions: gap instances, equivalence sweeps, registry checks."""

import dataclasses
import itertools
import random

import pytest

from rangeroots import oracle
from rangeroots.catalog import TAGS, ConstraintSpec, post_global
from rangeroots.engine import Model

from _cases import GAP_CASES, run_gap


def subsets(lo, hi):
    vals = range(lo, hi + 1)
    return [c for r in range(1, hi - lo + 2) for c in itertools.combinations(vals, r)]


def run_against_filter(m, spec, ivars):
    """Fixpoint must equal the enumeration filter on the spec's own vars."""
    snap = m.store.clone()
    ok = m.fixpoint()
    res = oracle.filter_hc(spec, snap)
    assert ok == res.feasible
    if ok:
        for v in ivars:
            assert m.store.int_mask(v) == res.int_dom[v]


# ----------------------------------------------------------------------
# proof gaps: the decomposition keeps what the proof says it keeps


@pytest.mark.parametrize("name,build", GAP_CASES, ids=[n for n, _ in GAP_CASES])
def test_gap_instance(name, build):
    run_gap(build)


# ----------------------------------------------------------------------
# decompositions that do reach the filter, swept exhaustively (small)


def test_permutation_matches_filter():
    doms = subsets(1, 3)
    for d1 in doms:
        for d2 in doms:
            for values in itertools.combinations((1, 2, 3), 2):
                m = Model(1, 3)
                xs = (m.int_var(d1, "X1"), m.int_var(d2, "X2"))
                spec = ConstraintSpec("permutation", xs=xs, values=values)
                post_global(m, spec)
                run_against_filter(m, spec, xs)
    for d1 in doms:
        for d2 in doms:
            for d3 in doms:
                m = Model(1, 3)
                xs = (m.int_var(d1, "X1"), m.int_var(d2, "X2"), m.int_var(d3, "X3"))
                spec = ConstraintSpec("permutation", xs=xs, values=(1, 2, 3))
                post_global(m, spec)
                run_against_filter(m, spec, xs)


def test_counting_matches_filter():
    doms = subsets(1, 3)
    ndoms = ((0,), (1,), (2,), (0, 2), (1, 2), (0, 1, 2))
    cases = [("among", vs) for vs in ((1,), (2, 3), (1, 3))]
    cases += [(tag, (d,)) for tag in ("atmost", "atleast") for d in (1, 2)]
    for tag, values in cases:
        for d1 in doms:
            for d2 in doms:
                for nd in ndoms:
                    m = Model(1, 3)
                    xs = (m.int_var(d1, "X1"), m.int_var(d2, "X2"))
                    n = m.int_var(nd, "N")
                    spec = ConstraintSpec(tag, xs=xs, values=values, counts=(("var", n),))
                    post_global(m, spec)
                    run_against_filter(m, spec, xs + (n,))


def test_counting_const_matches_filter():
    doms = subsets(1, 3)
    cases = [("among", vs) for vs in ((1,), (2, 3))]
    cases += [(tag, (2,)) for tag in ("atmost", "atleast")]
    for tag, values in cases:
        for d1 in doms:
            for d2 in doms:
                for k in (0, 1, 2):
                    m = Model(1, 3)
                    xs = (m.int_var(d1, "X1"), m.int_var(d2, "X2"))
                    spec = ConstraintSpec(tag, xs=xs, values=values, counts=(("const", k),))
                    post_global(m, spec)
                    run_against_filter(m, spec, xs)


def test_element_matches_filter():
    doms = subsets(1, 3)
    for d1 in doms:
        for d2 in doms:
            for di in ((1,), (2,), (1, 2)):
                for dr in doms:
                    m = Model(1, 3)
                    xs = (m.int_var(d1, "X1"), m.int_var(d2, "X2"))
                    i = m.int_var(di, "I")
                    r = m.int_var(dr, "R")
                    spec = ConstraintSpec("element", xs=xs, ys=(i, r))
                    post_global(m, spec)
                    run_against_filter(m, spec, xs + (i, r))


# ----------------------------------------------------------------------
# the two uses decompositions prune identically


def rand_uses_models(rng):
    n, mm_ = rng.randint(1, 3), rng.randint(1, 3)
    u = rng.randint(3, 4)
    xdoms = [tuple(v for v in range(1, u + 1) if rng.random() < 0.6) or (1,) for _ in range(n)]
    ydoms = [tuple(v for v in range(1, u + 1) if rng.random() < 0.6) or (u,) for _ in range(mm_)]
    out = []
    for tag in ("uses_range", "uses_roots"):
        m = Model(1, u)
        xs = tuple(m.int_var(d, f"X{i}") for i, d in enumerate(xdoms))
        ys = tuple(m.int_var(d, f"Y{i}") for i, d in enumerate(ydoms))
        spec = ConstraintSpec(tag, xs=xs, ys=ys)
        post_global(m, spec)
        out.append((m, xs, ys))
    return out


def test_uses_decompositions_agree():
    rng = random.Random(17)
    for _ in range(300):
        (m1, xs1, ys1), (m2, xs2, ys2) = rand_uses_models(rng)
        ok1, ok2 = m1.fixpoint(), m2.fixpoint()
        assert ok1 == ok2
        if ok1:
            for a, b in zip(xs1 + ys1, xs2 + ys2):
                assert m1.store.int_values(a) == m2.store.int_values(b)


# ----------------------------------------------------------------------
# open variants: sound, not complete


def _closed_open_gcc(spec, ints, sets, base):
    # what the union form actually enforces: every position holding a listed
    # value is in the scope, and each count tallies all positions
    union = 0
    for d, o in zip(spec.values, spec.counts):
        pre = [i for i, v in enumerate(spec.xs, start=1) if ints[v] == d]
        if len(pre) != (ints[o[1]] if o[0] == "var" else o[1]):
            return False
        for i in pre:
            union |= 1 << (i - base)
    return sets[spec.svars[0]] == union


oracle.register_checker("open_gcc_union", _closed_open_gcc)


def test_open_gcc_sound_for_union_form():
    rng = random.Random(19)
    for _ in range(200):
        u = 3
        n = rng.randint(1, 3)
        m = Model(0, u)
        xs = tuple(
            m.int_var(tuple(v for v in range(1, u + 1) if rng.random() < 0.6) or (1,), f"X{i}")
            for i in range(n)
        )
        sub = tuple(v for v in range(1, n + 1) if rng.random() < 0.8)
        slb = tuple(v for v in sub if rng.random() < 0.3)
        scope = m.set_var(slb, sub, "O")
        values = (1, 2)
        counts = tuple(("const", rng.randint(0, 2)) for _ in values)
        spec = ConstraintSpec("open_gcc", xs=xs, svars=(scope,), values=values, counts=counts)
        post_global(m, spec)
        snap = m.store.clone()
        ok = m.fixpoint()
        res = oracle.filter_hc(dataclasses.replace(spec, tag="open_gcc_union"), snap)
        if not res.feasible:
            continue
        assert ok
        for v in xs:
            assert res.int_dom[v] & ~m.store.int_mask(v) == 0
        assert m.store.lb_mask(scope) & ~res.set_lb[scope] == 0
        assert res.set_ub[scope] & ~m.store.ub_mask(scope) == 0


def test_open_gcc_strict_instance():
    # fixed scope, three values, flexible counts: the union form is already
    # at fixpoint while scoped counting pins the third variable
    m = Model(0, 3)
    x1 = m.int_var((1, 2), "X1")
    x2 = m.int_var((1, 2), "X2")
    x3 = m.int_var((1, 2, 3), "X3")
    scope = m.set_var((1, 2, 3), (1, 2, 3), "S")
    os = tuple(m.int_var((0, 1), f"O{j}") for j in (1, 2, 3))
    spec = ConstraintSpec(
        "open_gcc", xs=(x1, x2, x3), svars=(scope,), values=(1, 2, 3),
        counts=tuple(("var", o) for o in os),
    )
    post_global(m, spec)
    assert m.fixpoint()
    assert m.store.int_values(x3) == [1, 2, 3]
    for o in os:
        assert m.store.int_values(o) == [0, 1]
    res = oracle.filter_hc(spec, m.store)
    assert res.feasible
    assert res.int_dom[x3] == 1 << 3


def test_open_gcc_union_form_counts_unscoped_positions():
    # scoped counting would allow S={1} here, but the union form insists
    # every position holding a listed value joins the scope
    m = Model(0, 2)
    x1 = m.int_var((1,), "X1")
    x2 = m.int_var((1,), "X2")
    scope = m.set_var((), (1, 2), "S")
    spec = ConstraintSpec(
        "open_gcc", xs=(x1, x2), svars=(scope,), values=(1,), counts=(("const", 1),)
    )
    post_global(m, spec)
    assert not m.fixpoint()
    assert oracle.holds(spec, {x1: 1, x2: 1}, {scope: (1,)})


def test_open_alldifferent_strict_instance():
    # ground scope turns it into plain alldifferent; the image decomposition
    # cannot see the pigeonhole that removes 1 and 2 from the third variable
    m = Model(0, 4)
    x1 = m.int_var((1, 2), "X1")
    x2 = m.int_var((1, 2), "X2")
    x3 = m.int_var((1, 2, 3, 4), "X3")
    scope = m.set_var((1, 2, 3), (1, 2, 3), "S")
    spec = ConstraintSpec("open_alldifferent", xs=(x1, x2, x3), svars=(scope,))
    post_global(m, spec)
    assert m.fixpoint()
    assert m.store.int_values(x3) == [1, 2, 3, 4]
    res = oracle.filter_hc(spec, m.store)
    assert res.feasible
    assert res.int_dom[x3] == (1 << 3) | (1 << 4)


def test_open_alldifferent_sound():
    rng = random.Random(23)
    for _ in range(200):
        u = 3
        n = rng.randint(1, 3)
        m = Model(0, u)
        xs = tuple(
            m.int_var(tuple(v for v in range(1, u + 1) if rng.random() < 0.6) or (1,), f"X{i}")
            for i in range(n)
        )
        sub = tuple(v for v in range(1, n + 1) if rng.random() < 0.8)
        slb = tuple(v for v in sub if rng.random() < 0.3)
        scope = m.set_var(slb, sub, "O")
        spec = ConstraintSpec("open_alldifferent", xs=xs, svars=(scope,))
        post_global(m, spec)
        snap = m.store.clone()
        ok = m.fixpoint()
        res = oracle.filter_hc(spec, snap)
        if not ok:
            assert not res.feasible
            continue
        if not res.feasible:
            continue
        for v in xs:
            assert res.int_dom[v] & ~m.store.int_mask(v) == 0


def test_contiguity_needs_a_one():
    # the span decomposition defines max/min of the hit set, so a string
    # with no ones is rejected even though it is trivially contiguous
    m = Model(0, 2)
    xs = (m.int_var((0,), "X1"), m.int_var((0,), "X2"))
    spec = ConstraintSpec("contiguity", xs=xs)
    post_global(m, spec)
    assert not m.fixpoint()
    assert oracle.holds(spec, {xs[0]: 0, xs[1]: 0})


# ----------------------------------------------------------------------
# registry


def test_tags_registry():
    expected = {
        "alldifferent", "permutation", "nvalue", "among", "atmost", "atleast",
        "gcc", "disjoint", "uses_range", "uses_roots", "common",
        "assign_nvalues", "sym_alldifferent", "element", "contiguity",
        "open_gcc", "open_alldifferent", "among_sum", "range", "roots",
        "occurs", "card",
    }
    assert expected <= TAGS


def test_unknown_tag_named_in_error():
    m = Model(1, 3)
    x = m.int_var((1, 2), "X")
    with pytest.raises(ValueError, match="no_such_tag"):
        post_global(m, ConstraintSpec("no_such_tag", xs=(x,)))
