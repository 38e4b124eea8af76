import random

import pytest

from rangeroots import oracle
from rangeroots.catalog import ConstraintSpec, post_global
from rangeroots.core import NOOP, values_of
from rangeroots.engine import Model, Propagator, solve
from rangeroots.harness.binary import TablePropagator
from rangeroots.sets import CardLink, IntMemberLink, SubsetLink


class Recorder(Propagator):
    """Counts propagate calls and logs the deltas it was handed."""

    def __init__(self, var):
        super().__init__()
        self.var = var
        self.calls = 0
        self.deltas = []

    def subscriptions(self):
        yield ("int", self.var)

    def propagate(self, store):
        self.calls += 1
        self.deltas.extend(self.take_pending())
        return NOOP


def test_subset_chain_reaches_fixpoint():
    m = Model(1, 3)
    a = m.set_var((1,), (1, 2, 3))
    b = m.set_var((), (1, 2, 3))
    c = m.set_var((), (1, 2, 3))
    m.post(SubsetLink(a, b))
    m.post(SubsetLink(b, c))
    assert m.fixpoint()
    st = m.store
    assert st.lb_values(b) == [1] and st.lb_values(c) == [1]
    st.exclude_set(c, 2)
    assert m.fixpoint()
    assert st.ub_values(b) == [1, 3]
    assert st.ub_values(a) == [1, 3]


def test_batched_events_wake_once():
    m = Model(1, 5)
    x = m.int_var((1, 2, 3, 4, 5))
    rec = m.post(Recorder(x))
    assert m.fixpoint()
    assert rec.calls == 1  # registration run only
    st = m.store
    st.remove_int(x, 1)
    st.remove_int(x, 2)
    st.remove_int(x, 3)
    assert m.fixpoint()
    assert rec.calls == 2
    assert rec.deltas == [("rm", x, 1), ("rm", x, 2), ("rm", x, 3)]


def test_fixpoint_idempotent():
    m = Model(1, 3)
    xs = tuple(m.int_var((1, 2, 3)) for _ in range(3))
    post_global(m, ConstraintSpec("alldifferent", xs=xs))
    assert m.fixpoint()
    snap = m.store.snapshot()
    m.engine.wake_all()
    assert m.fixpoint()
    assert m.store.snapshot() == snap


def build_mixed(seed):
    m = Model(1, 4, shuffle=random.Random(seed) if seed is not None else None)
    xs = (m.int_var((1, 2)), m.int_var((2, 3, 4)), m.int_var((1, 3, 4)))
    s = m.set_var((), (1, 2, 3))
    t = m.set_var((2,), (1, 2, 3, 4))
    post_global(m, ConstraintSpec("roots", xs=xs, svars=(s, t)))
    n = m.int_var((2, 3))
    m.post(CardLink(s, ("var", n), "="))
    m.post(IntMemberLink(xs[0], t))
    return m


def test_fixpoint_confluent_under_shuffle():
    reference = build_mixed(None)
    assert reference.fixpoint()
    want = reference.store.snapshot()
    for seed in range(8):
        m = build_mixed(seed)
        assert m.fixpoint()
        assert m.store.snapshot() == want


def test_failed_fixpoint_clears_queue():
    m = Model(1, 2)
    xs = (m.int_var((1,)), m.int_var((1,)))
    post_global(m, ConstraintSpec("alldifferent", xs=xs))
    assert not m.fixpoint()
    assert m.store.failed
    assert all(not q for q in m.engine._queues)


def test_register_rejects_unknown_variable():
    m = Model(1, 3)
    with pytest.raises(ValueError):
        m.post(Recorder(7))


def test_solve_sat_permutation():
    m = Model(1, 3)
    xs = tuple(m.int_var((1, 2, 3)) for _ in range(3))
    spec = ConstraintSpec("permutation", xs=xs, values=(1, 2, 3))
    post_global(m, spec)
    res = m.solve(strategy="dom")
    assert res.status == "sat"
    assert sorted(res.ints[x] for x in xs) == [1, 2, 3]
    assert res.stats.solutions == 1
    assert oracle.holds(spec, res.ints, res.sets)


def test_solve_unsat():
    m = Model(1, 3)
    xs = tuple(m.int_var((1, 2)) for _ in range(3))
    post_global(m, ConstraintSpec("alldifferent", xs=xs))
    res = m.solve(strategy="lex")
    assert res.status == "unsat"
    assert res.ints is None


def contradictory_pair():
    # x = y and x != y, both arc consistent until a value is tried
    m = Model(1, 3)
    x = m.int_var((1, 2, 3))
    y = m.int_var((1, 2, 3))
    eq = tuple((v, v) for v in (1, 2, 3))
    neq = tuple((a, b) for a in (1, 2, 3) for b in (1, 2, 3) if a != b)
    m.post(TablePropagator(m.store, x, y, eq))
    m.post(TablePropagator(m.store, x, y, neq))
    return m


def test_solve_cutoff_on_fail_limit():
    res = contradictory_pair().solve(strategy="lex", fail_limit=1)
    assert res.status == "cutoff"
    assert res.stats.fails == 2


def test_solve_cutoff_on_time_limit():
    res = contradictory_pair().solve(strategy="lex", time_limit=0.0)
    assert res.status == "cutoff"


def test_solve_unsat_by_search():
    res = contradictory_pair().solve(strategy="lex")
    assert res.status == "unsat"
    assert res.stats.fails == 3


def test_solve_set_strategy():
    m = Model(1, 3)
    s = m.set_var((), (1, 2, 3))
    m.post(CardLink(s, ("const", 2), "="))
    res = m.solve(strategy="set")
    assert res.status == "sat"
    assert len(res.sets[s]) == 2


def test_solve_custom_strategy():
    m = Model(1, 3)
    xs = tuple(m.int_var((1, 2, 3)) for _ in range(3))
    post_global(m, ConstraintSpec("alldifferent", xs=xs))

    def biggest_value_first(store):
        for var in range(store.num_int_vars):
            if store.int_size(var) > 1:
                return [("int", var, v) for v in reversed(store.int_values(var))]
        return None

    res = m.solve(strategy=biggest_value_first)
    assert res.status == "sat"
    assert res.ints[xs[0]] == 3


def test_solution_validation_catches_bad_models():
    m = Model(1, 2)
    x = m.int_var((1,))
    y = m.int_var((1,))
    # spec registered without any propagator enforcing it
    m.specs.append(ConstraintSpec("alldifferent", xs=(x, y)))
    with pytest.raises(RuntimeError):
        m.solve()
    m2 = Model(1, 2)
    x = m2.int_var((1,))
    y = m2.int_var((1,))
    m2.specs.append(ConstraintSpec("alldifferent", xs=(x, y)))
    assert m2.solve(validate=False).status == "sat"
