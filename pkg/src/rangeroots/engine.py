"""Propagation engine and depth-first search.

Propagators subscribe to variable events and are scheduled through a FIFO
queue with two priority bands: band 0 for cheap constraint-by-constraint
rules, band 1 for the flow-based propagators.  A propagator sits in the
queue at most once.  Failure empties the queue and no propagator runs on a
failed store.

Search is iterative depth-first with trail checkpoints.  Strategies cover
every variable of the store (hidden decomposition variables included), so a
leaf is always a full assignment; solutions are validated against the
declarative semantics of the posted constraints before being returned.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .core import (
    CHANGED,
    FAILED,
    INT_FIXED,
    INT_REMOVED,
    NOOP,
    SET_EXCLUDED,
    SET_INCLUDED,
    Store,
    values_of,
)


class Propagator:
    """Base class; subclasses fill in subscriptions() and propagate()."""

    priority = 0

    def __init__(self):
        self._queued = False
        self.pending = []
        self.wakes = 0

    def subscriptions(self):
        """Yield ("int", var), ("set", sv) or ("set_elem", sv, value) keys."""
        return ()

    def propagate(self, store):
        raise NotImplementedError

    def take_pending(self):
        out = self.pending
        self.pending = []
        return out


class Engine:
    def __init__(self, store: Store, shuffle=None):
        self.store = store
        self.shuffle = shuffle
        self.props = []
        self._int_subs = {}
        self._set_subs = {}
        self._elem_subs = {}
        self._queues = (deque(), deque())
        store.on_event = self._on_event

    def register(self, prop: Propagator):
        """Wire a propagator's subscriptions and schedule its first run."""
        store = self.store
        for key in prop.subscriptions():
            kind = key[0]
            if kind == "int":
                var = key[1]
                if not 0 <= var < store.num_int_vars:
                    raise ValueError(f"unknown integer variable id {var}")
                self._int_subs.setdefault(var, []).append(prop)
            elif kind == "set":
                sv = key[1]
                if not 0 <= sv < store.num_set_vars:
                    raise ValueError(f"unknown set variable id {sv}")
                self._set_subs.setdefault(sv, []).append(prop)
            elif kind == "set_elem":
                sv, value = key[1], key[2]
                if not 0 <= sv < store.num_set_vars:
                    raise ValueError(f"unknown set variable id {sv}")
                self._elem_subs.setdefault((sv, value), []).append(prop)
            else:
                raise ValueError(f"bad subscription {key!r}")
        self.props.append(prop)
        self._schedule(prop)
        return prop

    def _schedule(self, prop):
        prop.wakes += 1
        if not prop._queued:
            prop._queued = True
            self._queues[prop.priority].append(prop)

    def _on_event(self, ev):
        kind, owner, value = ev
        if kind == INT_REMOVED or kind == INT_FIXED:
            for prop in self._int_subs.get(owner, ()):
                if kind == INT_REMOVED:
                    prop.pending.append(("rm", owner, value))
                self._schedule(prop)
            return
        tag = "lb" if kind == SET_INCLUDED else "ub"
        for prop in self._set_subs.get(owner, ()):
            prop.pending.append((tag, owner, value))
            self._schedule(prop)
        subs = self._elem_subs.get((owner, value))
        if subs:
            for prop in subs:
                prop.pending.append((tag, owner, value))
                self._schedule(prop)

    def _pop(self):
        for q in self._queues:
            if q:
                if self.shuffle is not None:
                    q.rotate(-self.shuffle.randrange(len(q)))
                return q.popleft()
        return None

    def fixpoint(self):
        """Run queued propagators to quiescence.  True iff still consistent."""
        store = self.store
        while not store.failed:
            prop = self._pop()
            if prop is None:
                return True
            prop._queued = False
            prop.propagate(store)
        self.reset_queue()
        return False

    def reset_queue(self):
        for q in self._queues:
            q.clear()
        for prop in self.props:
            prop._queued = False
            prop.pending.clear()

    def wake_all(self):
        for prop in self.props:
            self._schedule(prop)


@dataclass
class SearchStats:
    nodes: int = 0
    fails: int = 0
    solutions: int = 0
    time: float = 0.0


@dataclass
class SearchResult:
    status: str  # "sat", "unsat" or "cutoff"
    ints: dict | None
    sets: dict | None
    stats: SearchStats = field(default_factory=SearchStats)


class Model:
    """A store, its engine, and the declarative specs posted so far."""

    def __init__(self, lo, hi, shuffle=None):
        self.store = Store(lo, hi)
        self.engine = Engine(self.store, shuffle=shuffle)
        self.specs = []

    def int_var(self, values, name=None):
        return self.store.new_int_var(values, name)

    def set_var(self, lb, ub, name=None):
        return self.store.new_set_var(lb, ub, name)

    def post(self, prop):
        self.engine.register(prop)
        return prop

    def fixpoint(self):
        return self.engine.fixpoint()

    def solve(self, strategy="dom", time_limit=None, fail_limit=None, validate=True):
        return solve(self, strategy, time_limit, fail_limit, validate)


# ----------------------------------------------------------------------
# branching strategies


def _set_branches(store, sv):
    undecided = store.ub_mask(sv) & ~store.lb_mask(sv)
    elem = (undecided & -undecided).bit_length() - 1 + store.base
    return [("in", sv, elem), ("out", sv, elem)]


def _int_branches(store, var):
    return [("int", var, v) for v in store.int_values(var)]


def _pick_min_dom_int(store):
    best, best_size = None, None
    for var in range(store.num_int_vars):
        size = store.int_size(var)
        if size > 1 and (best_size is None or size < best_size):
            best, best_size = var, size
    return best


def _pick_min_set(store):
    best, best_width = None, None
    for sv in range(store.num_set_vars):
        width = (store.ub_mask(sv) & ~store.lb_mask(sv)).bit_count()
        if width > 0 and (best_width is None or width < best_width):
            best, best_width = sv, width
    return best


def branches_dom(store):
    var = _pick_min_dom_int(store)
    if var is not None:
        return _int_branches(store, var)
    sv = _pick_min_set(store)
    if sv is not None:
        return _set_branches(store, sv)
    return None


def branches_lex(store):
    for var in range(store.num_int_vars):
        if store.int_size(var) > 1:
            return _int_branches(store, var)
    for sv in range(store.num_set_vars):
        if store.lb_mask(sv) != store.ub_mask(sv):
            return _set_branches(store, sv)
    return None


def branches_set_first(store):
    sv = _pick_min_set(store)
    if sv is not None:
        return _set_branches(store, sv)
    var = _pick_min_dom_int(store)
    if var is not None:
        return _int_branches(store, var)
    return None


STRATEGIES = {"dom": branches_dom, "lex": branches_lex, "set": branches_set_first}


def _apply(store, decision):
    kind, owner, value = decision
    if kind == "int":
        return store.assign_int(owner, value)
    if kind == "in":
        return store.include_set(owner, value)
    return store.exclude_set(owner, value)


def _extract(store):
    ints = {var: store.int_value(var) for var in range(store.num_int_vars)}
    sets = {sv: store.set_value(sv) for sv in range(store.num_set_vars)}
    return ints, sets


def solve(model: Model, strategy="dom", time_limit=None, fail_limit=None, validate=True):
    """Depth-first search over the model.  Decisions are taken from the
    strategy, values tried in increasing order, Include before Exclude."""
    branch = STRATEGIES[strategy] if isinstance(strategy, str) else strategy
    store, engine = model.store, model.engine
    stats = SearchStats()
    t0 = time.perf_counter()

    def done(status, ints=None, sets=None):
        stats.time = time.perf_counter() - t0
        return SearchResult(status, ints, sets, stats)

    stats.nodes += 1
    if not engine.fixpoint():
        stats.fails += 1
        return done("unsat")

    frames = []
    todo = branch(store)
    if todo is None:
        ints, sets = _extract(store)
        _validate(model, ints, sets, validate)
        stats.solutions = 1
        return done("sat", ints, sets)
    frames.append((iter(todo), store.checkpoint()))

    while frames:
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            return done("cutoff")
        if fail_limit is not None and stats.fails > fail_limit:
            return done("cutoff")
        it, cp = frames[-1]
        decision = next(it, None)
        if decision is None:
            frames.pop()
            store.rollback(cp)
            engine.reset_queue()
            continue
        store.rollback(cp)
        engine.reset_queue()
        stats.nodes += 1
        if _apply(store, decision) == FAILED or not engine.fixpoint():
            stats.fails += 1
            engine.reset_queue()
            store.failed = False
            continue
        todo = branch(store)
        if todo is None:
            ints, sets = _extract(store)
            _validate(model, ints, sets, validate)
            stats.solutions = 1
            return done("sat", ints, sets)
        frames.append((iter(todo), store.checkpoint()))
    return done("unsat")


def _validate(model, ints, sets, enabled):
    if not enabled or not model.specs:
        return
    from . import oracle

    for spec in model.specs:
        if not oracle.holds(spec, ints, sets):
            raise RuntimeError(f"search produced an invalid solution for {spec}")
