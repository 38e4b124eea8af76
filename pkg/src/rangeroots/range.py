"""Image propagation: coverage (occurs) and the one-pass range algorithm.

occurs_hc makes every value of T coverable: build the unit-capacity network,
saturate it, fail if some mandatory value cannot be covered, then drop the
arcs no maximum flow uses and trim ub(T) to the domain union.

propag_range runs four steps in one sequential pass, with no inner fixpoint:
shadow domains Y_i = D(X_i) + a dummy sentinel for each i in ub(S), the
coverage filter on (Y, T), one channelling sweep linking i in S with
Y_i in T, and a write-back to X_i wherever the dummy died.  The dummy dies
precisely when Y_i is needed to cover lb(T) in every solution.
"""

from __future__ import annotations

from .core import CHANGED, FAILED, NOOP, interval_mask, values_of
from .engine import Propagator
from .flow import (
    DEAD,
    ESC,
    OccursNetwork,
    classify_arcs,
    maximize_flow,
    repair_flow,
)


def occurs_filter(domains, lb_mask, base):
    """HC filter over raw domain masks.

    Returns (ok, filtered, net, flow); the returned network has the dead
    arcs already removed, so it stays aligned with the filtered masks.
    """
    union = 0
    for m in domains:
        union |= m
    if lb_mask & ~union:
        return False, domains, None, None
    net = OccursNetwork(domains, lb_mask, base)
    flow, saturated = maximize_flow(net)
    if not saturated:
        return False, domains, net, flow
    filtered = list(domains)
    for (v, k), label in classify_arcs(net, flow).items():
        if label == DEAD:
            filtered[k] &= ~(1 << (v - base))
            net.remove_arc(v, k)
    return True, filtered, net, flow


def occurs_hc(store, xs, tvar):
    """One-shot HC pass for the coverage constraint on store variables."""
    base = store.base
    ok, filtered, _, _ = occurs_filter(
        [store.int_mask(v) for v in xs], store.lb_mask(tvar), base
    )
    if not ok:
        return store.fail()
    changed = NOOP
    union = 0
    for var, mask in zip(xs, filtered):
        union |= mask
        out = store.restrict_int(var, mask)
        if out == FAILED:
            return FAILED
        if out == CHANGED:
            changed = CHANGED
    for v in values_of(store.ub_mask(tvar) & ~union, base):
        out = store.exclude_set(tvar, v)
        if out == FAILED:
            return FAILED
        changed = CHANGED
    return changed


def _check_distinct(xs):
    if len(set(xs)) != len(xs):
        raise ValueError("image constraints need pairwise distinct variables")


def _check_universe(store, xs):
    # the dummy sentinel sits just above the universe, so domains may not
    for var in xs:
        if store.int_mask(var) & ~store.universe_mask:
            raise ValueError("image constraints need domains inside the universe")


def _drop_arc(net, flow, v, k):
    arcs = net.adj.get(v)
    if arcs is not None and k in arcs:
        arcs.remove(k)
        if flow.match.get(v) == k:
            flow.unmatch(v)


def _pin_value(net, flow, v):
    """A value joined the mandatory set: it loses its escape."""
    if v not in net.adj:
        return False
    if net.escape[v]:
        net.escape[v] = False
        if flow.match.get(v) == ESC:
            flow.unmatch(v)
    return True


class OccursPropagator(Propagator):
    """Maintains coverage HC, repairing the cached flow after deletions
    instead of recomputing it from scratch."""

    priority = 1

    def __init__(self, store, xs, tvar):
        super().__init__()
        _check_distinct(xs)
        _check_universe(store, xs)
        self.xs = list(xs)
        self.tvar = tvar
        self.pos = {var: k for k, var in enumerate(self.xs)}
        self._net = None
        self._flow = None
        self.scratch_runs = 0
        self.repair_runs = 0

    def subscriptions(self):
        for var in self.xs:
            yield ("int", var)
        yield ("set", self.tvar)

    def _drop(self):
        self._net = None
        self._flow = None

    def propagate(self, store):
        deltas = self.take_pending()
        if self._net is None:
            self.scratch_runs += 1
            ok, filtered, net, flow = occurs_filter(
                [store.int_mask(v) for v in self.xs], store.lb_mask(self.tvar), store.base
            )
            if not ok:
                return store.fail()
        else:
            self.repair_runs += 1
            net, flow = self._net, self._flow
            for ev in deltas:
                kind = ev[0]
                if kind == "rm":
                    _drop_arc(net, flow, ev[2], self.pos[ev[1]])
                elif kind == "lb":
                    if not _pin_value(net, flow, ev[2]):
                        return store.fail()
            flow, saturated = repair_flow(net, flow)
            if not saturated:
                self._drop()
                return store.fail()
            filtered = [store.int_mask(v) for v in self.xs]
            for (v, k), label in classify_arcs(net, flow).items():
                if label == DEAD:
                    filtered[k] &= ~(1 << (v - store.base))
                    net.remove_arc(v, k)
        self._net, self._flow = net, flow
        store.push_undo(self._drop)
        changed = NOOP
        union = 0
        for var, mask in zip(self.xs, filtered):
            union |= mask
            out = store.restrict_int(var, mask)
            if out == FAILED:
                return FAILED
            if out == CHANGED:
                changed = CHANGED
        for v in values_of(store.ub_mask(self.tvar) & ~union, store.base):
            out = store.exclude_set(self.tvar, v)
            if out == FAILED:
                return FAILED
            changed = CHANGED
        return changed


class RangeCache:
    """Network state surviving between passes over an unchanged ub(S)."""

    __slots__ = ("net", "flow", "sub", "ydom", "tlb")

    def __init__(self, net, flow, sub, ydom, tlb):
        self.net = net
        self.flow = flow
        self.sub = sub  # tuple of indices, position k <-> network variable k
        self.ydom = ydom  # filtered shadow masks, aligned with sub
        self.tlb = tlb


def propag_range(store, xs, svar, tvar, cache=None):
    """One sequential pass enforcing HC on the image constraint.

    cache, when given, must come from an earlier pass with the same ub(S),
    separated from this one only by domain deletions, lb growth or ub(T)
    shrinkage.  Returns (outcome, cache')."""
    base = store.base
    n = len(xs)
    dummy = store.hi + 1
    dummy_bit = 1 << (dummy - base)
    changed = NOOP

    if cache is None:
        out_of_range = store.ub_mask(svar) & ~interval_mask(1, n, base)
        for i in values_of(out_of_range, base):
            out = store.exclude_set(svar, i)
            if out == FAILED:
                return FAILED, None
            changed = CHANGED

    sub = values_of(store.ub_mask(svar), base)
    tlb = store.lb_mask(tvar)

    # coverage over the shadow domains
    if cache is None:
        shadows = [store.int_mask(xs[i - 1]) | dummy_bit for i in sub]
        ok, ydom, net, flow = occurs_filter(shadows, tlb, base)
        if not ok:
            return store.fail(), None
    else:
        net, flow = cache.net, cache.flow
        ydom = []
        for k, i in enumerate(sub):
            m = cache.ydom[k] & (store.int_mask(xs[i - 1]) | dummy_bit)
            for v in values_of(cache.ydom[k] & ~m, base):
                _drop_arc(net, flow, v, k)
            ydom.append(m)
        for v in values_of(tlb & ~cache.tlb, base):
            if not _pin_value(net, flow, v):
                return store.fail(), None
        flow, saturated = repair_flow(net, flow)
        if not saturated:
            return store.fail(), None
        for (v, k), label in classify_arcs(net, flow).items():
            if label == DEAD:
                ydom[k] &= ~(1 << (v - base))
                net.remove_arc(v, k)

    union = 0
    for m in ydom:
        union |= m
    for v in values_of(store.ub_mask(tvar) & ~union, base):
        out = store.exclude_set(tvar, v)
        if out == FAILED:
            return FAILED, None
        changed = CHANGED

    # channelling sweep: i in S iff Y_i in T, each index once, in order
    slb0 = store.lb_mask(svar)
    for k, i in enumerate(sub):
        d = ydom[k]
        tub = store.ub_mask(tvar)
        if slb0 & (1 << (i - base)):
            nd = d & tub
            if nd == 0:
                return store.fail(), None
            for v in values_of(d & ~nd, base):
                _drop_arc(net, flow, v, k)
            ydom[k] = nd
            if nd & (nd - 1) == 0:
                out = store.include_set(tvar, nd.bit_length() - 1 + base)
                if out == FAILED:
                    return FAILED, None
                if out == CHANGED:
                    changed = CHANGED
        elif d & tub == 0:
            out = store.exclude_set(svar, i)
            if out == FAILED:
                return FAILED, None
            changed = CHANGED
            # inert shrink; the exclusion forces a rebuild next pass anyway
            ydom[k] = d & ~store.lb_mask(tvar)
        elif d & ~store.lb_mask(tvar) == 0:
            out = store.include_set(svar, i)
            if out == FAILED:
                return FAILED, None
            changed = CHANGED

    # write-back: a dead dummy pins X_i to the filtered shadow
    for k, i in enumerate(sub):
        d = ydom[k]
        if not d & dummy_bit:
            out = store.restrict_int(xs[i - 1], d)
            if out == FAILED:
                return FAILED, None
            if out == CHANGED:
                changed = CHANGED

    return changed, RangeCache(net, flow, tuple(sub), ydom, store.lb_mask(tvar))


class RangePropagator(Propagator):
    priority = 1

    def __init__(self, store, xs, svar, tvar):
        super().__init__()
        _check_distinct(xs)
        _check_universe(store, xs)
        self.xs = list(xs)
        self.svar = svar
        self.tvar = tvar
        self._cache = None
        self.scratch_runs = 0
        self.repair_runs = 0

    def subscriptions(self):
        for var in self.xs:
            yield ("int", var)
        yield ("set", self.svar)
        yield ("set", self.tvar)

    def _drop(self):
        self._cache = None

    def propagate(self, store):
        self.take_pending()
        cache = self._cache
        if cache is not None and tuple(values_of(store.ub_mask(self.svar), store.base)) != cache.sub:
            cache = None  # shadow set changed: rebuild
        if cache is None:
            self.scratch_runs += 1
        else:
            self.repair_runs += 1
        out, cache = propag_range(store, self.xs, self.svar, self.tvar, cache)
        if out == FAILED:
            self._drop()
            return FAILED
        self._cache = cache
        store.push_undo(self._drop)
        return out
