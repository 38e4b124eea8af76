"""Preimage propagation: S = {i | X_i in T} as 2n implications.

Full HC on the preimage constraint is NP-hard, so each index i gets two
light propagators, one per implication direction.  Their common fixpoint
is always sound and always achieves BC; it achieves HC whenever one of the
four conditions reported by classify_conditions holds.

Support witnesses follow the last-support discipline: each one stores the
position of the last value found, re-checks it in O(1), and only ever scans
forward.  Positions are trailed so backtracking restores them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import CHANGED, FAILED, NOOP, interval_mask, values_of
from .engine import Propagator

HC = "hc"
BC = "bc"


@dataclass
class ConditionReport:
    c1: bool  # every index in lb(S) has D(X_i) within lb(T)
    c2: bool  # every index outside ub(S) has D(X_i) disjoint from ub(T)
    c3: bool  # all X_i ground
    c4: bool  # T ground

    def any(self):
        return self.c1 or self.c2 or self.c3 or self.c4


def classify_conditions(store, xs, svar, tvar):
    base = store.base
    lb_t = store.lb_mask(tvar)
    ub_t = store.ub_mask(tvar)
    slb = store.lb_mask(svar)
    sub = store.ub_mask(svar)
    c1 = c2 = True
    for k, var in enumerate(xs):
        bit = 1 << (k + 1 - base)
        dom = store.int_mask(var)
        if slb & bit and dom & ~lb_t:
            c1 = False
        if not sub & bit and dom & ub_t:
            c2 = False
    c3 = all(store.int_is_fixed(v) for v in xs)
    c4 = lb_t == ub_t
    return ConditionReport(c1, c2, c3, c4)


class RootsState:
    """Shared bookkeeping for one posted preimage constraint."""

    def __init__(self, store, xs, svar, tvar, mode):
        if mode not in (HC, BC):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.xs = list(xs)
        self.svar = svar
        self.tvar = tvar
        # initial domain values, increasing; scan positions only move right
        self.vals = [store.int_values(v) for v in xs]
        self.sup_pos = [0] * len(xs)
        self.esc_pos = [0] * len(xs)
        self.probes = 0

    def _advance(self, store, poslist, k, good_mask):
        """Forward scan for a value of X_k inside good_mask; trailed."""
        vals = self.vals[k]
        base = store.base
        pos = start = poslist[k]
        n = len(vals)
        while pos < n:
            self.probes += 1
            if (good_mask >> (vals[pos] - base)) & 1:
                break
            pos += 1
        if pos != start:
            store.push_undo(lambda: poslist.__setitem__(k, start))
            poslist[k] = pos
        return vals[pos] if pos < n else None

    def support(self, store, k):
        """Some value in D(X_k) ∩ ub(T), or None."""
        good = store.int_mask(self.xs[k]) & store.ub_mask(self.tvar)
        return self._advance(store, self.sup_pos, k, good)

    def escape(self, store, k):
        """Some value in D(X_k) \\ lb(T), or None."""
        good = store.int_mask(self.xs[k]) & ~store.lb_mask(self.tvar)
        return self._advance(store, self.esc_pos, k, good)


def _shave(store, var, allowed_mask):
    """Remove domain bounds until both sit in allowed_mask (BC move)."""
    changed = NOOP
    while True:
        lo = store.int_min(var)
        if (allowed_mask >> (lo - store.base)) & 1:
            break
        out = store.remove_int(var, lo)
        if out == FAILED:
            return FAILED
        changed = CHANGED
    while True:
        hi = store.int_max(var)
        if (allowed_mask >> (hi - store.base)) & 1:
            break
        out = store.remove_int(var, hi)
        if out == FAILED:
            return FAILED
        changed = CHANGED
    return changed


def _span(store, var):
    return interval_mask(store.int_min(var), store.int_max(var), store.base)


class IndexToValue(Propagator):
    """i in S implies X_i in T."""

    def __init__(self, state, k):
        super().__init__()
        self.state = state
        self.k = k

    def subscriptions(self):
        st = self.state
        yield ("int", st.xs[self.k])
        yield ("set", st.tvar)
        yield ("set_elem", st.svar, self.k + 1)

    def propagate(self, store):
        self.take_pending()
        st = self.state
        k = self.k
        var = st.xs[k]
        bit = 1 << (k + 1 - store.base)
        changed = NOOP
        if store.lb_mask(st.svar) & bit:
            ub_t = store.ub_mask(st.tvar)
            if st.mode == HC:
                out = store.restrict_int(var, ub_t)
            else:
                out = _shave(store, var, ub_t)
            if out == FAILED:
                return FAILED
            if out == CHANGED:
                changed = CHANGED
            if store.int_is_fixed(var):
                out = store.include_set(st.tvar, store.int_value(var))
                if out == FAILED:
                    return FAILED
                if out == CHANGED:
                    changed = CHANGED
        elif store.ub_mask(st.svar) & bit:
            if st.mode == HC:
                empty = st.support(store, k) is None
            else:
                empty = _span(store, var) & store.ub_mask(st.tvar) == 0
            if empty:
                out = store.exclude_set(st.svar, k + 1)
                if out == FAILED:
                    return FAILED
                changed = CHANGED
        return changed


class ValueToIndex(Propagator):
    """X_i in T implies i in S."""

    def __init__(self, state, k):
        super().__init__()
        self.state = state
        self.k = k

    def subscriptions(self):
        st = self.state
        yield ("int", st.xs[self.k])
        yield ("set", st.tvar)
        yield ("set_elem", st.svar, self.k + 1)

    def propagate(self, store):
        self.take_pending()
        st = self.state
        k = self.k
        var = st.xs[k]
        bit = 1 << (k + 1 - store.base)
        changed = NOOP
        if not store.ub_mask(st.svar) & bit:
            lb_t = store.lb_mask(st.tvar)
            if st.mode == HC:
                out = store.restrict_int(var, ~lb_t)
            else:
                out = _shave(store, var, ~lb_t)
            if out == FAILED:
                return FAILED
            if out == CHANGED:
                changed = CHANGED
            if store.int_is_fixed(var):
                out = store.exclude_set(st.tvar, store.int_value(var))
                if out == FAILED:
                    return FAILED
                if out == CHANGED:
                    changed = CHANGED
        elif not store.lb_mask(st.svar) & bit:
            if st.mode == HC:
                covered = st.escape(store, k) is None
            else:
                covered = _span(store, var) & ~store.lb_mask(st.tvar) == 0
            if covered:
                out = store.include_set(st.svar, k + 1)
                if out == FAILED:
                    return FAILED
                changed = CHANGED
        return changed


def post_roots(model, xs, svar, tvar, mode=HC):
    """Register the 2n implication propagators.  Indices outside 1..n can
    never sit in the preimage, so they are excluded from ub(S) up front.
    Returns (state, propagators)."""
    store = model.store
    n = len(xs)
    out_of_range = store.ub_mask(svar) & ~interval_mask(1, n, store.base)
    for i in values_of(out_of_range, store.base):
        if store.exclude_set(svar, i) == FAILED:
            break
    state = RootsState(store, xs, svar, tvar, mode)
    props = []
    for k in range(n):
        props.append(model.post(IndexToValue(state, k)))
        props.append(model.post(ValueToIndex(state, k)))
    return state, props
