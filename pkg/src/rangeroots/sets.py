"""Primitive set/integer links used by the constraint catalog.

Set variables are handled at bound consistency (include into lb, exclude
from ub); attached integers get their domains filtered directly.  A count
argument is ("var", v) for an integer variable or ("const", k).
"""

from __future__ import annotations

from .core import CHANGED, FAILED, NOOP, interval_mask, values_of
from .engine import Propagator


def _count_min(store, count):
    kind, v = count
    return v if kind == "const" else store.int_min(v)


def _count_max(store, count):
    kind, v = count
    return v if kind == "const" else store.int_max(v)


def _shave(store, var, lo, hi):
    """Trim an integer variable to [lo, hi], clamped to its current bounds."""
    lo = max(lo, store.int_min(var))
    hi = min(hi, store.int_max(var))
    if lo > hi:
        return store.fail()
    return store.restrict_int(var, interval_mask(lo, hi, store.base))


def _count_floor(store, count, lo):
    kind, v = count
    if kind == "const":
        return NOOP if v >= lo else store.fail()
    return _shave(store, v, lo, store.int_max(v))


def _count_ceil(store, count, hi):
    kind, v = count
    if kind == "const":
        return NOOP if v <= hi else store.fail()
    return _shave(store, v, store.int_min(v), hi)


def _merge(changed, out):
    if out == FAILED:
        return FAILED
    return CHANGED if out == CHANGED else changed


class CardLink(Propagator):
    """|S| rel N for rel in {=, <=, >=}."""

    def __init__(self, svar, count, rel):
        super().__init__()
        self.svar = svar
        self.count = count
        self.rel = rel

    def subscriptions(self):
        yield ("set", self.svar)
        if self.count[0] == "var":
            yield ("int", self.count[1])

    def propagate(self, store):
        self.take_pending()
        nlb = store.lb_mask(self.svar).bit_count()
        nub = store.ub_mask(self.svar).bit_count()
        # tighten N, then look for saturation
        changed = NOOP
        if self.rel in ("=", "<="):
            changed = _merge(changed, _count_floor(store, self.count, nlb))
            if changed == FAILED:
                return FAILED
        if self.rel in ("=", ">="):
            changed = _merge(changed, _count_ceil(store, self.count, nub))
            if changed == FAILED:
                return FAILED
        if self.rel in ("=", ">=") and _count_min(store, self.count) == nub:
            for v in values_of(store.ub_mask(self.svar) & ~store.lb_mask(self.svar), store.base):
                changed = _merge(changed, store.include_set(self.svar, v))
                if changed == FAILED:
                    return FAILED
        if self.rel in ("=", "<=") and _count_max(store, self.count) == nlb:
            for v in values_of(store.ub_mask(self.svar) & ~store.lb_mask(self.svar), store.base):
                changed = _merge(changed, store.exclude_set(self.svar, v))
                if changed == FAILED:
                    return FAILED
        return changed


class SubsetLink(Propagator):
    """A is a subset of B."""

    def __init__(self, a, b):
        super().__init__()
        self.a = a
        self.b = b

    def subscriptions(self):
        yield ("set", self.a)
        yield ("set", self.b)

    def propagate(self, store):
        self.take_pending()
        changed = NOOP
        for v in values_of(store.lb_mask(self.a) & ~store.lb_mask(self.b), store.base):
            changed = _merge(changed, store.include_set(self.b, v))
            if changed == FAILED:
                return FAILED
        for v in values_of(store.ub_mask(self.a) & ~store.ub_mask(self.b), store.base):
            changed = _merge(changed, store.exclude_set(self.a, v))
            if changed == FAILED:
                return FAILED
        return changed


class DisjointLink(Propagator):
    """A and B share no element."""

    def __init__(self, a, b):
        super().__init__()
        self.a = a
        self.b = b

    def subscriptions(self):
        yield ("set", self.a)
        yield ("set", self.b)

    def propagate(self, store):
        self.take_pending()
        changed = NOOP
        for v in values_of(store.lb_mask(self.a) & store.ub_mask(self.b), store.base):
            changed = _merge(changed, store.exclude_set(self.b, v))
            if changed == FAILED:
                return FAILED
        for v in values_of(store.lb_mask(self.b) & store.ub_mask(self.a), store.base):
            changed = _merge(changed, store.exclude_set(self.a, v))
            if changed == FAILED:
                return FAILED
        return changed


class UnionLink(Propagator):
    """S equals the union of the parts."""

    def __init__(self, svar, parts):
        super().__init__()
        self.svar = svar
        self.parts = list(parts)

    def subscriptions(self):
        yield ("set", self.svar)
        for p in self.parts:
            yield ("set", p)

    def propagate(self, store):
        self.take_pending()
        changed = NOOP
        lb_union = 0
        ub_union = 0
        for p in self.parts:
            lb_union |= store.lb_mask(p)
            ub_union |= store.ub_mask(p)
        for v in values_of(lb_union & ~store.lb_mask(self.svar), store.base):
            changed = _merge(changed, store.include_set(self.svar, v))
            if changed == FAILED:
                return FAILED
        for v in values_of(store.ub_mask(self.svar) & ~ub_union, store.base):
            changed = _merge(changed, store.exclude_set(self.svar, v))
            if changed == FAILED:
                return FAILED
        whole_ub = store.ub_mask(self.svar)
        for p in self.parts:
            for v in values_of(store.ub_mask(p) & ~whole_ub, store.base):
                changed = _merge(changed, store.exclude_set(p, v))
                if changed == FAILED:
                    return FAILED
        # a mandatory element with a single possible home lands there
        for v in values_of(store.lb_mask(self.svar), store.base):
            bit = 1 << (v - store.base)
            home = None
            for p in self.parts:
                if store.ub_mask(p) & bit:
                    if home is not None:
                        home = None
                        break
                    home = p
            if home is not None and not store.lb_mask(home) & bit:
                changed = _merge(changed, store.include_set(home, v))
                if changed == FAILED:
                    return FAILED
        return changed


class IntMemberLink(Propagator):
    """Integer I takes a value inside S."""

    def __init__(self, ivar, svar):
        super().__init__()
        self.ivar = ivar
        self.svar = svar

    def subscriptions(self):
        yield ("int", self.ivar)
        yield ("set", self.svar)

    def propagate(self, store):
        self.take_pending()
        changed = store.restrict_int(self.ivar, store.ub_mask(self.svar))
        if changed == FAILED:
            return FAILED
        if store.int_is_fixed(self.ivar):
            v = store.int_value(self.ivar)
            if not store.lb_mask(self.svar) >> (v - store.base) & 1:
                changed = _merge(changed, store.include_set(self.svar, v))
        return changed


class SingletonLink(Propagator):
    """S = {X}: the set is exactly the singleton holding the integer."""

    def __init__(self, ivar, svar):
        super().__init__()
        self.ivar = ivar
        self.svar = svar

    def subscriptions(self):
        yield ("int", self.ivar)
        yield ("set", self.svar)

    def propagate(self, store):
        self.take_pending()
        changed = store.restrict_int(self.ivar, store.ub_mask(self.svar))
        if changed == FAILED:
            return FAILED
        lb = store.lb_mask(self.svar)
        if lb.bit_count() > 1:
            return store.fail()
        if lb:
            changed = _merge(changed, store.restrict_int(self.ivar, lb))
            if changed == FAILED:
                return FAILED
        elif store.int_is_fixed(self.ivar):
            changed = _merge(changed, store.include_set(self.svar, store.int_value(self.ivar)))
            if changed == FAILED:
                return FAILED
        dom = store.int_mask(self.ivar)
        for v in values_of(store.ub_mask(self.svar) & ~dom, store.base):
            changed = _merge(changed, store.exclude_set(self.svar, v))
            if changed == FAILED:
                return FAILED
        return changed


class MaxLink(Propagator):
    """X equals the maximum of S (so S may not be empty)."""

    def __init__(self, svar, xvar):
        super().__init__()
        self.svar = svar
        self.xvar = xvar

    def subscriptions(self):
        yield ("set", self.svar)
        yield ("int", self.xvar)

    def propagate(self, store):
        self.take_pending()
        ub = store.ub_mask(self.svar)
        if ub == 0:
            return store.fail()
        lb = store.lb_mask(self.svar)
        floor = lb.bit_length() - 1 + store.base if lb else store.lo
        changed = store.restrict_int(self.xvar, ub & interval_mask(floor, store.hi, store.base))
        if changed == FAILED:
            return FAILED
        hi = store.int_max(self.xvar)
        for v in values_of(ub & ~interval_mask(store.lo, hi, store.base), store.base):
            changed = _merge(changed, store.exclude_set(self.svar, v))
            if changed == FAILED:
                return FAILED
        if store.int_is_fixed(self.xvar):
            v = store.int_value(self.xvar)
            if not store.lb_mask(self.svar) >> (v - store.base) & 1:
                changed = _merge(changed, store.include_set(self.svar, v))
        return changed


class MinLink(Propagator):
    """Y equals the minimum of S (so S may not be empty)."""

    def __init__(self, svar, yvar):
        super().__init__()
        self.svar = svar
        self.yvar = yvar

    def subscriptions(self):
        yield ("set", self.svar)
        yield ("int", self.yvar)

    def propagate(self, store):
        self.take_pending()
        ub = store.ub_mask(self.svar)
        if ub == 0:
            return store.fail()
        lb = store.lb_mask(self.svar)
        ceil = (lb & -lb).bit_length() - 1 + store.base if lb else store.hi
        changed = store.restrict_int(self.yvar, ub & interval_mask(store.lo, ceil, store.base))
        if changed == FAILED:
            return FAILED
        lo = store.int_min(self.yvar)
        for v in values_of(ub & ~interval_mask(lo, store.hi, store.base), store.base):
            changed = _merge(changed, store.exclude_set(self.svar, v))
            if changed == FAILED:
                return FAILED
        if store.int_is_fixed(self.yvar):
            v = store.int_value(self.yvar)
            if not store.lb_mask(self.svar) >> (v - store.base) & 1:
                changed = _merge(changed, store.include_set(self.svar, v))
        return changed


class CardSpan(Propagator):
    """|S| = X - Y + 1 by interval arithmetic on X, Y and the bound sizes."""

    def __init__(self, svar, xvar, yvar):
        super().__init__()
        self.svar = svar
        self.xvar = xvar
        self.yvar = yvar

    def subscriptions(self):
        yield ("set", self.svar)
        yield ("int", self.xvar)
        yield ("int", self.yvar)

    def propagate(self, store):
        self.take_pending()
        nlb = store.lb_mask(self.svar).bit_count()
        nub = store.ub_mask(self.svar).bit_count()
        ymin, ymax = store.int_min(self.yvar), store.int_max(self.yvar)
        changed = store.restrict_int(
            self.xvar, interval_mask(ymin + nlb - 1, ymax + nub - 1, store.base)
        )
        if changed == FAILED:
            return FAILED
        xmin, xmax = store.int_min(self.xvar), store.int_max(self.xvar)
        changed = _merge(
            changed,
            store.restrict_int(self.yvar, interval_mask(xmin - nub + 1, xmax - nlb + 1, store.base)),
        )
        if changed == FAILED:
            return FAILED
        span_min = store.int_min(self.xvar) - store.int_max(self.yvar) + 1
        span_max = store.int_max(self.xvar) - store.int_min(self.yvar) + 1
        free = store.ub_mask(self.svar) & ~store.lb_mask(self.svar)
        if span_min == nub:
            for v in values_of(free, store.base):
                changed = _merge(changed, store.include_set(self.svar, v))
                if changed == FAILED:
                    return FAILED
        elif span_max == nlb:
            for v in values_of(free, store.base):
                changed = _merge(changed, store.exclude_set(self.svar, v))
                if changed == FAILED:
                    return FAILED
        return changed


def minmax_link(svar, xvar, yvar, card_arith=True):
    """Propagators tying X=max(S), Y=min(S) and optionally |S|=X-Y+1."""
    props = [MaxLink(svar, xvar), MinLink(svar, yvar)]
    if card_arith:
        props.append(CardSpan(svar, xvar, yvar))
    return props


class ReifyMember(Propagator):
    """B=1 exactly when X takes a value from a fixed value set."""

    def __init__(self, bvar, xvar, values_mask):
        super().__init__()
        self.bvar = bvar
        self.xvar = xvar
        self.mask = values_mask

    def subscriptions(self):
        yield ("int", self.bvar)
        yield ("int", self.xvar)

    def propagate(self, store):
        self.take_pending()
        d = store.int_mask(self.xvar)
        one = 1 << (1 - store.base)
        zero = 1 << (0 - store.base)
        if d & self.mask == 0:
            return store.restrict_int(self.bvar, zero)
        if d & ~self.mask == 0:
            return store.restrict_int(self.bvar, one)
        if store.int_is_fixed(self.bvar):
            if store.int_value(self.bvar) == 1:
                return store.restrict_int(self.xvar, self.mask)
            return store.restrict_int(self.xvar, ~self.mask)
        return NOOP


class BoolSum(Propagator):
    """Sum of 0/1 variables equals a count."""

    def __init__(self, bvars, count):
        super().__init__()
        self.bvars = list(bvars)
        self.count = count

    def subscriptions(self):
        for b in self.bvars:
            yield ("int", b)
        if self.count[0] == "var":
            yield ("int", self.count[1])

    def propagate(self, store):
        self.take_pending()
        ones = 0
        free = []
        for b in self.bvars:
            if store.int_is_fixed(b):
                ones += store.int_value(b)
            else:
                free.append(b)
        changed = _count_floor(store, self.count, ones)
        if changed == FAILED:
            return FAILED
        changed = _merge(changed, _count_ceil(store, self.count, ones + len(free)))
        if changed == FAILED:
            return FAILED
        one = 1 << (1 - store.base)
        zero = 1 << (0 - store.base)
        if _count_max(store, self.count) == ones:
            for b in free:
                changed = _merge(changed, store.restrict_int(b, zero))
                if changed == FAILED:
                    return FAILED
        elif _count_min(store, self.count) == ones + len(free):
            for b in free:
                changed = _merge(changed, store.restrict_int(b, one))
                if changed == FAILED:
                    return FAILED
        return changed
