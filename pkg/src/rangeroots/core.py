"""Backtrackable constraint store.

Integer domains and set-variable bounds are kept as Python int bitsets over
a declared value universe.  Every mutation pushes one undo record per changed
value onto a trail, so search can checkpoint the store and roll back to any
earlier state bit-exactly.  Mutations report one of NOOP, CHANGED or FAILED;
once FAILED the store stays failed until a rollback clears it, and the
offending domain or bound is left untouched (propagators never observe an
empty domain or lb not within ub).
"""

from __future__ import annotations

# outcome of a store mutation
NOOP = 0
CHANGED = 1
FAILED = 2

# event kinds
INT_REMOVED = "int_removed"
INT_FIXED = "int_fixed"
SET_INCLUDED = "set_included"
SET_EXCLUDED = "set_excluded"


def mask_of(values, base):
    """Bitset for an iterable of values, bit k standing for value base+k."""
    m = 0
    for v in values:
        m |= 1 << (v - base)
    return m


def values_of(mask, base):
    """Sorted list of values present in a bitset."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1 + base)
        mask ^= low
    return out


def interval_mask(lo, hi, base):
    """Bitset holding every value in [lo, hi] (values below `base` are not
    representable, so the interval is clipped at `base`)."""
    if lo < base:
        lo = base
    if hi < lo:
        return 0
    width = hi - lo + 1
    return ((1 << width) - 1) << (lo - base)


class Store:
    """Variables plus a trail.  Universe [lo, hi] bounds set elements; integer
    variables may also hold values outside it (cardinality counts mostly)."""

    def __init__(self, lo, hi):
        if lo > hi:
            raise ValueError("empty universe")
        self.lo = lo
        self.hi = hi
        # single bit offset shared by int domains and set bounds
        self.base = min(lo, 0)
        self.universe_mask = interval_mask(lo, hi, self.base)
        self.failed = False
        self._idom = []
        self._inames = []
        self._slb = []
        self._sub = []
        self._snames = []
        self._trail = []
        self.on_event = None

    # ------------------------------------------------------------------
    # variable creation

    def new_int_var(self, values, name=None):
        mask = mask_of(values, self.base) if not isinstance(values, int) else values
        if mask == 0:
            raise ValueError("integer variable needs a non-empty domain")
        vid = len(self._idom)
        self._idom.append(mask)
        self._inames.append(name or f"_x{vid}")
        return vid

    def new_set_var(self, lb, ub, name=None):
        lbm = mask_of(lb, self.base) if not isinstance(lb, int) else lb
        ubm = mask_of(ub, self.base) if not isinstance(ub, int) else ub
        if lbm & ~ubm:
            raise ValueError("set variable needs lb within ub")
        if ubm & ~self.universe_mask:
            raise ValueError("set bound leaves the universe")
        sid = len(self._slb)
        self._slb.append(lbm)
        self._sub.append(ubm)
        self._snames.append(name or f"_s{sid}")
        return sid

    @property
    def num_int_vars(self):
        return len(self._idom)

    @property
    def num_set_vars(self):
        return len(self._slb)

    def int_name(self, var):
        return self._inames[var]

    def set_name(self, sv):
        return self._snames[sv]

    # ------------------------------------------------------------------
    # queries

    def int_mask(self, var):
        return self._idom[var]

    def int_values(self, var):
        return values_of(self._idom[var], self.base)

    def int_size(self, var):
        return self._idom[var].bit_count()

    def int_contains(self, var, value):
        off = value - self.base
        return off >= 0 and (self._idom[var] >> off) & 1 == 1

    def int_min(self, var):
        m = self._idom[var]
        return (m & -m).bit_length() - 1 + self.base

    def int_max(self, var):
        return self._idom[var].bit_length() - 1 + self.base

    def int_is_fixed(self, var):
        m = self._idom[var]
        return m & (m - 1) == 0

    def int_value(self, var):
        m = self._idom[var]
        if m & (m - 1):
            raise ValueError(f"{self._inames[var]} is not fixed")
        return m.bit_length() - 1 + self.base

    def lb_mask(self, sv):
        return self._slb[sv]

    def ub_mask(self, sv):
        return self._sub[sv]

    def lb_values(self, sv):
        return values_of(self._slb[sv], self.base)

    def ub_values(self, sv):
        return values_of(self._sub[sv], self.base)

    def set_is_fixed(self, sv):
        return self._slb[sv] == self._sub[sv]

    def set_value(self, sv):
        if self._slb[sv] != self._sub[sv]:
            raise ValueError(f"{self._snames[sv]} is not fixed")
        return frozenset(values_of(self._slb[sv], self.base))

    # ------------------------------------------------------------------
    # mutations

    def _emit(self, kind, owner, value):
        cb = self.on_event
        if cb is not None:
            cb((kind, owner, value))

    def fail(self):
        self.failed = True
        return FAILED

    def remove_int(self, var, value):
        """Remove one value from an integer domain."""
        off = value - self.base
        if off < 0:
            return NOOP
        bit = 1 << off
        mask = self._idom[var]
        if not mask & bit:
            return NOOP
        if mask == bit:
            # last value: leave the domain alone, flag failure
            self.failed = True
            return FAILED
        mask ^= bit
        self._idom[var] = mask
        self._trail.append(("i", var, bit))
        self._emit(INT_REMOVED, var, value)
        if mask & (mask - 1) == 0:
            self._emit(INT_FIXED, var, mask.bit_length() - 1 + self.base)
        return CHANGED

    def restrict_int(self, var, keep_mask):
        """Intersect a domain with keep_mask, removing value by value."""
        drop = self._idom[var] & ~keep_mask
        changed = NOOP
        base = self.base
        while drop:
            low = drop & -drop
            drop ^= low
            out = self.remove_int(var, low.bit_length() - 1 + base)
            if out == FAILED:
                return FAILED
            changed = CHANGED
        return changed

    def assign_int(self, var, value):
        off = value - self.base
        if off < 0 or not (self._idom[var] >> off) & 1:
            self.failed = True
            return FAILED
        return self.restrict_int(var, 1 << off)

    def include_set(self, sv, value):
        """Add value to lb; fails if the value is outside ub."""
        bit = 1 << (value - self.base)
        if self._slb[sv] & bit:
            return NOOP
        if not self._sub[sv] & bit:
            self.failed = True
            return FAILED
        self._slb[sv] |= bit
        self._trail.append(("L", sv, bit))
        self._emit(SET_INCLUDED, sv, value)
        return CHANGED

    def exclude_set(self, sv, value):
        """Remove value from ub; fails if the value sits in lb."""
        bit = 1 << (value - self.base)
        if not self._sub[sv] & bit:
            return NOOP
        if self._slb[sv] & bit:
            self.failed = True
            return FAILED
        self._sub[sv] ^= bit
        self._trail.append(("U", sv, bit))
        self._emit(SET_EXCLUDED, sv, value)
        return CHANGED

    def tighten_set(self, sv, value, include):
        return self.include_set(sv, value) if include else self.exclude_set(sv, value)

    def push_undo(self, fn):
        """Register an arbitrary undo action run on rollback."""
        self._trail.append(("f", fn, None))

    # ------------------------------------------------------------------
    # trail

    def checkpoint(self):
        if self.failed:
            raise RuntimeError("checkpoint on a failed store")
        return len(self._trail)

    def rollback(self, token):
        trail = self._trail
        while len(trail) > token:
            kind, owner, payload = trail.pop()
            if kind == "i":
                self._idom[owner] |= payload
            elif kind == "L":
                self._slb[owner] ^= payload
            elif kind == "U":
                self._sub[owner] |= payload
            else:
                owner()
        self.failed = False

    # ------------------------------------------------------------------
    # helpers for tests and the oracle

    def snapshot(self):
        return (tuple(self._idom), tuple(self._slb), tuple(self._sub), self.failed)

    def clone(self):
        twin = Store(self.lo, self.hi)
        twin._idom = list(self._idom)
        twin._inames = list(self._inames)
        twin._slb = list(self._slb)
        twin._sub = list(self._sub)
        twin._snames = list(self._snames)
        twin.failed = self.failed
        return twin
