"""Extra propagators used by the benchmark models.

TablePropagator gives arc consistency on a binary allowed-pairs table.
ValueCover supplies the occurrence-witness rules of the channelling model
that competes against the image-based decomposition in the experiments.
"""

from __future__ import annotations

from .. import oracle
from ..core import FAILED
from ..engine import Propagator


class TablePropagator(Propagator):
    """Arc consistency on one binary table of allowed pairs."""

    def __init__(self, store, a, b, allowed):
        super().__init__()
        self.a = a
        self.b = b
        base = store.base
        self.sup_b = {}  # value of a -> bitset of compatible b values
        self.sup_a = {}
        for va, vb in allowed:
            self.sup_b[va] = self.sup_b.get(va, 0) | 1 << (vb - base)
            self.sup_a[vb] = self.sup_a.get(vb, 0) | 1 << (va - base)

    def subscriptions(self):
        yield ("int", self.a)
        yield ("int", self.b)

    def propagate(self, store):
        self.take_pending()
        union = 0
        for va in store.int_values(self.a):
            union |= self.sup_b.get(va, 0)
        if store.restrict_int(self.b, union) == FAILED:
            return
        union = 0
        for vb in store.int_values(self.b):
            union |= self.sup_a.get(vb, 0)
        store.restrict_int(self.a, union)


class ValueCover(Propagator):
    """Witness rules for "every value of S is taken by one of the X_i".

    A value of ub(S) no variable can take any more is dropped; a required
    value with a single remaining candidate forces that variable."""

    def __init__(self, store, xs, svar):
        super().__init__()
        self.xs = tuple(xs)
        self.svar = svar

    def subscriptions(self):
        for var in self.xs:
            yield ("int", var)
        yield ("set", self.svar)

    def propagate(self, store):
        self.take_pending()
        base = store.base
        sv = self.svar
        for v in store.ub_values(sv):
            bit = 1 << (v - base)
            cands = [x for x in self.xs if store.int_mask(x) & bit]
            if not cands:
                if store.lb_mask(sv) & bit:
                    store.fail()
                    return
                if store.exclude_set(sv, v) == FAILED:
                    return
            elif len(cands) == 1 and store.lb_mask(sv) & bit:
                if store.assign_int(cands[0], v) == FAILED:
                    return


def _check_table(spec, ints, sets, base):
    return (ints[spec.xs[0]], ints[spec.xs[1]]) in spec.values


oracle.register_checker("table", _check_table)
