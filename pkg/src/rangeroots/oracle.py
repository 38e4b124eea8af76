"""Enumeration oracle.

Ground truth for every constraint in the catalog: a `holds` predicate per
tag, a solution enumerator, and domain filters that compute hybrid (exact
integer domains) or bound (integer intervals) consistency by brute force.
The oracle exists to be obviously correct; the only concession to speed is
a pair of solution generators for the image/preimage constraints and a
projection-based filter for `roots`, each cross-checked against the generic
path by tests.

Integer variables are identified by store ids; set variables likewise.
Set values travel as bitsets relative to ``store.base``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .core import Store, interval_mask, mask_of, values_of


class CapExceeded(Exception):
    """The instance is too large for exhaustive enumeration."""


DEFAULT_CAP = 10_000_000


# ----------------------------------------------------------------------
# semantics registry


def _count(entry, ints):
    kind, v = entry
    return ints[v] if kind == "var" else v


def _image(vals, base):
    m = 0
    for v in vals:
        m |= 1 << (v - base)
    return m


def _c_range(spec, ints, sets, base):
    n = len(spec.xs)
    s_mask, t_mask = sets[spec.svars[0]], sets[spec.svars[1]]
    image = 0
    for idx in values_of(s_mask, base):
        if not 1 <= idx <= n:
            return False
        image |= 1 << (ints[spec.xs[idx - 1]] - base)
    return t_mask == image


def _c_roots(spec, ints, sets, base):
    s_mask, t_mask = sets[spec.svars[0]], sets[spec.svars[1]]
    pre = 0
    for k, var in enumerate(spec.xs):
        if (t_mask >> (ints[var] - base)) & 1:
            pre |= 1 << (k + 1 - base)
    return s_mask == pre


def _c_occurs(spec, ints, sets, base):
    image = _image((ints[v] for v in spec.xs), base)
    return sets[spec.svars[0]] & ~image == 0


def _c_alldifferent(spec, ints, sets, base):
    image = _image((ints[v] for v in spec.xs), base)
    return image.bit_count() == len(spec.xs)


def _c_permutation(spec, ints, sets, base):
    image = _image((ints[v] for v in spec.xs), base)
    return image == mask_of(spec.values, base) and image.bit_count() == len(spec.xs)


def _c_nvalue(spec, ints, sets, base):
    image = _image((ints[v] for v in spec.xs), base)
    return image.bit_count() == _count(spec.counts[0], ints)


def _c_among(spec, ints, sets, base):
    dmask = mask_of(spec.values, base)
    c = sum(1 for v in spec.xs if (dmask >> (ints[v] - base)) & 1)
    return c == _count(spec.counts[0], ints)


def _c_atmost(spec, ints, sets, base):
    d = spec.values[0]
    c = sum(1 for v in spec.xs if ints[v] == d)
    return c <= _count(spec.counts[0], ints)


def _c_atleast(spec, ints, sets, base):
    d = spec.values[0]
    c = sum(1 for v in spec.xs if ints[v] == d)
    return c >= _count(spec.counts[0], ints)


def _c_gcc(spec, ints, sets, base):
    for d, o in zip(spec.values, spec.counts):
        if sum(1 for v in spec.xs if ints[v] == d) != _count(o, ints):
            return False
    return True


def _c_disjoint(spec, ints, sets, base):
    ix = _image((ints[v] for v in spec.xs), base)
    iy = _image((ints[v] for v in spec.ys), base)
    return ix & iy == 0


def _c_uses(spec, ints, sets, base):
    ix = _image((ints[v] for v in spec.xs), base)
    iy = _image((ints[v] for v in spec.ys), base)
    return iy & ~ix == 0


def _c_common(spec, ints, sets, base):
    ix = _image((ints[v] for v in spec.xs), base)
    iy = _image((ints[v] for v in spec.ys), base)
    n = sum(1 for v in spec.xs if (iy >> (ints[v] - base)) & 1)
    m = sum(1 for v in spec.ys if (ix >> (ints[v] - base)) & 1)
    return n == _count(spec.counts[0], ints) and m == _count(spec.counts[1], ints)


def _c_assign_nvalues(spec, ints, sets, base):
    cap = _count(spec.counts[0], ints)
    groups = {}
    for xv, yv in zip(spec.xs, spec.ys):
        j = ints[xv]
        groups[j] = groups.get(j, 0) | (1 << (ints[yv] - base))
    return all(m.bit_count() <= cap for m in groups.values())


def _c_sym_alldifferent(spec, ints, sets, base):
    n = len(spec.xs)
    for k, var in enumerate(spec.xs):
        v = ints[var]
        if not 1 <= v <= n or ints[spec.xs[v - 1]] != k + 1:
            return False
    return True


def _c_element(spec, ints, sets, base):
    i, j = ints[spec.ys[0]], ints[spec.ys[1]]
    return 1 <= i <= len(spec.xs) and ints[spec.xs[i - 1]] == j


def _c_contiguity(spec, ints, sets, base):
    ones = [k for k, var in enumerate(spec.xs) if ints[var] == 1]
    if any(ints[var] not in (0, 1) for var in spec.xs):
        return False
    return not ones or ones[-1] - ones[0] + 1 == len(ones)


def _c_open_gcc(spec, ints, sets, base):
    n = len(spec.xs)
    sel = values_of(sets[spec.svars[0]], base)
    if any(not 1 <= i <= n for i in sel):
        return False
    for d, o in zip(spec.values, spec.counts):
        if sum(1 for i in sel if ints[spec.xs[i - 1]] == d) != _count(o, ints):
            return False
    return True


def _c_open_alldifferent(spec, ints, sets, base):
    n = len(spec.xs)
    sel = values_of(sets[spec.svars[0]], base)
    if any(not 1 <= i <= n for i in sel):
        return False
    image = _image((ints[spec.xs[i - 1]] for i in sel), base)
    return image.bit_count() == len(sel)


def _c_card(spec, ints, sets, base):
    c = sets[spec.svars[0]].bit_count()
    n = _count(spec.counts[0], ints)
    rel = spec.values[0]
    if rel == "=":
        return c == n
    if rel == "<=":
        return c <= n
    return c >= n


def _c_subset(spec, ints, sets, base):
    a, b = spec.svars
    return sets[a] & ~sets[b] == 0


def _c_disjoint_sets(spec, ints, sets, base):
    a, b = spec.svars
    return sets[a] & sets[b] == 0


def _c_union_sets(spec, ints, sets, base):
    whole, parts = spec.svars[0], spec.svars[1:]
    u = 0
    for p in parts:
        u |= sets[p]
    return sets[whole] == u


def _c_member(spec, ints, sets, base):
    return bool(sets[spec.svars[0]] >> (ints[spec.ys[0]] - base) & 1)


def _c_set_max(spec, ints, sets, base):
    s = sets[spec.svars[0]]
    return s != 0 and s.bit_length() - 1 + base == ints[spec.ys[0]]


def _c_set_min(spec, ints, sets, base):
    s = sets[spec.svars[0]]
    return s != 0 and (s & -s).bit_length() - 1 + base == ints[spec.ys[0]]


def _c_card_span(spec, ints, sets, base):
    x, y = (ints[v] for v in spec.ys)
    return sets[spec.svars[0]].bit_count() == x - y + 1


def _c_reify_member(spec, ints, sets, base):
    b, x = (ints[v] for v in spec.ys)
    return (b == 1) == (x in spec.values)


def _c_bool_sum(spec, ints, sets, base):
    return sum(ints[v] for v in spec.ys) == _count(spec.counts[0], ints)


CHECKERS = {
    "range": _c_range,
    "roots": _c_roots,
    "occurs": _c_occurs,
    "alldifferent": _c_alldifferent,
    "permutation": _c_permutation,
    "nvalue": _c_nvalue,
    "among": _c_among,
    "among_sum": _c_among,
    "atmost": _c_atmost,
    "atleast": _c_atleast,
    "gcc": _c_gcc,
    "disjoint": _c_disjoint,
    "uses_range": _c_uses,
    "uses_roots": _c_uses,
    "common": _c_common,
    "assign_nvalues": _c_assign_nvalues,
    "sym_alldifferent": _c_sym_alldifferent,
    "element": _c_element,
    "contiguity": _c_contiguity,
    "open_gcc": _c_open_gcc,
    "open_alldifferent": _c_open_alldifferent,
    "card": _c_card,
    "subset": _c_subset,
    "disjoint_sets": _c_disjoint_sets,
    "union_sets": _c_union_sets,
    "member": _c_member,
    "set_max": _c_set_max,
    "set_min": _c_set_min,
    "card_span": _c_card_span,
    "reify_member": _c_reify_member,
    "bool_sum": _c_bool_sum,
}


def register_checker(tag, fn):
    """Hook for extra constraint kinds (the experiment harness uses it)."""
    CHECKERS[tag] = fn


def holds(spec, ints, sets=None, base=0):
    """Truth of one constraint under a full assignment.

    ints maps int var id to value; sets maps set var id to an iterable of
    values or to a bitset relative to ``base``.
    """
    smasks = {}
    if sets:
        for sv, val in sets.items():
            smasks[sv] = val if isinstance(val, int) else mask_of(val, base)
    return CHECKERS[spec.tag](spec, ints, smasks, base)


# ----------------------------------------------------------------------
# enumeration


def referenced_vars(specs):
    ivars, svars = [], []
    seen_i, seen_s = set(), set()
    for spec in specs:
        groups = (spec.xs, spec.ys)
        for grp in groups:
            for v in grp:
                if v not in seen_i:
                    seen_i.add(v)
                    ivars.append(v)
        for entry in spec.counts:
            if entry[0] == "var" and entry[1] not in seen_i:
                seen_i.add(entry[1])
                ivars.append(entry[1])
        for sv in spec.svars:
            if sv not in seen_s:
                seen_s.add(sv)
                svars.append(sv)
    return ivars, svars


def _subset_masks(lb, ub):
    free = values_of(ub & ~lb, 0)
    masks = []
    for combo in range(1 << len(free)):
        m = lb
        for k, bitpos in enumerate(free):
            if (combo >> k) & 1:
                m |= 1 << bitpos
        masks.append(m)
    return masks


def _eff_mask(store, var, interval):
    m = store.int_mask(var)
    if interval:
        return interval_mask(store.int_min(var), store.int_max(var), store.base)
    return m


def _iter_solutions(specs, store, interval_vars, cap, generic):
    """Yield (ints_dict, sets_dict_of_masks) satisfying every spec."""
    base = store.base
    ivars, svars = referenced_vars(specs)
    if not generic and len(specs) == 1 and specs[0].tag in ("range", "roots", "occurs"):
        yield from _iter_fast(specs[0], store, interval_vars, cap)
        return
    size = 1
    choices = []
    for var in ivars:
        vals = values_of(_eff_mask(store, var, var in interval_vars), base)
        size *= len(vals)
        choices.append([(var, v) for v in vals])
    for sv in svars:
        masks = _subset_masks(store.lb_mask(sv), store.ub_mask(sv))
        size *= len(masks)
        choices.append([(sv, m) for m in masks])
    if size > cap:
        raise CapExceeded(f"{size} candidate assignments exceed cap {cap}")
    ni = len(ivars)
    checkers = [(CHECKERS[s.tag], s) for s in specs]
    for combo in itertools.product(*choices):
        ints = dict(combo[:ni])
        sets = dict(combo[ni:])
        if all(fn(s, ints, sets, base) for fn, s in checkers):
            yield ints, sets


def _iter_fast(spec, store, interval_vars, cap):
    """Solution generators that exploit the functional shape of the
    image/preimage constraints: given the integers and one set, the other
    set is forced."""
    base = store.base
    xs = spec.xs
    n = len(xs)
    dom_lists = [values_of(_eff_mask(store, v, v in interval_vars), base) for v in xs]
    size = 1
    for d in dom_lists:
        size *= len(d)

    if spec.tag == "occurs":
        T = spec.svars[0]
        tlb, tub = store.lb_mask(T), store.ub_mask(T)
        if size * (1 << (tub & ~tlb).bit_count()) > cap:
            raise CapExceeded("occurs enumeration exceeds cap")
        for tup in itertools.product(*dom_lists):
            image = _image(tup, base)
            if tlb & ~image:
                continue
            ints = dict(zip(xs, tup))
            for m in _subset_masks(tlb, tub & image):
                yield ints, {T: m}
        return

    S, T = spec.svars
    slb, sub = store.lb_mask(S), store.ub_mask(S)
    tlb, tub = store.lb_mask(T), store.ub_mask(T)
    idx_mask = interval_mask(1, n, base)

    if spec.tag == "range":
        if slb & ~idx_mask:
            return
        if size * (1 << (sub & ~slb).bit_count()) > cap:
            raise CapExceeded("range enumeration exceeds cap")
        smasks = _subset_masks(slb, sub & idx_mask)
        for tup in itertools.product(*dom_lists):
            bits = [1 << (v - base) for v in tup]
            ints = None
            for sm in smasks:
                image = 0
                for idx in values_of(sm, base):
                    image |= bits[idx - 1]
                if image & ~tub or tlb & ~image:
                    continue
                if ints is None:
                    ints = dict(zip(xs, tup))
                yield ints, {S: sm, T: image}
        return

    # roots: S is the preimage of T
    if size * (1 << (tub & ~tlb).bit_count()) > cap:
        raise CapExceeded("roots enumeration exceeds cap")
    tmasks = _subset_masks(tlb, tub)
    for tup in itertools.product(*dom_lists):
        bits = [1 << (v - base) for v in tup]
        ints = None
        for tm in tmasks:
            pre = 0
            for k in range(n):
                if bits[k] & tm:
                    pre |= 1 << (k + 1 - base)
            if pre & ~sub or slb & ~pre:
                continue
            if ints is None:
                ints = dict(zip(xs, tup))
            yield ints, {S: pre, T: tm}


def enumerate_solutions(specs, store, cap=DEFAULT_CAP, generic=False):
    """All solutions over the referenced variables, as (ints, sets) dicts
    with sets given as frozensets."""
    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    out = []
    for ints, sets in _iter_solutions(specs, store, frozenset(), cap, generic):
        out.append((dict(ints), {sv: frozenset(values_of(m, store.base)) for sv, m in sets.items()}))
    return out


# ----------------------------------------------------------------------
# consistency filters


@dataclass
class FilterResult:
    feasible: bool
    int_dom: dict = field(default_factory=dict)  # var -> mask
    set_lb: dict = field(default_factory=dict)
    set_ub: dict = field(default_factory=dict)

    def matches_store(self, store):
        """Bit-for-bit comparison against a propagated store."""
        if not self.feasible:
            return store.failed
        if store.failed:
            return False
        for var, mask in self.int_dom.items():
            if store.int_mask(var) != mask:
                return False
        for sv, mask in self.set_lb.items():
            if store.lb_mask(sv) != mask:
                return False
        for sv, mask in self.set_ub.items():
            if store.ub_mask(sv) != mask:
                return False
        return True

    def describe(self, store):
        parts = []
        if not self.feasible:
            return "infeasible"
        for var, mask in sorted(self.int_dom.items()):
            parts.append(f"{store.int_name(var)}={values_of(mask, store.base)}")
        for sv in sorted(self.set_lb):
            lb = values_of(self.set_lb[sv], store.base)
            ub = values_of(self.set_ub[sv], store.base)
            parts.append(f"{store.set_name(sv)}=[{lb},{ub}]")
        return " ".join(parts)


def filter_mixed(specs, store, interval_vars, cap=DEFAULT_CAP, generic=False):
    """Fixpoint filter: repeatedly drop unsupported values (exact vars),
    shave unsupported bounds (interval vars) and tighten set bounds until
    nothing changes.  Runs on a scratch copy of the store."""
    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    if len(specs) == 1 and specs[0].tag == "roots" and not generic:
        return _filter_roots_projection(specs[0], store, interval_vars)
    scratch = store.clone()
    base = scratch.base
    ivars, svars = referenced_vars(specs)
    interval_vars = frozenset(interval_vars)
    while True:
        supp = {var: 0 for var in ivars}
        s_union = {sv: 0 for sv in svars}
        s_inter = {sv: None for sv in svars}
        feasible = False
        for ints, sets in _iter_solutions(specs, scratch, interval_vars, cap, generic):
            feasible = True
            for var in ivars:
                supp[var] |= 1 << (ints[var] - base)
            for sv in svars:
                m = sets[sv]
                s_union[sv] |= m
                s_inter[sv] = m if s_inter[sv] is None else s_inter[sv] & m
        if not feasible:
            return FilterResult(False)
        changed = False
        for var in ivars:
            cur = scratch.int_mask(var)
            if var in interval_vars:
                sm = supp[var]
                lo = (sm & -sm).bit_length() - 1 + base
                hi = sm.bit_length() - 1 + base
                new = cur & interval_mask(lo, hi, base)
            else:
                new = cur & supp[var]
            if new != cur:
                if new == 0:
                    return FilterResult(False)
                scratch._idom[var] = new
                changed = True
        for sv in svars:
            if s_union[sv] != scratch.ub_mask(sv):
                scratch._sub[sv] = s_union[sv]
                changed = True
            if s_inter[sv] != scratch.lb_mask(sv):
                scratch._slb[sv] = s_inter[sv]
                changed = True
        if not changed:
            break
    return FilterResult(
        True,
        {var: scratch.int_mask(var) for var in ivars},
        {sv: scratch.lb_mask(sv) for sv in svars},
        {sv: scratch.ub_mask(sv) for sv in svars},
    )


def filter_hc(specs, store, cap=DEFAULT_CAP, generic=False):
    return filter_mixed(specs, store, frozenset(), cap, generic)


def filter_bc(specs, store, cap=DEFAULT_CAP, generic=False):
    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    ivars, _ = referenced_vars(specs)
    return filter_mixed(specs, store, frozenset(ivars), cap, generic)


# ----------------------------------------------------------------------
# projection filter for roots

def _filter_roots_projection(spec, store, interval_vars):
    """Exact filter for one `roots` constraint without enumerating integer
    tuples: for a fixed target set T the variables decouple, so it suffices
    to sweep the subsets of ub(T) and intersect per-variable support.
    Cross-checked against the generic filter by tests."""
    base = store.base
    xs = spec.xs
    n = len(xs)
    S, T = spec.svars
    interval = [v in interval_vars for v in xs]
    true_dom = [store.int_mask(v) for v in xs]
    slb, sub = store.lb_mask(S), store.ub_mask(S)
    idx_mask = interval_mask(1, n, base)
    if slb & ~idx_mask:
        return FilterResult(False)
    sub &= slb | idx_mask
    tlb, tub = store.lb_mask(T), store.ub_mask(T)

    def fill(k):
        m = true_dom[k]
        if not interval[k]:
            return m
        lo = (m & -m).bit_length() - 1
        return interval_mask(lo + base, m.bit_length() - 1 + base, base)

    while True:
        eff = [fill(k) for k in range(n)]
        in_lb = [(slb >> (k + 1 - base)) & 1 == 1 for k in range(n)]
        in_ub = [(sub >> (k + 1 - base)) & 1 == 1 for k in range(n)]
        free_t = values_of(tub & ~tlb, base)
        supp = [0] * n
        s_in = [False] * n
        s_out = [False] * n
        t_union = 0
        t_inter = None
        for combo in range(1 << len(free_t)):
            tm = tlb
            for b, v in enumerate(free_t):
                if (combo >> b) & 1:
                    tm |= 1 << (v - base)
            ok = True
            for k in range(n):
                if in_lb[k]:
                    if not eff[k] & tm:
                        ok = False
                        break
                elif not in_ub[k]:
                    if not eff[k] & ~tm:
                        ok = False
                        break
            if not ok:
                continue
            t_union |= tm
            t_inter = tm if t_inter is None else t_inter & tm
            for k in range(n):
                cin = eff[k] & tm
                cout = eff[k] & ~tm
                if in_lb[k]:
                    supp[k] |= cin
                elif not in_ub[k]:
                    supp[k] |= cout
                else:
                    if cin:
                        supp[k] |= cin
                        s_in[k] = True
                    if cout:
                        supp[k] |= cout
                        s_out[k] = True
        if t_inter is None:
            return FilterResult(False)
        new_slb, new_sub = slb, slb
        for k in range(n):
            bit = 1 << (k + 1 - base)
            if in_lb[k]:
                continue
            if not in_ub[k]:
                continue
            if s_in[k]:
                new_sub |= bit
            if not s_out[k]:
                new_slb |= bit
        changed = (new_slb, new_sub, t_inter, t_union) != (slb, sub, tlb, tub)
        slb, sub, tlb, tub = new_slb, new_sub, t_inter, t_union
        for k in range(n):
            cur = true_dom[k]
            if interval[k]:
                sm = supp[k]
                if sm == 0:
                    return FilterResult(False)
                lo = (sm & -sm).bit_length() - 1 + base
                hi = sm.bit_length() - 1 + base
                new = cur & interval_mask(lo, hi, base)
            else:
                new = cur & supp[k]
            if new != cur:
                if new == 0:
                    return FilterResult(False)
                true_dom[k] = new
                changed = True
        if not changed:
            break
    return FilterResult(
        True,
        {v: true_dom[k] for k, v in enumerate(xs)},
        {S: slb, T: tlb},
        {S: sub, T: tub},
    )
