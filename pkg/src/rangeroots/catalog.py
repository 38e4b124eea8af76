"""Counting and occurrence constraints built from image/preimage networks.

Every builder posts the constraint as a decomposition over Range, Roots
and the primitive set links, introducing hidden set variables as needed.
The declarative side of each tag lives in the oracle's checker registry;
post_global records the spec on the model so solutions can be validated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import interval_mask, mask_of
from .range import OccursPropagator, RangePropagator
from .roots import HC, post_roots
from .sets import (
    BoolSum,
    CardLink,
    DisjointLink,
    IntMemberLink,
    ReifyMember,
    SingletonLink,
    SubsetLink,
    UnionLink,
    minmax_link,
)


@dataclass(frozen=True)
class ConstraintSpec:
    """Declarative form of one constraint.

    counts entries are ("var", int-var-id) or ("const", k); values carry
    ground value lists (or a relation symbol for card)."""

    tag: str
    xs: tuple = ()
    ys: tuple = ()
    svars: tuple = ()
    counts: tuple = ()
    values: tuple = ()


def _need(cond, msg):
    if not cond:
        raise ValueError(msg)


def _check_count(store, entry):
    _need(
        isinstance(entry, tuple) and len(entry) == 2 and entry[0] in ("var", "const"),
        "counts must be ('var', id) or ('const', k) pairs",
    )


def _check_index_range(store, n):
    _need(n >= 1, "constraint needs at least one variable")
    _need(store.lo <= 1 and n <= store.hi, "index set does not fit the universe")


def _free_set(model, name):
    return model.set_var(0, model.store.universe_mask, name)


def _ground_set(model, values, name):
    return model.set_var(values, values, name)


def _index_set(model, n, name):
    m = interval_mask(1, n, model.store.base)
    return model.set_var(m, m, name)


def _post_range(model, xs, svar, tvar):
    return [model.post(RangePropagator(model.store, xs, svar, tvar))]


def _post_roots(model, xs, svar, tvar, mode):
    state, props = post_roots(model, xs, svar, tvar, mode)
    return list(props)


def _b_alldifferent(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    s = _index_set(model, n, f"c{cid}.S")
    t = _free_set(model, f"c{cid}.T")
    props = _post_range(model, spec.xs, s, t)
    props.append(model.post(CardLink(t, ("const", n), "=")))
    return props


def _b_permutation(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    _need(len(spec.values) == n and len(set(spec.values)) == n, "permutation needs n distinct target values")
    s = _index_set(model, n, f"c{cid}.S")
    t = _ground_set(model, spec.values, f"c{cid}.T")
    return _post_range(model, spec.xs, s, t)


def _b_nvalue(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    _check_count(model.store, spec.counts[0])
    s = _index_set(model, n, f"c{cid}.S")
    t = _free_set(model, f"c{cid}.T")
    props = _post_range(model, spec.xs, s, t)
    props.append(model.post(CardLink(t, spec.counts[0], "=")))
    return props


def _b_counting_roots(rel):
    def build(model, spec, cid, mode):
        _check_index_range(model.store, len(spec.xs))
        _check_count(model.store, spec.counts[0])
        if rel != "=":
            _need(len(spec.values) == 1, "atmost/atleast count a single value")
        s = _free_set(model, f"c{cid}.S")
        t = _ground_set(model, spec.values, f"c{cid}.T")
        props = _post_roots(model, spec.xs, s, t, mode)
        props.append(model.post(CardLink(s, spec.counts[0], rel)))
        return props

    return build


def _b_gcc(model, spec, cid, mode):
    _check_index_range(model.store, len(spec.xs))
    _need(len(set(spec.values)) == len(spec.values), "gcc values must be distinct")
    _need(len(spec.values) == len(spec.counts), "gcc needs one count per value")
    props = []
    for j, (d, cnt) in enumerate(zip(spec.values, spec.counts), start=1):
        _check_count(model.store, cnt)
        s = _free_set(model, f"c{cid}.S{j}")
        t = _ground_set(model, (d,), f"c{cid}.T{j}")
        props += _post_roots(model, spec.xs, s, t, mode)
        props.append(model.post(CardLink(s, cnt, "=")))
    return props


def _b_disjoint(model, spec, cid, mode):
    n, m = len(spec.xs), len(spec.ys)
    _check_index_range(model.store, n)
    _check_index_range(model.store, m)
    s = _free_set(model, f"c{cid}.S")
    t = _free_set(model, f"c{cid}.T")
    props = _post_range(model, spec.xs, _index_set(model, n, f"c{cid}.I"), s)
    props += _post_range(model, spec.ys, _index_set(model, m, f"c{cid}.J"), t)
    props.append(model.post(DisjointLink(s, t)))
    return props


def _b_uses_range(model, spec, cid, mode):
    n, m = len(spec.xs), len(spec.ys)
    _check_index_range(model.store, n)
    _check_index_range(model.store, m)
    t = _free_set(model, f"c{cid}.T")
    t2 = _free_set(model, f"c{cid}.T2")
    props = _post_range(model, spec.xs, _index_set(model, n, f"c{cid}.I"), t)
    props += _post_range(model, spec.ys, _index_set(model, m, f"c{cid}.J"), t2)
    props.append(model.post(SubsetLink(t2, t)))
    return props


def _b_uses_roots(model, spec, cid, mode):
    n, m = len(spec.xs), len(spec.ys)
    _check_index_range(model.store, n)
    _check_index_range(model.store, m)
    t = _free_set(model, f"c{cid}.T")
    props = _post_range(model, spec.xs, _index_set(model, n, f"c{cid}.I"), t)
    props += _post_roots(model, spec.ys, _index_set(model, m, f"c{cid}.J"), t, mode)
    return props


def _b_common(model, spec, cid, mode):
    n, m = len(spec.xs), len(spec.ys)
    _check_index_range(model.store, n)
    _check_index_range(model.store, m)
    _check_count(model.store, spec.counts[0])
    _check_count(model.store, spec.counts[1])
    t = _free_set(model, f"c{cid}.T")
    v = _free_set(model, f"c{cid}.V")
    s = _free_set(model, f"c{cid}.S")
    u = _free_set(model, f"c{cid}.U")
    props = _post_range(model, spec.ys, _index_set(model, m, f"c{cid}.J"), t)
    props += _post_roots(model, spec.xs, s, t, mode)
    props.append(model.post(CardLink(s, spec.counts[0], "=")))
    props += _post_range(model, spec.xs, _index_set(model, n, f"c{cid}.I"), v)
    props += _post_roots(model, spec.ys, u, v, mode)
    props.append(model.post(CardLink(u, spec.counts[1], "=")))
    return props


def _b_assign_nvalues(model, spec, cid, mode):
    n = len(spec.xs)
    _need(n == len(spec.ys), "group and value variable lists must align")
    _check_index_range(model.store, n)
    _check_count(model.store, spec.counts[0])
    store = model.store
    groups = 0
    for x in spec.xs:
        _need(store.int_mask(x) & ~store.universe_mask == 0, "group values must fit the universe")
        groups |= store.int_mask(x)
    props = []
    for j in sorted(store.base + k for k in range(groups.bit_length()) if groups >> k & 1):
        s = _free_set(model, f"c{cid}.S{j}")
        t = _free_set(model, f"c{cid}.T{j}")
        props += _post_roots(model, spec.xs, s, _ground_set(model, (j,), f"c{cid}.G{j}"), mode)
        props += _post_range(model, spec.ys, s, t)
        props.append(model.post(CardLink(t, spec.counts[0], "<=")))
    return props


def _b_sym_alldifferent(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    idx = _index_set(model, n, f"c{cid}.I")
    tgt = _index_set(model, n, f"c{cid}.T")
    props = _post_range(model, spec.xs, idx, tgt)
    for i, x in enumerate(spec.xs, start=1):
        s = _free_set(model, f"c{cid}.S{i}")
        props += _post_roots(model, spec.xs, s, _ground_set(model, (i,), f"c{cid}.G{i}"), mode)
        props.append(model.post(IntMemberLink(x, s)))
        props.append(model.post(CardLink(s, ("const", 1), "=")))
    return props


def _b_element(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    _need(len(spec.ys) == 2, "element needs an index and a result variable")
    s = _free_set(model, f"c{cid}.S")
    t = _free_set(model, f"c{cid}.T")
    props = [
        model.post(SingletonLink(spec.ys[0], s)),
        model.post(SingletonLink(spec.ys[1], t)),
    ]
    props += _post_range(model, spec.xs, s, t)
    return props


def _b_contiguity(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    store = model.store
    zero_one = mask_of((0, 1), store.base)
    for x in spec.xs:
        _need(store.int_mask(x) & ~zero_one == 0, "contiguity needs 0/1 variables")
    s = _free_set(model, f"c{cid}.S")
    xmax = model.int_var(range(1, n + 1), f"c{cid}.max")
    ymin = model.int_var(range(1, n + 1), f"c{cid}.min")
    props = _post_roots(model, spec.xs, s, _ground_set(model, (1,), f"c{cid}.G"), mode)
    for prop in minmax_link(s, xmax, ymin, card_arith=True):
        props.append(model.post(prop))
    return props


def _b_open_gcc(model, spec, cid, mode):
    _check_index_range(model.store, len(spec.xs))
    _need(len(spec.svars) == 1, "open gcc needs the scope set variable")
    _need(len(spec.values) == len(spec.counts), "open gcc needs one count per value")
    props = []
    parts = []
    for j, (d, cnt) in enumerate(zip(spec.values, spec.counts), start=1):
        _check_count(model.store, cnt)
        s = _free_set(model, f"c{cid}.S{j}")
        parts.append(s)
        props += _post_roots(model, spec.xs, s, _ground_set(model, (d,), f"c{cid}.T{j}"), mode)
        props.append(model.post(CardLink(s, cnt, "=")))
    props.append(model.post(UnionLink(spec.svars[0], parts)))
    return props


def _b_open_alldifferent(model, spec, cid, mode):
    n = len(spec.xs)
    _check_index_range(model.store, n)
    _need(len(spec.svars) == 1, "open alldifferent needs the scope set variable")
    t = _free_set(model, f"c{cid}.T")
    k = model.int_var(range(0, n + 1), f"c{cid}.k")
    props = _post_range(model, spec.xs, spec.svars[0], t)
    props.append(model.post(CardLink(spec.svars[0], ("var", k), "=")))
    props.append(model.post(CardLink(t, ("var", k), "=")))
    return props


def _b_among_sum(model, spec, cid, mode):
    _check_count(model.store, spec.counts[0])
    dmask = mask_of(spec.values, model.store.base)
    props = []
    bs = []
    for i, x in enumerate(spec.xs, start=1):
        b = model.int_var((0, 1), f"c{cid}.b{i}")
        bs.append(b)
        props.append(model.post(ReifyMember(b, x, dmask)))
    props.append(model.post(BoolSum(bs, spec.counts[0])))
    return props


def _b_range_raw(model, spec, cid, mode):
    _need(len(spec.svars) == 2, "range needs the index and image set variables")
    return _post_range(model, spec.xs, spec.svars[0], spec.svars[1])


def _b_roots_raw(model, spec, cid, mode):
    _need(len(spec.svars) == 2, "roots needs the index and value set variables")
    return _post_roots(model, spec.xs, spec.svars[0], spec.svars[1], mode)


def _b_occurs(model, spec, cid, mode):
    _need(len(spec.svars) == 1, "occurs needs the covered set variable")
    return [model.post(OccursPropagator(model.store, spec.xs, spec.svars[0]))]


def _b_card(model, spec, cid, mode):
    _need(len(spec.svars) == 1 and len(spec.counts) == 1, "card needs one set and one count")
    _need(spec.values[0] in ("=", "<=", ">="), "card relation must be =, <= or >=")
    _check_count(model.store, spec.counts[0])
    return [model.post(CardLink(spec.svars[0], spec.counts[0], spec.values[0]))]


_BUILDERS = {
    "alldifferent": _b_alldifferent,
    "permutation": _b_permutation,
    "nvalue": _b_nvalue,
    "among": _b_counting_roots("="),
    "atmost": _b_counting_roots("<="),
    "atleast": _b_counting_roots(">="),
    "gcc": _b_gcc,
    "disjoint": _b_disjoint,
    "uses_range": _b_uses_range,
    "uses_roots": _b_uses_roots,
    "common": _b_common,
    "assign_nvalues": _b_assign_nvalues,
    "sym_alldifferent": _b_sym_alldifferent,
    "element": _b_element,
    "contiguity": _b_contiguity,
    "open_gcc": _b_open_gcc,
    "open_alldifferent": _b_open_alldifferent,
    "among_sum": _b_among_sum,
    "range": _b_range_raw,
    "roots": _b_roots_raw,
    "occurs": _b_occurs,
    "card": _b_card,
}

TAGS = frozenset(_BUILDERS)


def post_global(model, spec, mode=HC):
    """Post spec's decomposition on the model; returns the new propagators."""
    builder = _BUILDERS.get(spec.tag)
    if builder is None:
        raise ValueError(f"unknown constraint tag {spec.tag!r}")
    for entry in spec.counts:
        _check_count(model.store, entry)
    cid = len(model.specs)
    props = builder(model, spec, cid, mode)
    model.specs.append(spec)
    return props
