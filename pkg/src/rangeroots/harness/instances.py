"""Line-oriented instance files.

    # any line may carry a trailing comment
    universe 1 10
    int X3 in {1,2,4}
    set S lb {2} ub {1,2,3}
    con roots [X1,X2,X3] S T
    con among [X1,X2] {2,5} N
    con card T = N

One declaration or constraint per line, '#' starts a comment, and the
universe line comes first.  Constraint arguments follow the catalog:
`[..]` lists integer variables, `{..}` is a literal value set, a bare
name is a set variable or a count variable, a bare integer a constant
count.  `table` lines carry allowed pairs as `{(1,2),(2,1)}`.

Set variables first seen on a `con` line get full bounds; count
variables get 0..n for the n variables of their constraint.  Integer
variables in `[..]` lists must be declared, their domains cannot be
guessed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..catalog import ConstraintSpec, post_global
from ..core import mask_of
from ..engine import Model
from ..roots import HC
from .binary import TablePropagator

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_INT = re.compile(r"-?\d+\Z")
_PAIR = re.compile(r"\((-?\d+),(-?\d+)\)")

# token kinds consumed by each constraint, in argument order
SIGNATURES = {
    "range": ("xs", "sv", "sv"),
    "roots": ("xs", "sv", "sv"),
    "occurs": ("xs", "sv"),
    "alldifferent": ("xs",),
    "permutation": ("xs", "vals"),
    "nvalue": ("xs", "count"),
    "among": ("xs", "vals", "count"),
    "atmost": ("xs", "vals", "count"),
    "atleast": ("xs", "vals", "count"),
    "gcc": ("xs", "vals", "counts"),
    "disjoint": ("xs", "ys"),
    "uses_range": ("xs", "ys"),
    "uses_roots": ("xs", "ys"),
    "common": ("xs", "ys", "count", "count"),
    "assign_nvalues": ("xs", "ys", "count"),
    "sym_alldifferent": ("xs",),
    "element": ("xs", "y", "y"),
    "contiguity": ("xs",),
    "open_gcc": ("xs", "sv", "vals", "counts"),
    "open_alldifferent": ("xs", "sv"),
    "among_sum": ("xs", "vals", "count"),
    "card": ("sv", "rel", "count"),
    "table": ("xs", "pairs"),
}


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class ConLine:
    """One `con` line with variables still referred to by name."""

    tag: str
    xs: tuple = ()
    ys: tuple = ()
    svars: tuple = ()
    counts: tuple = ()  # ("var", name) | ("const", k)
    values: tuple = ()


@dataclass(frozen=True)
class Instance:
    lo: int
    hi: int
    ints: tuple = ()  # (name, values)
    sets: tuple = ()  # (name, lb values, ub values)
    cons: tuple = ()


@dataclass
class Built:
    model: Model
    int_ids: dict = field(default_factory=dict)
    set_ids: dict = field(default_factory=dict)


def _fail(ln, msg):
    raise InstanceError(f"line {ln}: {msg}")


def _parse_values(tok, ln):
    if not (tok.startswith("{") and tok.endswith("}")):
        _fail(ln, f"expected a value set like {{1,2}}, got {tok!r}")
    inner = tok[1:-1]
    if not inner:
        return ()
    out = []
    for part in inner.split(","):
        if not _INT.match(part):
            _fail(ln, f"bad value {part!r} in {tok!r}")
        out.append(int(part))
    return tuple(out)


def _parse_names(tok, ln):
    if not (tok.startswith("[") and tok.endswith("]")):
        _fail(ln, f"expected a variable list like [X1,X2], got {tok!r}")
    inner = tok[1:-1]
    if not inner:
        return ()
    out = []
    for part in inner.split(","):
        if not _NAME.match(part):
            _fail(ln, f"bad variable name {part!r} in {tok!r}")
        out.append(part)
    return tuple(out)


def _parse_count(tok, ln):
    if _INT.match(tok):
        return ("const", int(tok))
    if _NAME.match(tok):
        return ("var", tok)
    _fail(ln, f"expected a count (integer or variable), got {tok!r}")


def _parse_pairs(tok, ln):
    if not (tok.startswith("{") and tok.endswith("}")):
        _fail(ln, f"expected allowed pairs like {{(1,2),(2,1)}}, got {tok!r}")
    pairs = tuple((int(a), int(b)) for a, b in _PAIR.findall(tok))
    if _fmt_pairs(pairs) != tok:
        _fail(ln, f"malformed pair list {tok!r}")
    return pairs


def _parse_con(parts, ln):
    tag = parts[1].replace("-", "_")
    sig = SIGNATURES.get(tag)
    if sig is None:
        _fail(ln, f"unknown constraint tag {parts[1]!r}")
    toks = parts[2:]
    if len(toks) != len(sig):
        _fail(ln, f"{parts[1]} takes {len(sig)} arguments, got {len(toks)}")
    xs, ys, svars, counts, values = (), (), (), (), ()
    for kind, tok in zip(sig, toks):
        if kind == "xs":
            xs = _parse_names(tok, ln)
        elif kind == "ys":
            ys = _parse_names(tok, ln)
        elif kind == "y":
            if not _NAME.match(tok):
                _fail(ln, f"bad variable name {tok!r}")
            ys += (tok,)
        elif kind == "sv":
            if not _NAME.match(tok):
                _fail(ln, f"bad set variable name {tok!r}")
            svars += (tok,)
        elif kind == "vals":
            values += _parse_values(tok, ln)
        elif kind == "rel":
            if tok not in ("=", "<=", ">="):
                _fail(ln, f"bad relation {tok!r}, want =, <= or >=")
            values += (tok,)
        elif kind == "count":
            counts += (_parse_count(tok, ln),)
        elif kind == "counts":
            if not (tok.startswith("[") and tok.endswith("]")) or not tok[1:-1]:
                _fail(ln, f"expected a count list like [O1,O2], got {tok!r}")
            counts = tuple(_parse_count(t, ln) for t in tok[1:-1].split(","))
        else:  # pairs
            values = _parse_pairs(tok, ln)
    return ConLine(tag, xs, ys, svars, counts, values)


def parse_text(text):
    """Parse instance text into an Instance, with line-numbered errors."""
    lo = hi = None
    ints, sets, cons = [], [], []
    names = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "universe":
            if lo is not None:
                _fail(ln, "duplicate universe line")
            if len(parts) != 3 or not (_INT.match(parts[1]) and _INT.match(parts[2])):
                _fail(ln, "universe takes two integers")
            lo, hi = int(parts[1]), int(parts[2])
            if lo > hi:
                _fail(ln, "empty universe")
            continue
        if lo is None:
            _fail(ln, "the universe line must come first")
        if head == "int":
            if len(parts) != 4 or parts[2] != "in":
                _fail(ln, "expected: int NAME in {values}")
            name = parts[1]
            if not _NAME.match(name):
                _fail(ln, f"bad variable name {name!r}")
            if name in names:
                _fail(ln, f"duplicate variable {name!r}")
            vals = _parse_values(parts[3], ln)
            if not vals:
                _fail(ln, f"{name} needs a non-empty domain")
            if min(vals) < min(lo, 0):
                _fail(ln, f"{name} has values below the representable range")
            names.add(name)
            ints.append((name, vals))
        elif head == "set":
            if len(parts) != 6 or parts[2] != "lb" or parts[4] != "ub":
                _fail(ln, "expected: set NAME lb {values} ub {values}")
            name = parts[1]
            if not _NAME.match(name):
                _fail(ln, f"bad variable name {name!r}")
            if name in names:
                _fail(ln, f"duplicate variable {name!r}")
            lbv = _parse_values(parts[3], ln)
            ubv = _parse_values(parts[5], ln)
            if not set(lbv) <= set(ubv):
                _fail(ln, f"{name}: lb must lie within ub")
            if any(v < lo or v > hi for v in ubv):
                _fail(ln, f"{name}: bound leaves the universe")
            names.add(name)
            sets.append((name, lbv, ubv))
        elif head == "con":
            if len(parts) < 2:
                _fail(ln, "missing constraint tag")
            cons.append(_parse_con(parts, ln))
        else:
            _fail(ln, f"unknown directive {head!r}")
    if lo is None:
        raise InstanceError("missing universe line")
    return Instance(lo, hi, tuple(ints), tuple(sets), tuple(cons))


def parse_instance(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())


# ----------------------------------------------------------------------
# emission


def _fmt_vals(values):
    return "{" + ",".join(str(v) for v in values) + "}"


def _fmt_names(names):
    return "[" + ",".join(names) + "]"


def _fmt_count(entry):
    return str(entry[1]) if entry[0] == "const" else entry[1]


def _fmt_pairs(pairs):
    return "{" + ",".join(f"({a},{b})" for a, b in pairs) + "}"


def _emit_con(con):
    toks = ["con", con.tag.replace("_", "-")]
    yi = svi = ci = 0
    for kind in SIGNATURES[con.tag]:
        if kind == "xs":
            toks.append(_fmt_names(con.xs))
        elif kind == "ys":
            toks.append(_fmt_names(con.ys))
        elif kind == "y":
            toks.append(con.ys[yi])
            yi += 1
        elif kind == "sv":
            toks.append(con.svars[svi])
            svi += 1
        elif kind == "vals":
            toks.append(_fmt_vals(con.values))
        elif kind == "rel":
            toks.append(con.values[0])
        elif kind == "count":
            toks.append(_fmt_count(con.counts[ci]))
            ci += 1
        elif kind == "counts":
            toks.append(_fmt_names(tuple(_fmt_count(c) for c in con.counts)))
        else:
            toks.append(_fmt_pairs(con.values))
    return " ".join(toks)


def emit_instance(inst):
    lines = [f"universe {inst.lo} {inst.hi}"]
    for name, vals in inst.ints:
        lines.append(f"int {name} in {_fmt_vals(vals)}")
    for name, lbv, ubv in inst.sets:
        lines.append(f"set {name} lb {_fmt_vals(lbv)} ub {_fmt_vals(ubv)}")
    for con in inst.cons:
        lines.append(_emit_con(con))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# model construction


def _count_cap(con):
    return max(len(con.xs), len(con.ys), 1)


def build_model(inst, mode=HC, shuffle=None):
    """Turn an Instance into a Model with every constraint posted."""
    model = Model(inst.lo, inst.hi, shuffle=shuffle)
    store = model.store
    int_ids, set_ids = {}, {}
    for name, vals in inst.ints:
        int_ids[name] = model.int_var(vals, name)
    for name, lbv, ubv in inst.sets:
        set_ids[name] = model.set_var(mask_of(lbv, store.base), mask_of(ubv, store.base), name)

    def ivar(name, cap=None):
        if name in set_ids:
            raise InstanceError(f"{name} is a set variable")
        if name not in int_ids:
            if cap is None:
                raise InstanceError(f"unknown integer variable {name!r}")
            int_ids[name] = model.int_var(range(0, cap + 1), name)
        return int_ids[name]

    def svar(name):
        if name in int_ids:
            raise InstanceError(f"{name} is an integer variable")
        if name not in set_ids:
            set_ids[name] = model.set_var(0, store.universe_mask, name)
        return set_ids[name]

    for con in inst.cons:
        cap = _count_cap(con) if con.tag != "card" else inst.hi - inst.lo + 1
        counts = tuple(
            e if e[0] == "const" else ("var", ivar(e[1], cap)) for e in con.counts
        )
        spec = ConstraintSpec(
            con.tag,
            xs=tuple(ivar(n) for n in con.xs),
            ys=tuple(ivar(n) for n in con.ys),
            svars=tuple(svar(n) for n in con.svars),
            counts=counts,
            values=con.values,
        )
        if con.tag == "table":
            model.post(TablePropagator(store, spec.xs[0], spec.xs[1], spec.values))
            model.specs.append(spec)
        else:
            post_global(model, spec, mode)
    return Built(model, int_ids, set_ids)
