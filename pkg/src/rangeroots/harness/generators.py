"""Random instance generators.

Every generator is a pure function of its parameters and seed: calling it
twice gives equal Instance objects, so emitted files are byte-identical.
Seeds may be integers or strings; the experiment drivers build structured
string seeds so any report row can be regenerated on its own.
"""

from __future__ import annotations

import random

from .instances import ConLine, Instance


def roots_instance(n, m, k, r, seed, free_t=False):
    """Preimage benchmark ⟨n, m, k, r⟩: n variables over {1..m}, k decided
    elements in each of S and T, r random value removals overall.

    Each of the k sampled elements goes to the lower bound or out of the
    upper bound with equal probability; removals keep every integer domain
    non-empty.  With free_t the bounds of T stay untouched."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if not 0 <= k <= min(n, m):
        raise ValueError("k must lie in [0, min(n, m)]")
    if not 0 <= r <= n * (m - 1):
        raise ValueError("r must lie in [0, n(m-1)]")
    rng = random.Random(seed)
    doms = [list(range(1, m + 1)) for _ in range(n)]
    for _ in range(r):
        pool = [(i, v) for i in range(n) if len(doms[i]) > 1 for v in doms[i]]
        i, v = rng.choice(pool)
        doms[i].remove(v)

    def pick_bounds(universe):
        chosen = rng.sample(universe, k)
        lb, dropped = [], []
        for e in chosen:
            (lb if rng.random() < 0.5 else dropped).append(e)
        ub = [e for e in universe if e not in dropped]
        return tuple(sorted(lb)), tuple(ub)

    s_lb, s_ub = pick_bounds(list(range(1, n + 1)))
    if free_t:
        t_lb, t_ub = (), tuple(range(1, m + 1))
    else:
        t_lb, t_ub = pick_bounds(list(range(1, m + 1)))
    names = tuple(f"X{i + 1}" for i in range(n))
    return Instance(
        lo=1,
        hi=max(n, m),
        ints=tuple((names[i], tuple(doms[i])) for i in range(n)),
        sets=(("S", s_lb, s_ub), ("T", t_lb, t_ub)),
        cons=(ConLine("roots", xs=names, svars=("S", "T")),),
    )


def model_b_instance(nx, ny, nz, d, m1, t, m2, overlap, seed):
    """Binary CSP with image-subset side constraints.

    nz variables over {1..d}; m1 distinct variable pairs, each with exactly
    t distinct forbidden tuples; m2 uses-range constraints over scopes of
    nx+ny variables, sampled freely (overlap) or cut from consecutive
    blocks (disjoint)."""
    if nz < 2 or d < 1:
        raise ValueError("need at least two variables and one value")
    if not 0 <= m1 <= nz * (nz - 1) // 2:
        raise ValueError("m1 exceeds the number of variable pairs")
    if not 0 <= t <= d * d:
        raise ValueError("t exceeds the number of tuples")
    need = nx + ny if overlap else m2 * (nx + ny)
    if need > nz:
        raise ValueError("uses scopes do not fit nz variables")
    rng = random.Random(seed)
    names = tuple(f"X{i + 1}" for i in range(nz))
    all_pairs = [(i, j) for i in range(1, nz + 1) for j in range(i + 1, nz + 1)]
    cons = []
    for i, j in rng.sample(all_pairs, m1):
        forb = set(rng.sample(range(d * d), t))
        allowed = tuple(
            (idx // d + 1, idx % d + 1) for idx in range(d * d) if idx not in forb
        )
        cons.append(ConLine("table", xs=(names[i - 1], names[j - 1]), values=allowed))
    for c in range(m2):
        if overlap:
            scope = rng.sample(range(1, nz + 1), nx + ny)
        else:
            start = c * (nx + ny)
            scope = list(range(start + 1, start + nx + ny + 1))
        xs = tuple(names[i - 1] for i in scope[:nx])
        ys = tuple(names[i - 1] for i in scope[nx:])
        cons.append(ConLine("uses_range", xs=xs, ys=ys))
    return Instance(
        lo=1,
        hi=max(d, nx, ny),
        ints=tuple((name, tuple(range(1, d + 1))) for name in names),
        cons=tuple(cons),
    )


def shopper_count(s):
    """Shoppers hired for s salesladies: s+2 rounded up to a multiple of 4."""
    return -(-(s + 2) // 4) * 4


def mystery_instance(s, seed, among_via="roots"):
    """Visit plan: 4 weekly visits to each of s salesladies.

    V{w}_{l} is the shopper visiting lady l in week w.  Shoppers of one
    week are pairwise different, as are the four shoppers of one lady;
    every shopper makes between floor and ceiling of the average number
    of visits; no lady may be covered by a single shopper group, stated
    as one per-group counting constraint with count 0..3.  The groups are
    a uniform 4-way split of the shoppers drawn from the seed.

    among_via picks the encoding of the per-group constraints: "roots"
    for the preimage decomposition, "sum" for reified memberships."""
    if s < 1:
        raise ValueError("need at least one saleslady")
    if among_via not in ("roots", "sum"):
        raise ValueError("among_via must be 'roots' or 'sum'")
    rng = random.Random(seed)
    p = shopper_count(s)
    visits = 4 * s
    shoppers = list(range(1, p + 1))
    rng.shuffle(shoppers)
    size = p // 4
    groups = [tuple(sorted(shoppers[g * size : (g + 1) * size])) for g in range(4)]

    v_names = [[f"V{w}_{l}" for l in range(1, s + 1)] for w in range(1, 5)]
    o_names = [f"O{j}" for j in range(1, p + 1)]
    o_dom = tuple(range(visits // p, -(-visits // p) + 1))
    ints = [(name, tuple(range(1, p + 1))) for row in v_names for name in row]
    ints += [(name, o_dom) for name in o_names]
    tag = "among" if among_via == "roots" else "among_sum"
    cons = []
    for w in range(4):
        cons.append(ConLine("alldifferent", xs=tuple(v_names[w])))
    for l in range(s):
        cons.append(ConLine("alldifferent", xs=tuple(v_names[w][l] for w in range(4))))
    cons.append(
        ConLine(
            "gcc",
            xs=tuple(name for row in v_names for name in row),
            counts=tuple(("var", name) for name in o_names),
            values=tuple(range(1, p + 1)),
        )
    )
    for l in range(s):
        row = tuple(v_names[w][l] for w in range(4))
        for g in range(4):
            name = f"N{l + 1}_{g + 1}"
            ints.append((name, (0, 1, 2, 3)))
            cons.append(ConLine(tag, xs=row, values=groups[g], counts=(("var", name),)))
    return Instance(
        lo=1,
        hi=max(visits, p),
        ints=tuple(ints),
        cons=tuple(cons),
    )
