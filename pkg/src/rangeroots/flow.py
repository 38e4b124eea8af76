"""Unit-capacity flow network for the coverage side of set-image propagation.

The network has one node per value appearing in any domain, one "escape"
node per value that is not required by the target set's lower bound, and one
node per variable.  A value flows either through its escape or through a
variable whose domain holds it; all arcs have capacity one.  The constraint
is satisfiable iff every value node can be saturated, and an arc (value,
variable) is part of some maximum flow iff it carries flow or its endpoints
share a strongly connected component of the residual graph.
"""

from __future__ import annotations

from collections import deque

from .core import values_of

ESC = -1  # pseudo target: the value's own escape node


class OccursNetwork:
    """Adjacency view of the current domains.

    adj maps each value to the list of variable indices whose domain holds
    it; escape marks values not pinned by the target lower bound.
    """

    def __init__(self, domains, lb_mask, base):
        self.base = base
        self.nvars = len(domains)
        self.adj = {}
        self.escape = {}
        union = 0
        for m in domains:
            union |= m
        for v in values_of(union, base):
            bit = 1 << (v - base)
            self.adj[v] = [i for i, m in enumerate(domains) if m & bit]
            self.escape[v] = not (lb_mask & bit)

    @property
    def values(self):
        return sorted(self.adj)

    def remove_arc(self, v, i):
        self.adj[v].remove(i)

    def remove_value(self, v):
        del self.adj[v]
        del self.escape[v]


class UnitFlow:
    def __init__(self):
        self.match = {}  # value -> var index, or ESC
        self.var_use = {}  # var index -> value

    def assign(self, v, target):
        old = self.match.get(v)
        if old is not None and old != ESC and self.var_use.get(old) == v:
            del self.var_use[old]
        self.match[v] = target
        if target != ESC:
            self.var_use[target] = v

    def unmatch(self, v):
        old = self.match.pop(v, None)
        if old is not None and old != ESC and self.var_use.get(old) == v:
            del self.var_use[old]

    def value(self):
        return len(self.match)


def _flip(flow, parent, v, target):
    # flip the alternating path back to the search root
    while True:
        flow.assign(v, target)
        prev = parent[v]
        if prev is None:
            return
        v, target = prev


def _try_match(net, flow, src):
    """One augmenting-path search from an unmatched value node."""
    if net.escape[src]:
        flow.assign(src, ESC)
        return True
    parent = {src: None}
    dq = deque([src])
    while dq:
        v = dq.popleft()
        for i in net.adj[v]:
            w = flow.var_use.get(i)
            if w is None:
                _flip(flow, parent, v, i)
                return True
            if w not in parent:
                parent[w] = (v, i)
                if net.escape[w]:
                    _flip(flow, parent, w, ESC)
                    return True
                dq.append(w)
    return False


def maximize_flow(net, flow=None):
    """Saturate every value node.  Escape arcs first, then augmenting paths
    for the values the lower bound pins.  Returns (flow, saturated)."""
    if flow is None:
        flow = UnitFlow()
    pinned = []
    for v in net.adj:
        if v in flow.match:
            continue
        if net.escape[v]:
            flow.assign(v, ESC)
        else:
            pinned.append(v)
    for v in pinned:
        if not _try_match(net, flow, v):
            return flow, False
    return flow, True


def repair_flow(net, flow, lost_arcs=(), lost_values=()):
    """Re-augment after arc deletions.  The network must already reflect the
    deletions; each repair costs at most one augmenting search per arc that
    carried flow.  Returns (flow, saturated)."""
    for v in lost_values:
        flow.unmatch(v)
    for v, i in lost_arcs:
        if flow.match.get(v) == i:
            flow.unmatch(v)
    for v in net.adj:
        if v not in flow.match and not _try_match(net, flow, v):
            return flow, False
    return flow, True


def strongly_connected(succ):
    """Iterative Tarjan; succ is a list of successor lists.  Returns one
    component id per node, components numbered in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack = []
    ncomp = 0
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, pos = work[-1]
            if pos == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            for k in range(pos, len(succ[node])):
                nxt = succ[node][k]
                if index[nxt] == -1:
                    work[-1] = (node, k + 1)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if on_stack[nxt] and low[node] > index[nxt]:
                    low[node] = index[nxt]
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                while True:
                    top = stack.pop()
                    on_stack[top] = False
                    comp[top] = ncomp
                    if top == node:
                        break
                ncomp += 1
            if work:
                parent = work[-1][0]
                if low[parent] > low[node]:
                    low[parent] = low[node]
    return comp


IN_FLOW = "in_flow"
VIA_CYCLE = "via_cycle"
DEAD = "dead"


def classify_arcs(net, flow):
    """Label every (value, variable) arc of a saturated flow.

    Residual graph: flow arcs reversed, others kept; an unused arc survives
    iff both endpoints sit in one strongly connected component.  The source
    is a residual sink once the flow saturates every value, so it cannot lie
    on a cycle and is left out.
    """
    values = list(net.adj)
    nid = {"t": 0}
    for v in values:
        nid[("v", v)] = len(nid)
        if net.escape[v]:
            nid[("z", v)] = len(nid)
        for i in net.adj[v]:
            if ("x", i) not in nid:
                nid[("x", i)] = len(nid)
    succ = [[] for _ in range(len(nid))]

    used_vars = set()
    for v in values:
        vn = nid[("v", v)]
        mv = flow.match.get(v)
        for i in net.adj[v]:
            xi = nid[("x", i)]
            if mv == i:
                succ[xi].append(vn)
                used_vars.add(i)
            else:
                succ[vn].append(xi)
        if net.escape[v]:
            zv = nid[("z", v)]
            if mv == ESC:
                succ[zv].append(vn)
                succ[0].append(zv)
            else:
                succ[vn].append(zv)
                succ[zv].append(0)
    for key, xn in nid.items():
        if isinstance(key, tuple) and key[0] == "x":
            if key[1] in used_vars:
                succ[0].append(xn)
            else:
                succ[xn].append(0)

    comp = strongly_connected(succ)
    labels = {}
    for v in values:
        vn = comp[nid[("v", v)]]
        mv = flow.match.get(v)
        for i in net.adj[v]:
            if mv == i:
                labels[(v, i)] = IN_FLOW
            elif vn == comp[nid[("x", i)]]:
                labels[(v, i)] = VIA_CYCLE
            else:
                labels[(v, i)] = DEAD
    return labels
