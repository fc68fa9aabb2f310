"""Multiplicative shortest-path and cycle routines on gain graphs.

An edge is a tuple ``(tail, head, gain, key)``.  Path and cycle gains are
products, so every comparison that would use logarithms in the additive
setting is done on exact powers instead.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .rational import ONE, ZERO, Rational

Edge = tuple  # (tail, head, gain, key)


class GeneratingCycleFound(Exception):
    def __init__(self, cycle):
        super().__init__("flow-generating cycle present")
        self.cycle = cycle


def cycle_gain(edges: Sequence[Edge], cycle: Iterable[int]) -> Rational:
    g = ONE
    for e in cycle:
        g *= edges[e][2]
    return g


def best_gains_to(nodes: Sequence[Hashable], edges: Sequence[Edge], target) -> dict:
    """Highest path gain from every node to ``target``; unreachable nodes are absent.

    Raises GeneratingCycleFound if some cycle that reaches the target has gain above 1.
    """
    best = {target: ONE}
    for _ in range(len(nodes)):
        changed = False
        for u, v, g, _key in edges:
            if v in best:
                cand = g * best[v]
                if u not in best or cand > best[u]:
                    best[u] = cand
                    changed = True
        if not changed:
            return best
    raise GeneratingCycleFound(find_generating_cycle(nodes, edges))


def _cycle_in_preds(edges, pred, start):
    # follow predecessor links until a node repeats; return that loop in travel order
    seen = {}
    order = []
    v = start
    while v not in seen:
        seen[v] = len(order)
        order.append(pred[v])
        v = edges[pred[v]][0]
    return list(reversed(order[seen[v]:]))


def find_generating_cycle(nodes: Sequence[Hashable], edges: Sequence[Edge]) -> list[int] | None:
    """Edge indices of some cycle with gain above 1, or None.

    Bellman-Ford from a virtual source joined to every node with gain 1.
    """
    dist = {v: ONE for v in nodes}
    pred: dict = {}
    last = None
    for _ in range(len(nodes) + 1):
        last = None
        for idx, (u, v, g, _key) in enumerate(edges):
            cand = dist[u] * g
            if cand > dist[v]:
                dist[v] = cand
                pred[v] = idx
                last = v
        if last is None:
            return None
    v = last
    for _ in range(len(nodes)):
        v = edges[pred[v]][0]
    cycle = _cycle_in_preds(edges, pred, v)
    assert cycle_gain(edges, cycle) > 1
    return cycle


def _mean_greater(a: tuple, b: tuple) -> bool:
    # (gain, length) pairs compared by gain ** (1/length), without roots
    return a[0] ** b[1] > b[0] ** a[1]


def max_mean_gain_cycle(nodes: Sequence[Hashable], edges: Sequence[Edge]) -> list[int] | None:
    """A cycle maximizing the geometric mean gain, or None when no cycle has gain above 1.

    Karp's recurrence over walks of exactly k edges, with exact comparisons.
    Ties between cycles on the extremal walk go to the lexicographically
    smallest sorted key list.
    """
    n = len(nodes)
    if n == 0 or not edges:
        return None
    walk = [{v: ONE for v in nodes}]
    back: list[dict] = [{}]
    for k in range(1, n + 1):
        cur, prv = {}, {}
        for idx, (u, v, g, _key) in enumerate(edges):
            if u in walk[k - 1]:
                cand = walk[k - 1][u] * g
                if v not in cur or cand > cur[v]:
                    cur[v] = cand
                    prv[v] = idx
        walk.append(cur)
        back.append(prv)

    best_v, best_val = None, None
    for v in nodes:
        if v not in walk[n]:
            continue
        worst = None
        for k in range(n):
            if v in walk[k]:
                val = (walk[n][v] / walk[k][v], n - k)
                if worst is None or _mean_greater(worst, val):
                    worst = val
        if worst is not None and (best_val is None or _mean_greater(worst, best_val)):
            best_v, best_val = v, worst
    if best_val is None or not best_val[0] > 1:
        return None

    # unwind the extremal n-edge walk and take the best cycle lying on it
    seq = []
    v = best_v
    for k in range(n, 0, -1):
        idx = back[k][v]
        seq.append(idx)
        v = edges[idx][0]
    seq.reverse()
    cycles = []
    stack_nodes = [edges[seq[0]][0]]
    stack_edges: list[int] = []
    for idx in seq:
        stack_edges.append(idx)
        head = edges[idx][1]
        if head in stack_nodes:
            pos = stack_nodes.index(head)
            cycles.append(stack_edges[pos:])
            del stack_edges[pos:]
            del stack_nodes[pos + 1:]
        else:
            stack_nodes.append(head)

    chosen = None
    for cyc in cycles:
        val = (cycle_gain(edges, cyc), len(cyc))
        key = sorted(edges[e][3] for e in cyc)
        if chosen is None or _mean_greater(val, chosen[0]) or (
            not _mean_greater(chosen[0], val) and key < chosen[1]
        ):
            chosen = (val, key, cyc)
    if chosen is not None and chosen[0][0] > 1:
        return chosen[2]
    return find_generating_cycle(nodes, edges)


def _digraph(nodes, edges) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    g.add_edges_from((u, v) for u, v, _g, _k in edges)
    return g


def reachable(nodes: Iterable[Hashable], edges: Sequence[Edge], sources: Iterable[Hashable]) -> set:
    g = _digraph(nodes, edges)
    seen = set(sources)
    for s in list(seen):
        seen |= nx.descendants(g, s)
    return seen


def strongly_connected_components(nodes: Sequence[Hashable], edges: Sequence[Edge]) -> list[set]:
    return [set(c) for c in nx.strongly_connected_components(_digraph(nodes, edges))]


def generating_closure(nodes: Sequence[Hashable], edges: Sequence[Edge]) -> tuple[set, list]:
    """Nodes reachable from some cycle of gain above 1, and one such cycle per round.

    Cycles are found one at a time among the nodes not yet covered, so every
    returned cycle is disjoint from the closure of the earlier ones.
    """
    zone: set = set()
    cycles = []
    while True:
        rest = [i for i in nodes if i not in zone]
        keep = [p for p, e in enumerate(edges) if e[0] not in zone and e[1] not in zone]
        found = find_generating_cycle(rest, [edges[p] for p in keep])
        if found is None:
            return zone, cycles
        cycle = [keep[p] for p in found]
        cycles.append(cycle)
        zone |= reachable(nodes, edges, [edges[p][0] for p in cycle])


def cycle_supply_flows(edges: Sequence[Edge], zone: set, cycles: list, need: Mapping) -> dict:
    """Flows on edges inside ``zone`` delivering ``need[i] >= 0`` to each node.

    Every node of ``zone`` must be reachable from one of ``cycles``.  Each
    demand is routed from the root of the first cycle reaching it along a
    breadth-first tree, and the root's total is produced by going around
    its cycle.  Returns ``{edge position: flow}``; all other nodes balance.
    """
    out: dict = {}
    for p, (u, v, _g, _k) in enumerate(edges):
        if u in zone and v in zone:
            out.setdefault(u, []).append((v, p))
    owner, parent = {}, {}
    queue = deque()
    for c, cycle in enumerate(cycles):
        root = edges[cycle[0]][0]
        if root not in owner:
            owner[root] = c
            parent[root] = None
            queue.append(root)
    while queue:
        u = queue.popleft()
        for v, p in out.get(u, ()):
            if v not in owner:
                owner[v] = owner[u]
                parent[v] = p
                queue.append(v)
    flows: dict = {}
    at_root = [ZERO] * len(cycles)
    for i in zone:
        if not need.get(i):
            continue
        chain = []
        v = i
        while parent[v] is not None:
            chain.append(parent[v])
            v = edges[parent[v]][0]
        chain.reverse()
        gain = ONE
        for p in chain:
            gain *= edges[p][2]
        amount = need[i] / gain
        at_root[owner[i]] += amount
        for p in chain:
            flows[p] = flows.get(p, ZERO) + amount
            amount *= edges[p][2]
    for c, cycle in enumerate(cycles):
        if not at_root[c]:
            continue
        # x sent around the cycle returns as gain * x
        amount = at_root[c] / (cycle_gain(edges, cycle) - 1)
        for p in cycle:
            flows[p] = flows.get(p, ZERO) + amount
            amount *= edges[p][2]
    return flows
