"""Maximum flow with lower and upper bounds, and the tight-flow subroutine.

Bounds may be infinite on either side.  Arcs are first rewritten so that
every lower bound is finite, the lower bounds are shifted out into node
imbalances, and a feasibility flow from a super source decides whether
any flow meets the bounds.  The maximum s-t flow is then found by
shortest augmenting paths on the residual network, all in exact
arithmetic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .core import Node, UncapInstance, excesses
from .rational import INF, ZERO, Q, Rational


class Infeasible(Exception):
    """No flow satisfies the arc bounds."""


class Unbounded(Exception):
    """An augmenting path of infinite capacity exists."""


@dataclass(frozen=True)
class BoundedArc:
    tail: Hashable
    head: Hashable
    lower: object = ZERO
    upper: object = INF


@dataclass
class FlowNetwork:
    nodes: list
    arcs: list
    source: Hashable
    sink: Hashable

    def __post_init__(self):
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        for a in self.arcs:
            if a.lower != -INF and a.upper != INF and a.lower > a.upper:
                raise ValueError(f"lower bound exceeds upper bound on {a}")


@dataclass
class MaxFlowResult:
    flow: list
    value: Rational
    min_cut: set


class _Residual:
    """Adjacency-list residual graph; capacities are rationals or INF."""

    def __init__(self, nodes):
        self.index = {v: i for i, v in enumerate(nodes)}
        self.head: list[int] = []
        self.cap: list = []
        self.adj: list[list[int]] = [[] for _ in nodes]

    def add_node(self, v):
        self.index[v] = len(self.adj)
        self.adj.append([])

    def add_edge(self, u, v, cap) -> int:
        iu, iv = self.index[u], self.index[v]
        e = len(self.head)
        self.head += [iv, iu]
        self.cap += [cap, ZERO]
        self.adj[iu].append(e)
        self.adj[iv].append(e + 1)
        return e

    def push(self, e, amount):
        if self.cap[e] != INF:
            self.cap[e] -= amount
        if self.cap[e ^ 1] != INF:
            self.cap[e ^ 1] += amount

    def augment(self, s, t, limit=INF, disabled=frozenset()) -> Rational:
        """Shortest augmenting paths from s to t; returns the total pushed."""
        si, ti = self.index[s], self.index[t]
        total = ZERO
        while limit == INF or total < limit:
            pred = [-1] * len(self.adj)
            pred[si] = -2
            queue = deque([si])
            while queue and pred[ti] == -1:
                u = queue.popleft()
                for e in self.adj[u]:
                    if e in disabled or (e ^ 1) in disabled:
                        continue
                    v = self.head[e]
                    if pred[v] == -1 and self.cap[e] != 0:
                        pred[v] = e
                        queue.append(v)
            if pred[ti] == -1:
                break
            bottleneck = INF if limit == INF else limit - total
            v = ti
            while v != si:
                e = pred[v]
                if self.cap[e] != INF and (bottleneck == INF or self.cap[e] < bottleneck):
                    bottleneck = self.cap[e]
                v = self.head[e ^ 1]
            if bottleneck == INF:
                raise Unbounded("augmenting path of infinite capacity")
            v = ti
            while v != si:
                e = pred[v]
                self.push(e, bottleneck)
                v = self.head[e ^ 1]
            total += bottleneck
        return total

    def reachable(self, s, disabled=frozenset()) -> set[int]:
        seen = {self.index[s]}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                if e in disabled or (e ^ 1) in disabled:
                    continue
                v = self.head[e]
                if v not in seen and self.cap[e] != 0:
                    seen.add(v)
                    queue.append(v)
        return seen


class _SuperNode:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


def max_flow_bounded(net: FlowNetwork) -> MaxFlowResult:
    """Exact maximum s-t flow subject to ``lower <= x <= upper`` on every arc.

    Raises Infeasible when no flow meets the bounds and Unbounded when the
    maximum is infinite.
    """
    res = _Residual(net.nodes)
    balance = {v: ZERO for v in net.nodes}
    # each original arc becomes one or two shifted edges:
    # (edge id, sign, shift) with x = sum(sign * (shift + flow on edge))
    pieces: list[list[tuple[int, int, Rational]]] = []
    for a in net.arcs:
        lo, up = a.lower, a.upper
        if lo == -INF and up == INF:
            e1 = res.add_edge(a.tail, a.head, INF)
            e2 = res.add_edge(a.head, a.tail, INF)
            pieces.append([(e1, 1, ZERO), (e2, -1, ZERO)])
            continue
        sign, tail, head = 1, a.tail, a.head
        if lo == -INF:
            # x <= up  becomes  y = -x >= -up on the reversed arc
            sign, tail, head = -1, a.head, a.tail
            lo, up = -up, INF
        cap = INF if up == INF else up - lo
        e = res.add_edge(tail, head, cap)
        if lo:
            balance[tail] -= lo
            balance[head] += lo
        pieces.append([(e, sign, lo)])

    s, t = net.source, net.sink
    # the terminals are exempt from conservation; a free return arc lets
    # the feasibility phase use them as a net source or sink in either direction
    back = res.add_edge(t, s, INF)
    forth = res.add_edge(s, t, INF)
    super_s, super_t = _SuperNode("S*"), _SuperNode("T*")
    res.add_node(super_s)
    res.add_node(super_t)
    need = ZERO
    for v in net.nodes:
        if balance[v] > 0:
            res.add_edge(super_s, v, balance[v])
            need += balance[v]
        elif balance[v] < 0:
            res.add_edge(v, super_t, -balance[v])
    if need:
        got = res.augment(super_s, super_t, limit=need)
        if got < need:
            raise Infeasible("bounds admit no feasible flow")
    base = res.cap[back ^ 1] - res.cap[forth ^ 1]
    # the super terminals are spent; only the return arcs have to be switched off
    disabled = {back, forth}
    extra = res.augment(s, t, disabled=disabled)
    value = base + extra

    flow = []
    for parts in pieces:
        x = ZERO
        for e, sign, shift in parts:
            x += sign * (shift + res.cap[e ^ 1])
        flow.append(x)
    cut_idx = res.reachable(s, disabled=disabled)
    names = list(res.index)
    cut = {names[i] for i in cut_idx if names[i] in balance}
    return MaxFlowResult(flow=flow, value=value, min_cut=cut)


class _Source:
    def __repr__(self):
        return "s"


def tight_flow(inst: UncapInstance, S, mu: Mapping[Node, Rational]) -> list:
    """Flow supported on tight arcs inside S that maximizes delivery to the sink.

    Raises Infeasible when the relabeled demands cannot be met with tight arcs.
    """
    S = set(S)
    t = inst.sink
    assert t in S
    for k, a in enumerate(inst.arcs):
        if a.tail in S and a.head in S:
            assert a.gain * mu[a.tail] <= mu[a.head], "labels are not feasible on S"
    src = _Source()
    order = [i for i in inst.nodes if i in S]
    tight = [
        k for k, a in enumerate(inst.arcs)
        if a.tail in S and a.head in S and a.gain * mu[a.tail] == mu[a.head]
    ]
    arcs = [BoundedArc(inst.arcs[k].tail, inst.arcs[k].head, ZERO, INF) for k in tight]
    others = [i for i in order if i != t]
    arcs += [BoundedArc(src, i, -INF, -inst.demand[i] / mu[i]) for i in others]
    result = max_flow_bounded(FlowNetwork(order + [src], arcs, src, t))
    f = [ZERO] * inst.m
    for k, x in zip(tight, result.flow):
        f[k] = x * mu[inst.arcs[k].tail]

    e = excesses(inst, f)
    worst = max((abs(inst.demand[j] / mu[j]) for j in others), default=ZERO)
    for i in others:
        assert e[i] >= 0, "tight flow left a deficit"
        assert e[i] / mu[i] <= inst.n * worst, "tight flow excess exceeds n * max |b^mu|"
    return f


def optimality_residual_check(inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational]):
    """None when the relabeled surplus is below 1/bound^3 (and then exactly 0).

    Otherwise returns the first node with positive excess as a witness.
    """
    e = excesses(inst, f)
    others = inst.others()
    rel = sum((e[i] / mu[i] for i in others), ZERO)
    if rel < Q(1, inst.bound ** 3):
        assert all(e[i] == 0 for i in others), "small surplus that is not zero"
        return None
    return next(i for i in others if e[i] > 0)
