"""Capacitated instances and their reduction to the uncapacitated form.

Every arc ``ij`` with a finite capacity ``u`` becomes a new node ``k`` with
demand ``gain * u`` fed by ``i -> k`` (the original gain) and ``j -> k``
(gain 1).  Flow on ``j -> k`` stands for unused capacity, so ``j`` gives
up ``gain * u`` of demand in exchange.  Nodes that cannot reach the sink
afterwards get an auxiliary arc with a gain too small to matter.

Flow-generating cycles of uncapacitated arcs that cannot reach the sink
over uncapacitated arcs are resolved before the reduction: every node
they reach has unlimited supply, so its capacitated out-arcs are
saturated, its in-arcs stay empty, and it is left out of the reduced
instance.  Without this step the auxiliary arcs would connect such a
cycle to the sink and make the reduced instance unbounded.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from .certify import check_optimality_std
from .core import Arc, UncapInstance, excesses, residual_arcs
from .gaincycles import cycle_supply_flows, find_generating_cycle, generating_closure, reachable
from .generate import fit_bound
from .maxflow import Unbounded
from .rational import INF, ONE, ZERO, Q, Rational, is_inf


@dataclass(frozen=True)
class StdArc:
    tail: Hashable
    head: Hashable
    gain: Rational
    capacity: object  # Rational or INF

    def __post_init__(self):
        object.__setattr__(self, "gain", Q(self.gain))
        if not is_inf(self.capacity):
            object.__setattr__(self, "capacity", Q(self.capacity))
        if self.gain <= 0:
            raise ValueError("gains must be positive")
        if not is_inf(self.capacity) and self.capacity < 0:
            raise ValueError("capacities must be nonnegative")


@dataclass
class StdInstance:
    nodes: list
    sink: Hashable
    arcs: list
    bound: int = 1

    def __post_init__(self):
        self.nodes = list(self.nodes)
        self.arcs = list(self.arcs)
        if self.sink not in self.nodes:
            raise ValueError("sink must be one of the nodes")
        known = set(self.nodes)
        for a in self.arcs:
            if a.tail not in known or a.head not in known:
                raise ValueError(f"arc {a.tail}->{a.head} uses an unknown node")


class UnboundedStd(Unbounded):
    """A flow-generating cycle reaches the sink; ``cycle`` and ``path`` are arc lists."""

    def __init__(self, cycle, path):
        super().__init__("objective is unbounded")
        self.cycle = cycle
        self.path = path


def std_objective(std: StdInstance, f: Sequence[Rational]) -> Rational:
    total = ZERO
    for k, a in enumerate(std.arcs):
        if a.head == std.sink:
            total += a.gain * f[k]
        if a.tail == std.sink:
            total -= f[k]
    return total


@dataclass
class TransformMap:
    """How the arcs of a capacitated instance live on in the reduced one.

    ``secondary[a] = (k, ik, jk)`` for arc ``a`` with finite capacity,
    ``copied[a]`` is the reduced index of an uncapacitated arc, and
    ``free_flow`` holds fixed flows on arcs touching the unlimited-supply
    set ``unlimited`` (those arcs have no counterpart in the reduced
    instance).
    """

    std: StdInstance
    secondary: dict = field(default_factory=dict)
    copied: dict = field(default_factory=dict)
    auxiliary: list = field(default_factory=list)
    unlimited: set = field(default_factory=set)
    free_flow: dict = field(default_factory=dict)
    bound: int = 1


def _fresh(name: str, taken: set):
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def check_boundedness(inst: UncapInstance):
    """None when bounded, else ``(cycle, path)`` as arc index lists.

    Only nodes with a path to the sink matter; a generating cycle among them
    is returned with a path from one of its nodes to the sink.
    """
    edges = [(a.tail, a.head, a.gain, k) for k, a in enumerate(inst.arcs)]
    back = [(v, u, g, k) for u, v, g, k in edges]
    live = reachable(inst.nodes, back, [inst.sink])
    inner = [e for e in edges if e[0] in live and e[1] in live]
    cyc = find_generating_cycle([i for i in inst.nodes if i in live], inner)
    if cyc is None:
        return None
    cycle = [inner[e][3] for e in cyc]
    start = inst.arcs[cycle[0]].tail
    return cycle, _bfs_path(inst.nodes, edges, start, inst.sink)


def _bfs_path(nodes, edges, source, target) -> list:
    out: dict = {}
    for u, v, _g, k in edges:
        out.setdefault(u, []).append((v, k))
    via = {source: None}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == target:
            break
        for v, k in out.get(u, ()):
            if v not in via:
                via[v] = (u, k)
                queue.append(v)
    path = []
    v = target
    while via[v] is not None:
        u, k = via[v]
        path.append(k)
        v = u
    return list(reversed(path))


def _unlimited_supply(std: StdInstance):
    """Nodes fed without limit by a generating cycle of uncapacitated arcs.

    Returns the node set, the uncapacitated edges and the cycles found.
    Raises UnboundedStd if such a cycle can reach the sink.
    """
    edges = [(a.tail, a.head, a.gain, k) for k, a in enumerate(std.arcs) if is_inf(a.capacity)]
    back = [(v, u, g, k) for u, v, g, k in edges]
    live = reachable(std.nodes, back, [std.sink])
    inner = [e for e in edges if e[0] in live and e[1] in live]
    cyc = find_generating_cycle([i for i in std.nodes if i in live], inner)
    if cyc is not None:
        cycle = [inner[e][3] for e in cyc]
        raise UnboundedStd(cycle, _bfs_path(std.nodes, edges, std.arcs[cycle[0]].tail, std.sink))
    zone, cycles = generating_closure(std.nodes, edges)
    return zone, edges, cycles


def _supply_flows(std: StdInstance, zone: set, edges: list, cycles: list) -> dict:
    """Flows inside ``zone`` covering the capacitated arcs it saturates."""
    need = {i: ZERO for i in zone}
    for a in std.arcs:
        if a.tail in zone and a.head not in zone:
            need[a.tail] += a.capacity
    flows = cycle_supply_flows(edges, zone, cycles, need)
    return {edges[p][3]: x for p, x in flows.items()}


def _gain_product(std: StdInstance) -> int:
    product = 1
    for a in std.arcs:
        values = [a.gain] if is_inf(a.capacity) else [a.gain, a.capacity]
        for x in values:
            if x:
                product *= int(x.numerator) * int(x.denominator)
    return product


def uncapacitate(std: StdInstance):
    """Reduced instance, its initial flow, and the map back.

    Raises UnboundedStd with a certificate when the objective is unbounded.
    """
    zone, free_edges, cycles = _unlimited_supply(std)
    tmap = TransformMap(std=std, unlimited=set(zone))
    nodes = [i for i in std.nodes if i not in zone]
    taken = set(std.nodes)
    demand = {i: ZERO for i in nodes}
    arcs: list[Arc] = []
    init: list[Rational] = []
    for idx, a in enumerate(std.arcs):
        if a.tail in zone or a.head in zone:
            if a.tail in zone and a.head not in zone:
                # unlimited supply saturates the arc for free
                tmap.free_flow[idx] = a.capacity
                demand[a.head] -= a.gain * a.capacity
            else:
                tmap.free_flow[idx] = ZERO
            continue
        if is_inf(a.capacity):
            tmap.copied[idx] = len(arcs)
            arcs.append(Arc(a.tail, a.head, a.gain))
            init.append(ZERO)
            continue
        k = _fresh(f"a{idx}", taken)
        nodes.append(k)
        amount = a.gain * a.capacity
        demand[k] = amount
        demand[a.head] -= amount
        tmap.secondary[idx] = (k, len(arcs), len(arcs) + 1)
        arcs.append(Arc(a.tail, k, a.gain))
        arcs.append(Arc(a.head, k, ONE))
        init += [ZERO, amount]
    for k, x in _supply_flows(std, zone, free_edges, cycles).items():
        tmap.free_flow[k] = x

    t = std.sink
    draft = UncapInstance(nodes, t, arcs, demand, bound=1)
    assert check_boundedness(draft) is None, "generating cycle left after the reduction"
    others = [i for i in nodes if i != t]
    bound = fit_bound(2 * _gain_product(std), [demand[i] for i in others])
    has_sink_arc = {a.tail for a in arcs if a.head == t}
    for i in others:
        if i not in has_sink_arc:
            tmap.auxiliary.append(len(arcs))
            arcs.append(Arc(i, t, Q(1, bound), auxiliary=True))
            init.append(ZERO)
    tmap.bound = bound
    inst = UncapInstance(nodes, t, arcs, demand, bound=bound, initial_flow=init)
    problems = inst.invariant_violations()
    assert not problems, problems
    e = excesses(inst, init)
    assert all(e[i] >= 0 for i in others), "initial flow is infeasible"
    assert all(e[k] == 0 for k, _, _ in tmap.secondary.values())
    return inst, init, tmap


def recover_standard_solution(tmap: TransformMap, inst: UncapInstance, f: Sequence[Rational], mu: dict):
    """Optimal flow and labels (possibly INF) on the capacitated instance."""
    std = tmap.std
    out = [ZERO] * len(std.arcs)
    for idx, (_k, _ik, jk) in tmap.secondary.items():
        # read the arc off its unused-capacity side; the tail side can
        # overshoot when the secondary node drains into its auxiliary arc
        a = std.arcs[idx]
        out[idx] = min(max(a.capacity - f[jk] / a.gain, ZERO), a.capacity)
    for idx, k in tmap.copied.items():
        out[idx] = f[k]
    for idx, x in tmap.free_flow.items():
        out[idx] = x
    seeds = [i for i in inst.nodes if mu[i] == tmap.bound]
    # auxiliary arcs are left out: through them everything reaches the sink
    edges = [
        (r.tail, r.head, r.gain, n)
        for n, r in enumerate(residual_arcs(inst, f))
        if not inst.arcs[r.arc].auxiliary
    ]
    infinite = reachable(inst.nodes, edges, seeds) if seeds else set()
    assert inst.sink not in infinite, "sink reachable from a node at the label bound"
    labels = {}
    for i in std.nodes:
        labels[i] = INF if i in infinite or i in tmap.unlimited else mu[i]
    problems = check_optimality_std(std, out, labels)
    assert not problems, [str(p) for p in problems]
    return out, labels


@dataclass
class StdSolution:
    flow: list
    labels: dict
    value: Rational
    reduced_value: Rational
    instance: UncapInstance
    tmap: TransformMap
    reduced_flow: list = field(default_factory=list)

    @property
    def auxiliary_inflow(self) -> Rational:
        """Part of the reduced objective delivered by auxiliary arcs."""
        arcs = self.instance.arcs
        return sum((arcs[k].gain * self.reduced_flow[k] for k in self.tmap.auxiliary), ZERO)


def solve_standard(std: StdInstance, algorithm: str = "strong", trace=None) -> StdSolution:
    from .enhanced import enhanced_continuous_scaling
    from .scaling import continuous_scaling

    inst, init, tmap = uncapacitate(std)
    solver = enhanced_continuous_scaling if algorithm == "strong" else continuous_scaling
    res = solver(inst, init, trace=trace)
    flow, labels = recover_standard_solution(tmap, inst, res.flow, res.labels)
    return StdSolution(flow, labels, std_objective(std, flow), res.value, inst, tmap, list(res.flow))
