"""Instances, flows, labelings and the relabeled quantities built on them.

Node ids are arbitrary hashable labels.  Arcs are stored in a tuple and
addressed by position, so parallel arcs are fine.  A flow is a list of
rationals indexed like the arcs, and a labeling is a dict from node to a
positive rational with the sink fixed at 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

from .rational import ONE, ZERO, Q, Rational

Node = Hashable
Flow = list
Labeling = dict


@dataclass(frozen=True, slots=True)
class Arc:
    tail: Node
    head: Node
    gain: Rational
    auxiliary: bool = False


class UncapInstance:
    """Generalized flow instance with node demands and no arc capacities."""

    def __init__(
        self,
        nodes: Iterable[Node],
        sink: Node,
        arcs: Iterable[Arc],
        demand: Mapping[Node, Rational],
        bound: int,
        initial_flow: Sequence[Rational] | None = None,
    ):
        self.nodes = tuple(nodes)
        self.sink = sink
        self.arcs = tuple(arcs)
        # the sink's demand only shifts the objective; it defaults to 0
        self.demand = {i: Q(demand.get(i, 0)) for i in self.nodes}
        self.bound = int(bound)
        if initial_flow is None:
            initial_flow = [ZERO] * len(self.arcs)
        self.initial_flow = tuple(Q(x) for x in initial_flow)
        if len(self.initial_flow) != len(self.arcs):
            raise ValueError("initial flow must have one entry per arc")
        if sink not in self.nodes:
            raise ValueError("sink must be one of the nodes")
        self.inverse_gains = tuple(1 / a.gain for a in self.arcs)
        self.out_arcs: dict[Node, list[int]] = {i: [] for i in self.nodes}
        self.in_arcs: dict[Node, list[int]] = {i: [] for i in self.nodes}
        for k, a in enumerate(self.arcs):
            if a.gain <= 0:
                raise ValueError(f"arc {k} has nonpositive gain")
            self.out_arcs[a.tail].append(k)
            self.in_arcs[a.head].append(k)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.arcs)

    def others(self) -> list[Node]:
        return [i for i in self.nodes if i != self.sink]

    def degree(self, i: Node) -> int:
        return len(self.out_arcs[i]) + len(self.in_arcs[i])

    def invariant_violations(self) -> list[str]:
        """Problems with the structural and encoding-size contract."""
        problems = []
        t = self.sink
        for i in self.others():
            if not any(self.arcs[k].head == t for k in self.out_arcs[i]):
                problems.append(f"node {i} has no arc to the sink")
        product = 1
        for k, a in enumerate(self.arcs):
            if a.auxiliary:
                if a.head != t or a.gain != Q(1, self.bound):
                    problems.append(f"auxiliary arc {k} must enter the sink with gain 1/bound")
            else:
                product *= int(a.gain.numerator) * int(a.gain.denominator)
        if self.bound % product:
            problems.append("bound is not a multiple of the regular gain product")
        for i in self.others():
            b = self.demand[i]
            if abs(b) > self.bound:
                problems.append(f"demand of {i} exceeds the bound")
            if (b * self.bound).denominator != 1:
                problems.append(f"demand of {i} is not a multiple of 1/bound")
        return problems

    def __eq__(self, other):
        if not isinstance(other, UncapInstance):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.sink == other.sink
            and self.arcs == other.arcs
            and self.demand == other.demand
            and self.bound == other.bound
            and self.initial_flow == other.initial_flow
        )

    def __repr__(self):
        return f"UncapInstance(n={self.n}, m={self.m}, sink={self.sink!r}, bound={self.bound})"


@dataclass(frozen=True)
class Constants:
    """Thresholds shared by both scaling algorithms.

    ``n``, ``m`` and ``bound`` come from the instance the solve started on
    and never change.  Node degrees are read from whatever instance is
    current, since merged nodes have no degree in the original graph.
    """

    n: int
    m: int
    bound: int

    @classmethod
    def of(cls, inst: UncapInstance) -> "Constants":
        return cls(inst.n, inst.m, inst.bound)

    @staticmethod
    def lo(d: int) -> int:
        return d + 1

    @staticmethod
    def mid(d: int) -> int:
        return d + 2

    @staticmethod
    def hi(d: int) -> int:
        return 4 * (d + 2)

    @property
    def abundant_factor(self) -> int:
        return 17 * self.m

    @property
    def delta_bound(self) -> int:
        return self.n * self.bound ** 2

    @property
    def termination_threshold(self) -> Rational:
        return Q(1, (9 * self.m + 8 * self.n) * self.bound ** 3)

    def filtration_divisor(self, kappa: int) -> int:
        return 16 ** kappa * self.n

    contraction_factor: int = field(default=16, init=False)


def excess(inst: UncapInstance, f: Sequence[Rational], i: Node) -> Rational:
    arcs = inst.arcs
    total = -inst.demand[i]
    for k in inst.in_arcs[i]:
        total += arcs[k].gain * f[k]
    for k in inst.out_arcs[i]:
        total -= f[k]
    return total


def excesses(inst: UncapInstance, f: Sequence[Rational]) -> dict[Node, Rational]:
    e = {i: -inst.demand[i] for i in inst.nodes}
    for k, a in enumerate(inst.arcs):
        x = f[k]
        if x:
            e[a.head] += a.gain * x
            e[a.tail] -= x
    return e


def surplus(inst: UncapInstance, f: Sequence[Rational]) -> Rational:
    e = excesses(inst, f)
    return sum((e[i] for i in inst.others()), ZERO)


def flow_value(inst: UncapInstance, f: Sequence[Rational]) -> Rational:
    """Objective: net gain-weighted inflow at the sink."""
    return excess(inst, f, inst.sink)


def relabeled_gain(inst: UncapInstance, mu: Mapping[Node, Rational], k: int) -> Rational:
    a = inst.arcs[k]
    return a.gain * mu[a.tail] / mu[a.head]


@dataclass
class RelabeledViews:
    gain: list
    flow: list
    demand: dict
    excess: dict


def relabeled_views(inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational]) -> RelabeledViews:
    e = excesses(inst, f)
    return RelabeledViews(
        gain=[a.gain * mu[a.tail] / mu[a.head] for a in inst.arcs],
        flow=[f[k] / mu[a.tail] for k, a in enumerate(inst.arcs)],
        demand={i: inst.demand[i] / mu[i] for i in inst.nodes},
        excess={i: e[i] / mu[i] for i in inst.nodes},
    )


class ResidualArc(NamedTuple):
    """A forward arc, or the reverse of an arc carrying positive flow.

    ``amount`` is the residual flow value: ``f`` for a forward arc and
    ``-gain * f`` for a reverse arc.
    """

    arc: int
    forward: bool
    tail: Node
    head: Node
    gain: Rational
    amount: Rational


def residual_arcs(inst: UncapInstance, f: Sequence[Rational]) -> list[ResidualArc]:
    out = []
    for k, a in enumerate(inst.arcs):
        out.append(ResidualArc(k, True, a.tail, a.head, a.gain, f[k]))
    for k, a in enumerate(inst.arcs):
        if f[k] > 0:
            out.append(ResidualArc(k, False, a.head, a.tail, 1 / a.gain, -a.gain * f[k]))
    return out


def delta_fat_arcs(
    inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational], delta: Rational
) -> list[ResidualArc]:
    """Forward arcs plus reverse arcs whose relabeled flow exceeds delta."""
    arcs = inst.arcs
    out = [ResidualArc(k, True, a.tail, a.head, a.gain, f[k]) for k, a in enumerate(arcs)]
    inverse = inst.inverse_gains
    for k, a in enumerate(arcs):
        x = f[k]
        if x > 0 and x > delta * mu[a.tail]:
            out.append(ResidualArc(k, False, a.head, a.tail, inverse[k], -a.gain * x))
    return out


def nontight_and_reserve(
    inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational]
) -> tuple[set[int], dict[Node, Rational]]:
    nontight = set()
    reserve = {i: ZERO for i in inst.nodes}
    for k, a in enumerate(inst.arcs):
        if a.gain * mu[a.tail] < mu[a.head]:
            nontight.add(k)
            if f[k]:
                reserve[a.head] += a.gain * f[k]
    return nontight, reserve


@dataclass(frozen=True)
class Violation:
    kind: str
    where: object
    detail: str

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


def check_delta_feasible(
    inst: UncapInstance,
    f: Sequence[Rational],
    mu: Mapping[Node, Rational],
    delta: Rational,
    e: Mapping[Node, Rational] | None = None,
) -> list[Violation]:
    """Empty list iff ``(f, mu)`` is a delta-feasible pair."""
    out = []
    t = inst.sink
    if mu.get(t) != ONE:
        out.append(Violation("label", t, f"sink label is {mu.get(t)}"))
    for i in inst.nodes:
        if i not in mu or not mu[i] > 0:
            out.append(Violation("label", i, "label must be a positive rational"))
    if out:
        return out
    for k, a in enumerate(inst.arcs):
        if f[k] < 0:
            out.append(Violation("negative flow", k, f"flow {f[k]}"))
    for r in delta_fat_arcs(inst, f, mu, delta):
        if r.gain * mu[r.tail] > mu[r.head]:
            side = "forward" if r.forward else "reverse"
            g = r.gain * mu[r.tail] / mu[r.head]
            out.append(Violation("arc gain", r.arc, f"{side} relabeled gain {g} > 1"))
    if e is None:
        e = excesses(inst, f)
    _, reserve = nontight_and_reserve(inst, f, mu)
    for i in inst.others():
        if e[i] < reserve[i]:
            out.append(Violation("reserve", i, f"excess {e[i]} below reserve {reserve[i]}"))
    return out


def is_conservative(inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational]) -> bool:
    """Dual feasible, tight on every positive arc, and no negative excess."""
    if mu.get(inst.sink) != ONE or any(not mu[i] > 0 for i in inst.nodes):
        return False
    for k, a in enumerate(inst.arcs):
        lhs = a.gain * mu[a.tail]
        if lhs > mu[a.head] or (f[k] > 0 and lhs != mu[a.head]) or f[k] < 0:
            return False
    e = excesses(inst, f)
    return all(e[i] >= 0 for i in inst.others())


def make_conservative(
    inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational], delta: Rational | None = None
) -> list:
    """Zero the flow on every non-tight arc.

    With ``delta`` given, also asserts the surplus growth bound.
    """
    nontight, _ = nontight_and_reserve(inst, f, mu)
    g = [ZERO if k in nontight else f[k] for k in range(inst.m)]
    e = excesses(inst, g)
    assert all(e[i] >= 0 for i in inst.others()), "zeroing non-tight arcs left a deficit"
    if delta is not None:
        before = relabeled_surplus(inst, f, mu)
        after = relabeled_surplus(inst, g, mu)
        assert after <= before + len(nontight) * delta, "surplus grew more than |F| * delta"
    return g


def relabeled_surplus(inst: UncapInstance, f: Sequence[Rational], mu: Mapping[Node, Rational]) -> Rational:
    e = excesses(inst, f)
    return sum((e[i] / mu[i] for i in inst.others()), ZERO)


def arcs_between(inst: UncapInstance, tails: set, heads: set) -> list[int]:
    return [k for k, a in enumerate(inst.arcs) if a.tail in tails and a.head in heads]


def with_flow(inst: UncapInstance, initial_flow: Sequence[Rational]) -> UncapInstance:
    return UncapInstance(inst.nodes, inst.sink, inst.arcs, inst.demand, inst.bound, initial_flow)
