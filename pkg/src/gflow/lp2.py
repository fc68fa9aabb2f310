"""Feasibility of ``Ax = b, 0 <= x <= u`` when every column of A has at most two nonzeros.

The system is rewritten over a doubled node set: row ``r`` becomes
``("+", r)`` carrying ``b_r`` and ``("-", r)`` carrying ``-b_r``, and each
column becomes a mirrored pair of gain arcs, so that every constraint reads
"gain-weighted inflow minus outflow equals demand".  Finite bounds are
turned into demands on extra nodes the same way capacitated arcs are
removed from the standard form.

The ``>=`` relaxation is decided with the strongly polynomial scaling
algorithm on an auxiliary instance, the ``<=`` relaxation by reversing
every arc, and two relaxed solutions are merged into an exact one through a
conformal flow decomposition.  Every answer is checked before it is
returned: feasible points by substitution, infeasibility by the Farkas
inequalities of its certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import Arc, UncapInstance
from .decompose import FlowArc, Kind, decompose
from .gaincycles import cycle_supply_flows, generating_closure
from .generate import fit_bound, gain_product
from .rational import INF, ONE, ZERO, Q, Rational, is_inf

SINK = "sink"


@dataclass
class LP2Instance:
    """``rows`` x ``cols`` system with ``entries[(row, col)] = a``; indices are 0-based."""

    rows: int
    cols: int
    entries: dict
    rhs: list
    upper: list

    def __post_init__(self):
        self.entries = {(int(r), int(c)): Q(a) for (r, c), a in self.entries.items()}
        self.rhs = [Q(b) for b in self.rhs]
        self.upper = [u if is_inf(u) else Q(u) for u in self.upper]
        if len(self.rhs) != self.rows or len(self.upper) != self.cols:
            raise ValueError("rhs needs one entry per row and upper one per column")
        count = [0] * self.cols
        for (r, c), a in self.entries.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"entry ({r}, {c}) is out of range")
            if a == 0:
                raise ValueError(f"entry ({r}, {c}) is zero")
            count[c] += 1
        for c, k in enumerate(count):
            if k > 2:
                raise ValueError(f"column {c} has {k} nonzeros")
        for c, u in enumerate(self.upper):
            if not is_inf(u) and u < 0:
                raise ValueError(f"column {c} has a negative upper bound")

    def column(self, c: int) -> list:
        return sorted((r, a) for (r, cc), a in self.entries.items() if cc == c)

    def row_values(self, x: Sequence[Rational]) -> list:
        out = [ZERO] * self.rows
        for (r, c), a in self.entries.items():
            out[r] += a * x[c]
        return out

    def violations(self, x: Sequence[Rational]) -> list[str]:
        """Empty iff ``x`` solves the system exactly."""
        if len(x) != self.cols:
            return [f"{len(x)} values for {self.cols} columns"]
        out = []
        for c, v in enumerate(x):
            if v < 0 or (not is_inf(self.upper[c]) and v > self.upper[c]):
                out.append(f"x[{c}] = {v} outside its bounds")
        for r, v in enumerate(self.row_values(x)):
            if v != self.rhs[r]:
                out.append(f"row {r}: {v} != {self.rhs[r]}")
        return out


@dataclass
class FarkasCertificate:
    """Row multipliers proving infeasibility, and the relaxation that produced them."""

    y: list
    relaxation: str = ""

    def column_weights(self, lp: LP2Instance) -> list:
        w = [ZERO] * lp.cols
        for (r, c), a in lp.entries.items():
            w[c] += self.y[r] * a
        return w

    def violations(self, lp: LP2Instance) -> list[str]:
        """Empty iff ``y`` proves that no ``0 <= x <= u`` has ``Ax = b``.

        Over the box, ``y.Ax`` is at most the sum of ``max(0, y.A_c) * u_c``;
        the certificate is valid when that is finite and below ``y.b``.
        """
        if len(self.y) != lp.rows:
            return [f"{len(self.y)} multipliers for {lp.rows} rows"]
        out = []
        top = ZERO
        for c, w in enumerate(self.column_weights(lp)):
            if w > 0:
                if is_inf(lp.upper[c]):
                    out.append(f"column {c} is unbounded with y.A_c = {w} > 0")
                else:
                    top += w * lp.upper[c]
        yb = sum((y * b for y, b in zip(self.y, lp.rhs)), ZERO)
        if not out and not yb > top:
            out.append(f"y.b = {yb} does not exceed the box maximum {top}")
        return out


@dataclass
class Feasible:
    x: list


@dataclass
class Infeasible:
    certificate: FarkasCertificate


# ---- the monotone network ---------------------------------------------------


@dataclass
class ColumnArcs:
    """Arcs standing for one column; arc flow ``scale * x`` in the symmetric image."""

    arcs: tuple
    scales: tuple


@dataclass
class MonotoneInstance:
    """Gain network with ``inflow - outflow = demand`` at every node.

    ``slack[k] = (node, arc)`` records the bound node and unused-bound arc
    attached to column arc ``k``.
    """

    lp: LP2Instance
    nodes: list
    arcs: list
    demand: dict
    columns: list
    slack: dict = field(default_factory=dict)

    def raw_excess(self, f: Sequence[Rational]) -> dict:
        e = {i: ZERO for i in self.nodes}
        for k, a in enumerate(self.arcs):
            if f[k]:
                e[a.head] += a.gain * f[k]
                e[a.tail] -= f[k]
        return e

    def balance(self, f: Sequence[Rational]) -> dict:
        """Excess over demand; zero everywhere for an exact solution."""
        e = self.raw_excess(f)
        return {i: e[i] - self.demand[i] for i in self.nodes}

    def image(self, x: Sequence[Rational]) -> list:
        """The symmetric flow representing ``x``."""
        f = [ZERO] * len(self.arcs)
        for c, col in enumerate(self.columns):
            for k, s in zip(col.arcs, col.scales):
                f[k] += s * x[c]
        for k, (_node, sk) in self.slack.items():
            a = self.arcs[k]
            cap = self.demand[self.slack[k][0]] / a.gain
            f[sk] = a.gain * (cap - f[k])
        return f

    def recover(self, f: Sequence[Rational]) -> list:
        """Average of the scaled column-arc flows."""
        x = []
        for col in self.columns:
            vals = [f[k] / s for k, s in zip(col.arcs, col.scales)]
            x.append(sum(vals, ZERO) / len(vals))
        return x


def plus(r):
    return ("+", r)


def minus(r):
    return ("-", r)


def _column_arcs(entries):
    """``(tail, head, gain, scale)`` for the arcs of one column."""
    if len(entries) == 1:
        (i, a), = entries
        # a single arc is its own mirror image
        if a > 0:
            return [(minus(i), plus(i), ONE, a)]
        return [(plus(i), minus(i), ONE, -a)]
    (i, a), (j, c) = entries
    if a < 0 and c > 0:
        (i, a), (j, c) = (j, c), (i, a)
    if a > 0 and c < 0:
        c = -c
        return [(plus(j), plus(i), a / c, c), (minus(i), minus(j), c / a, a)]
    if a > 0:
        return [(minus(j), plus(i), a / c, c), (minus(i), plus(j), c / a, a)]
    a, c = -a, -c
    return [(plus(i), minus(j), c / a, a), (plus(j), minus(i), a / c, c)]


def _probe(lp: LP2Instance) -> list:
    out = []
    for c, u in enumerate(lp.upper):
        out.append(Q(c + 1, c + 2) * u if not is_inf(u) else Q(c + 1))
    return out


def to_monotone(lp: LP2Instance) -> MonotoneInstance:
    nodes = [plus(r) for r in range(lp.rows)] + [minus(r) for r in range(lp.rows)]
    demand = {plus(r): lp.rhs[r] for r in range(lp.rows)}
    demand.update({minus(r): -lp.rhs[r] for r in range(lp.rows)})
    arcs: list[Arc] = []
    columns = []
    caps = []
    for c in range(lp.cols):
        entries = lp.column(c)
        if not entries:
            raise ValueError(f"column {c} is zero")
        ks, scales = [], []
        for tail, head, gain, scale in _column_arcs(entries):
            ks.append(len(arcs))
            scales.append(scale)
            arcs.append(Arc(tail, head, gain))
            caps.append(INF if is_inf(lp.upper[c]) else scale * lp.upper[c])
        columns.append(ColumnArcs(tuple(ks), tuple(scales)))
    mono = MonotoneInstance(lp, nodes, arcs, demand, columns)
    for k, cap in enumerate(caps):
        if is_inf(cap):
            continue
        a = arcs[k]
        node = ("bound", k)
        amount = a.gain * cap
        nodes.append(node)
        demand[node] = amount
        demand[a.head] -= amount
        arcs[k] = Arc(a.tail, node, a.gain)
        mono.slack[k] = (node, len(arcs))
        arcs.append(Arc(a.head, node, ONE))
    _validate(mono)
    return mono


def _validate(mono: MonotoneInstance) -> None:
    # the image of any x must miss each row by exactly that row's residual
    lp = mono.lp
    x = _probe(lp)
    f = mono.image(x)
    bal = mono.balance(f)
    ax = lp.row_values(x)
    for r in range(lp.rows):
        assert bal[plus(r)] == ax[r] - lp.rhs[r], f"row {r} is misrepresented on its plus copy"
        assert bal[minus(r)] == lp.rhs[r] - ax[r], f"row {r} is misrepresented on its minus copy"
    for node, _ in mono.slack.values():
        assert bal[node] == 0, f"bound node {node} is unbalanced"
    assert mono.recover(f) == x, "column recovery is not the inverse of the image"


# ---- the two relaxations ----------------------------------------------------


def reachable_from_gain_cycles(nodes, arcs) -> set:
    zone, _ = generating_closure(nodes, _edges(arcs))
    return zone


def _edges(arcs):
    return [(a.tail, a.head, a.gain, k) for k, a in enumerate(arcs)]


@dataclass
class RelaxationResult:
    flow: list | None = None
    y: dict | None = None
    zone: set = field(default_factory=set)
    reduced: UncapInstance | None = None

    @property
    def feasible(self) -> bool:
        return self.flow is not None


def _solve_ge(nodes: list, arcs: list, demand: dict) -> RelaxationResult:
    """Find ``f >= 0`` with inflow minus outflow at least ``demand``, or ``y >= 0`` refuting it."""
    from .enhanced import enhanced_continuous_scaling

    edges = _edges(arcs)
    zone, cycles = generating_closure(nodes, edges)
    for a in arcs:
        assert not (a.tail in zone and a.head not in zone), "arc leaves the generating zone"
    flow = [ZERO] * len(arcs)
    need = {i: max(demand[i], ZERO) for i in zone}
    for p, x in cycle_supply_flows(edges, zone, cycles, need).items():
        flow[p] = x

    rest = [i for i in nodes if i not in zone]
    inner = [k for k, a in enumerate(arcs) if a.tail not in zone and a.head not in zone]
    supplied = [i for i in rest if demand[i] > 0]
    result = RelaxationResult(zone=zone)
    if not supplied:
        result.flow = flow
        _check_ge(arcs, demand, flow, nodes)
        return result

    sink = SINK
    red_arcs = [arcs[k] for k in inner]
    init = [ZERO] * len(red_arcs)
    for i in supplied:
        red_arcs.append(Arc(sink, i, ONE))
        init.append(demand[i])
    product = gain_product(a.gain for a in red_arcs)
    bound = fit_bound(2 * product, [demand[i] for i in rest])
    aux_from = len(red_arcs)
    for i in rest:
        red_arcs.append(Arc(i, sink, Q(1, bound), auxiliary=True))
        init.append(ZERO)
    red_demand = {i: demand[i] for i in rest}
    inst = UncapInstance(rest + [sink], sink, red_arcs, red_demand, bound=bound, initial_flow=init)
    assert not inst.invariant_violations(), inst.invariant_violations()
    result.reduced = inst
    res = enhanced_continuous_scaling(inst, init, audit=False)
    g, mu = res.flow, res.labels
    supply = range(len(inner), aux_from)
    if all(g[k] == 0 for k in supply):
        for p, k in enumerate(inner):
            flow[k] = g[p]
        result.flow = flow
        _check_ge(arcs, demand, flow, nodes)
        return result

    # nodes at the label bound and whatever they reach without auxiliary arcs
    from .gaincycles import reachable
    from .core import residual_arcs

    seeds = [i for i in rest if mu[i] == bound]
    res_edges = [
        (r.tail, r.head, r.gain, n)
        for n, r in enumerate(residual_arcs(inst, g))
        if not inst.arcs[r.arc].auxiliary and r.tail != sink and r.head != sink
    ]
    cut = reachable(rest, res_edges, seeds) if seeds else set()
    y = {i: ZERO for i in nodes}
    for i in rest:
        if i not in cut:
            y[i] = 1 / mu[i]
    problems = farkas_violations(arcs, demand, y, sign=1)
    assert not problems, problems
    result.y = y
    return result


def _check_ge(arcs, demand, flow, nodes) -> None:
    assert all(x >= 0 for x in flow), "negative flow"
    e = _raw(arcs, flow, nodes)
    for i in nodes:
        assert e[i] >= demand[i], f"node {i} short of its demand"


def _raw(arcs, flow, nodes) -> dict:
    e = {i: ZERO for i in nodes}
    for k, a in enumerate(arcs):
        if flow[k]:
            e[a.head] += a.gain * flow[k]
            e[a.tail] -= flow[k]
    return e


def farkas_violations(arcs, demand, y: dict, sign: int) -> list[str]:
    """Problems with ``y`` as a refutation of the ``>=`` (sign 1) or ``<=`` (sign -1) relaxation."""
    out = []
    for i, v in y.items():
        if sign * v < 0:
            out.append(f"y[{i}] = {v} has the wrong sign")
    for k, a in enumerate(arcs):
        if y[a.tail] - a.gain * y[a.head] < 0:
            out.append(f"arc {k}: y_tail - gain * y_head < 0")
    if not sum((demand[i] * v for i, v in y.items()), ZERO) > 0:
        out.append("b.y is not positive")
    return out


def solve_lp2m_ge(mono: MonotoneInstance) -> RelaxationResult:
    return _solve_ge(mono.nodes, mono.arcs, mono.demand)


def solve_lp2m_le(mono: MonotoneInstance) -> RelaxationResult:
    """Reverse every arc, negate the demands, and map the answer back."""
    reverse = [Arc(a.head, a.tail, 1 / a.gain) for a in mono.arcs]
    flipped = {i: -b for i, b in mono.demand.items()}
    res = _solve_ge(mono.nodes, reverse, flipped)
    if res.feasible:
        # w = gain * g on the reversed arc
        res.flow = [w / a.gain for w, a in zip(res.flow, mono.arcs)]
        e = mono.raw_excess(res.flow)
        assert all(e[i] <= mono.demand[i] for i in mono.nodes), "reversal broke the relaxation"
    else:
        res.y = {i: -v for i, v in res.y.items()}
        problems = farkas_violations(mono.arcs, mono.demand, res.y, sign=-1)
        assert not problems, problems
    return res


# ---- combining the relaxations ----------------------------------------------


def residual_difference(arcs: Sequence[Arc], f: Sequence[Rational], g: Sequence[Rational]) -> list[FlowArc]:
    """``f - g`` as a nonnegative flow on the residual network of ``g``.

    A decrease on arc ``ij`` becomes flow on the reverse arc ``ji`` with
    gain ``1 / gain``, measured at its tail ``j``.
    """
    items = []
    for k, a in enumerate(arcs):
        d = f[k] - g[k]
        if d > 0:
            items.append(FlowArc(a.tail, a.head, a.gain, d, key=(k, 1)))
        elif d < 0:
            items.append(FlowArc(a.head, a.tail, 1 / a.gain, -d * a.gain, key=(k, -1)))
    return items


def decompose_flow_difference(arcs, f, g):
    """Elementary terms of ``f - g``; a node may not lose more than it gains."""
    items = residual_difference(arcs, f, g)
    return items, decompose(items)


def combine_ge_le(mono: MonotoneInstance, f: Sequence[Rational], g: Sequence[Rational]) -> list:
    """An exact solution built from ``g`` plus generating terms of ``f - g``."""
    arcs = mono.arcs
    items, terms = decompose_flow_difference(arcs, f, g)
    out = list(g)
    short = {i: -v for i, v in mono.balance(g).items() if v < 0}
    for term in terms:
        if term.kind is not Kind.GENERATING:
            continue
        i = term.excess_node
        if not short.get(i):
            continue
        scale = min(ONE, short[i] / term.delivered)
        short[i] -= scale * term.delivered
        for p, v in term.amounts.items():
            k, direction = items[p].key
            if direction > 0:
                out[k] += scale * v
            else:
                out[k] -= scale * v / arcs[k].gain
    assert all(x >= 0 for x in out), "combination left a negative flow"
    bal = mono.balance(out)
    assert all(v == 0 for v in bal.values()), "combination is not exact"
    return out


def solve_lp2(lp: LP2Instance):
    """Feasible(x) with ``Ax = b, 0 <= x <= u`` exactly, or Infeasible with a checked certificate."""
    mono = to_monotone(lp)
    ge = solve_lp2m_ge(mono)
    if not ge.feasible:
        return _infeasible(lp, ge.y, "ge")
    le = solve_lp2m_le(mono)
    if not le.feasible:
        return _infeasible(lp, le.y, "le")
    flow = combine_ge_le(mono, ge.flow, le.flow)
    x = mono.recover(flow)
    problems = lp.violations(x)
    assert not problems, problems
    return Feasible(x)


def _infeasible(lp: LP2Instance, y: dict, side: str) -> Infeasible:
    # every x in the box maps to a flow meeting all bound-node demands, so
    # only the row copies contribute
    cert = FarkasCertificate([y[plus(r)] - y[minus(r)] for r in range(lp.rows)], side)
    problems = cert.violations(lp)
    assert not problems, problems
    return Infeasible(cert)
