"""Seeded random instances for tests and the ``gen`` command.

Rational parts are drawn with at most ``bits`` bits.  Uncapacitated
instances always come with a feasible initial flow, contain no
flow-generating cycle, and give every non-sink node an arc to the sink.
"""

from __future__ import annotations

import math
import random

from .core import Arc, UncapInstance, excesses
from .gaincycles import find_generating_cycle
from .rational import INF, ZERO, Q, Rational


def random_rational(rng: random.Random, bits: int, signed: bool = False, allow_zero: bool = False) -> Rational:
    top = (1 << bits) - 1
    lo = 0 if allow_zero else 1
    x = Q(rng.randint(lo, top), rng.randint(1, top))
    if signed and rng.random() < 0.5:
        x = -x
    return x


def gain_product(gains) -> int:
    p = 1
    for g in gains:
        p *= int(g.numerator) * int(g.denominator)
    return p


def fit_bound(base: int, values) -> int:
    """Smallest multiple of ``base * lcm(denominators)`` that is at least every ``|value|``."""
    lcm = 1
    for v in values:
        lcm = math.lcm(lcm, int(Q(v).denominator))
    unit = base * lcm
    need = max((abs(Q(v)) for v in values), default=ZERO)
    k = max(1, math.ceil(need / unit))
    return unit * k


def _simple_arcs(rng, nodes, m):
    pairs = [(u, v) for u in nodes for v in nodes if u != v]
    rng.shuffle(pairs)
    return pairs[:m]


def _remove_generating_cycles(nodes, arcs):
    # flip a gain above 1 on each generating cycle until none is left
    while True:
        edges = [(a[0], a[1], a[2], k) for k, a in enumerate(arcs)]
        cycle = find_generating_cycle(nodes, edges)
        if cycle is None:
            return arcs
        k = max(cycle, key=lambda e: (arcs[e][2], -e))
        u, v, g = arcs[k]
        arcs[k] = (u, v, 1 / g)


def random_uncap(n: int, m: int, seed: int, bits: int = 4) -> UncapInstance:
    """Random instance on ``n`` nodes (sink included) with at most ``m`` arcs."""
    rng = random.Random(seed)
    n = max(n, 1)
    nodes = list(range(1, n)) + ["t"]
    t = "t"
    others = nodes[:-1]
    pairs = [(i, t) for i in others]
    extra = [p for p in _simple_arcs(rng, nodes, n * n) if p not in pairs]
    pairs += extra[: max(0, m - len(pairs))]
    arcs = [(u, v, random_rational(rng, bits)) for u, v in pairs]
    arcs = _remove_generating_cycles(nodes, arcs)

    flow = [ZERO] * len(arcs)
    for k in range(len(arcs)):
        if rng.random() < 0.4:
            flow[k] = random_rational(rng, bits)
    gains = [g for _, _, g in arcs]
    probe = UncapInstance(nodes, t, [Arc(u, v, g) for u, v, g in arcs], {}, bound=1, initial_flow=flow)
    net = excesses(probe, flow)
    demand = {}
    for i in others:
        slack = random_rational(rng, bits, allow_zero=True) if rng.random() < 0.5 else ZERO
        demand[i] = net[i] - slack
    bound = fit_bound(gain_product(gains), demand.values())
    inst = UncapInstance(
        nodes, t, [Arc(u, v, g) for u, v, g in arcs], demand, bound=bound, initial_flow=flow
    )
    assert not inst.invariant_violations(), inst.invariant_violations()
    return inst


def random_std(n: int, m: int, seed: int, bits: int = 4):
    from .transform import StdArc, StdInstance

    rng = random.Random(seed)
    n = max(n, 2)
    nodes = list(range(1, n)) + ["t"]
    arcs = []
    for _ in range(m):
        u, v = rng.sample(nodes, 2)
        gain = random_rational(rng, bits)
        cap = INF if rng.random() < 0.3 else random_rational(rng, bits)
        arcs.append(StdArc(u, v, gain, cap))
    values = [a.gain for a in arcs] + [a.capacity for a in arcs if a.capacity != INF]
    bound = max(max(int(Q(x).numerator), int(Q(x).denominator)) for x in values) if values else 1
    return StdInstance(nodes, "t", arcs, bound)


def random_lp2(rows: int, cols: int, seed: int, bits: int = 4, feasible_bias: float = 0.5):
    from .lp2 import LP2Instance

    rng = random.Random(seed)
    entries = {}
    for c in range(cols):
        k = rng.choice((1, 2, 2))
        chosen = rng.sample(range(rows), min(k, rows))
        for r in chosen:
            entries[(r, c)] = random_rational(rng, bits, signed=True)
    upper = [INF if rng.random() < 0.4 else random_rational(rng, bits) for _ in range(cols)]
    if rng.random() < feasible_bias:
        x = []
        for c in range(cols):
            cap = upper[c] if upper[c] != INF else Q(1 << bits)
            x.append(cap * Q(rng.randint(0, 4), 4))
        rhs = [ZERO] * rows
        for (r, c), a in entries.items():
            rhs[r] += a * x[c]
    else:
        rhs = [random_rational(rng, bits, signed=True, allow_zero=True) for _ in range(rows)]
    return LP2Instance(rows, cols, entries, rhs, upper)
