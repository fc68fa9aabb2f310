"""Conformal decomposition of generalized flows into elementary flows.

A flow here is a list of ``FlowArc`` items with positive amounts; each item
takes ``amount`` out of its tail and puts ``gain * amount`` into its head.
Node imbalances are carried as slack coordinates, so the flow becomes a
kernel vector of the incidence matrix extended by one column per
unbalanced node.  Peeling off sign-compatible minimal-support kernel
vectors gives the classical five kinds of elementary flows, and the
recomposition is exact by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .rational import ONE, ZERO, Rational


class Kind(enum.Enum):
    PATH = "path"  # deficit node to excess node
    GENERATING = "generating"  # gain>1 cycle feeding an excess node
    ABSORBING = "absorbing"  # deficit node feeding a gain<1 cycle
    UNIT_CYCLE = "unit-cycle"  # cycle of gain exactly 1
    BICYCLE = "bicycle"  # generating and absorbing cycles, no imbalance


@dataclass(frozen=True)
class FlowArc:
    tail: Hashable
    head: Hashable
    gain: Rational
    amount: Rational
    key: object = None


@dataclass
class ElementaryFlow:
    kind: Kind
    amounts: dict  # item position -> amount
    excess_node: Hashable = None
    deficit_node: Hashable = None
    delivered: Rational = ZERO  # imbalance created at the excess node


class DeficitError(ValueError):
    """A node sends out more than it receives."""


def balances(items: Sequence[FlowArc], amounts=None) -> dict:
    bal: dict = {}
    for p, a in enumerate(items):
        x = a.amount if amounts is None else amounts.get(p, ZERO)
        if x:
            bal[a.tail] = bal.get(a.tail, ZERO) - x
            bal[a.head] = bal.get(a.head, ZERO) + a.gain * x
    return bal


def _columns(items, nodes):
    # arc columns first, then one slack column per node: A h - s = 0
    cols = []
    for a in items:
        col = {a.tail: -ONE}
        col[a.head] = col.get(a.head, ZERO) + a.gain
        cols.append({v: x for v, x in col.items() if x})
    for v in nodes:
        cols.append({v: -ONE})
    return cols


def _first_dependency(cols, support: list) -> dict | None:
    """Coefficients of a minimal dependent subset of the given columns, or None."""
    basis = []  # (pivot row, reduced vector, combination)
    for c in support:
        vec = dict(cols[c])
        comb = {c: ONE}
        for pivot, bvec, bcomb in basis:
            x = vec.get(pivot)
            if x:
                factor = x / bvec[pivot]
                for r, y in bvec.items():
                    z = vec.get(r, ZERO) - factor * y
                    if z:
                        vec[r] = z
                    else:
                        vec.pop(r, None)
                for k, y in bcomb.items():
                    z = comb.get(k, ZERO) - factor * y
                    if z:
                        comb[k] = z
                    else:
                        comb.pop(k, None)
        if not vec:
            return comb
        pivot = min(vec, key=repr)
        basis.append((pivot, vec, comb))
    return None


def _conformal_circuit(cols, x: dict) -> dict:
    """A minimal-support kernel vector whose signs agree with ``x`` on its support."""
    y = dict(x)
    while True:
        support = sorted(y)
        z = _first_dependency(cols, support)
        assert z is not None, "kernel vector with independent support"
        if len(z) == len(y):
            return y
        ratios = [(y[i] / z[i], i) for i in z if z[i] / y[i] > 0]
        if not ratios:
            z = {i: -v for i, v in z.items()}
            ratios = [(y[i] / z[i], i) for i in z]
        t = min(r for r, _ in ratios)
        for i, v in z.items():
            w = y[i] - t * v
            if w:
                y[i] = w
            else:
                del y[i]


def _classify(items, nodes, vec: dict) -> ElementaryFlow:
    m = len(items)
    amounts = {p: v for p, v in vec.items() if p < m}
    slack = {nodes[p - m]: v for p, v in vec.items() if p >= m}
    exc = [v for v, s in slack.items() if s > 0]
    dfc = [v for v, s in slack.items() if s < 0]
    assert len(exc) <= 1 and len(dfc) <= 1
    term = ElementaryFlow(Kind.BICYCLE, amounts)
    if exc:
        term.excess_node = exc[0]
        term.delivered = slack[exc[0]]
    if dfc:
        term.deficit_node = dfc[0]
    if exc and dfc:
        term.kind = Kind.PATH
    elif exc:
        term.kind = Kind.GENERATING
    elif dfc:
        term.kind = Kind.ABSORBING
    else:
        tails = [items[p].tail for p in amounts]
        gain = ONE
        for p in amounts:
            gain *= items[p].gain
        if len(set(tails)) == len(tails) and gain == 1:
            term.kind = Kind.UNIT_CYCLE
    return term


def _reduce_terms(vectors: list[dict]) -> list[dict]:
    """Drop linearly dependent terms while keeping the sum and nonnegative weights."""
    while True:
        dep = _first_dependency(vectors, list(range(len(vectors))))
        if dep is None:
            return vectors
        if not any(c > 0 for c in dep.values()):
            dep = {k: -c for k, c in dep.items()}
        t = min(1 / c for c in dep.values() if c > 0)
        out = []
        for k, v in enumerate(vectors):
            w = 1 - t * dep.get(k, ZERO)
            if w:
                out.append({p: w * x for p, x in v.items()})
        vectors = out


def decompose(items: Sequence[FlowArc], sources: Iterable[Hashable] = ()) -> list[ElementaryFlow]:
    """Elementary flows summing exactly to ``items``.

    Nodes in ``sources`` may have a deficit; any other deficit raises
    DeficitError.  The number of terms never exceeds the number of items
    with positive amount.
    """
    items = list(items)
    if any(a.amount < 0 for a in items):
        raise ValueError("amounts must be nonnegative")
    allowed = set(sources)
    bal = balances(items)
    bad = [v for v, b in bal.items() if b < 0 and v not in allowed]
    if bad:
        raise DeficitError(f"deficit at {bad}")
    nodes = sorted((v for v, b in bal.items() if b), key=repr)
    cols = _columns(items, nodes)
    m = len(items)
    x = {p: a.amount for p, a in enumerate(items) if a.amount}
    for q, v in enumerate(nodes):
        x[m + q] = bal[v]
    vectors = []
    while any(p < m for p in x):
        y = _conformal_circuit(cols, x)
        lam = min(x[i] / y[i] for i in y)
        term = {i: lam * v for i, v in y.items()}
        vectors.append(term)
        for i, v in term.items():
            w = x[i] - v
            if w:
                x[i] = w
            else:
                del x[i]
    assert not x, "slack left after the arcs ran out"
    support = sum(1 for a in items if a.amount)
    if len(vectors) > support:
        vectors = _reduce_terms(vectors)
    terms = [_classify(items, nodes, v) for v in vectors]
    assert recompose(items, terms) == [a.amount for a in items], "decomposition is not exact"
    return terms


def recompose(items: Sequence[FlowArc], terms: Sequence[ElementaryFlow]) -> list:
    total = [ZERO] * len(items)
    for term in terms:
        for p, v in term.amounts.items():
            total[p] += v
    return total
