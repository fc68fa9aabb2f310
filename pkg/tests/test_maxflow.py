import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import f1, f5
from gflow.core import excesses, is_conservative
from gflow.generate import random_uncap
from gflow.initialize import initialize
from gflow.maxflow import (
    BoundedArc,
    FlowNetwork,
    Infeasible,
    max_flow_bounded,
    optimality_residual_check,
    tight_flow,
)
from gflow.rational import INF, ONE, ZERO, Q


def test_single_arc():
    res = max_flow_bounded(FlowNetwork(["s", "t"], [BoundedArc("s", "t", ZERO, Q(5))], "s", "t"))
    assert res.value == 5
    assert res.min_cut == {"s"}


def test_forced_flow_that_cannot_be_routed():
    net = FlowNetwork(["s", "v", "t"], [BoundedArc("s", "v", -INF, Q(-1))], "s", "t")
    with pytest.raises(Infeasible):
        max_flow_bounded(net)


def test_f5_tight_network():
    inst = f5()
    mu = {i: ONE for i in inst.nodes}
    arcs = [BoundedArc(inst.arcs[k].tail, inst.arcs[k].head) for k in (0, 1, 2)]
    arcs += [BoundedArc("s", i, -INF, -inst.demand[i]) for i in (1, 2, 3)]
    res = max_flow_bounded(FlowNetwork(list(inst.nodes) + ["s"], arcs, "s", "t"))
    assert res.value == 1
    saturated = [a.head for a, x in zip(arcs[3:], res.flow[3:]) if x == a.upper and a.upper > 0]
    assert saturated == [3]
    # independent check: the cut {s, 1, 2} has capacity u_s3 = 1
    assert res.min_cut == {"s", 1, 2}
    assert tight_flow(inst, inst.nodes, mu) == [0, 0, 1, 0, 0]


def test_tight_flow_examples():
    inst = f1()
    mu = {1: Q(2), 2: Q(2), "t": ONE}
    f = tight_flow(inst, inst.nodes, mu)
    assert f == [2, 2, 0]
    assert all(v == 0 for i, v in excesses(inst, f).items() if i != "t")
    g = f5()
    f = tight_flow(g, g.nodes, {i: ONE for i in g.nodes})
    assert [excesses(g, f)[i] for i in (1, 2, 3)] == [1, 0, 0]
    assert tight_flow(inst, {"t"}, mu) == [0, 0, 0]


def test_optimality_residual_check_examples():
    inst = f1()
    assert optimality_residual_check(inst, [Q(2), Q(2), ZERO], {1: Q(2), 2: Q(2), "t": ONE}) is None
    g = f5()
    start = initialize(g, g.initial_flow)
    assert optimality_residual_check(g, start.flow, start.labels) == 1


def _cut_capacity(net, side):
    total = ZERO
    for a in net.arcs:
        if a.tail in side and a.head not in side:
            total += a.upper
        elif a.head in side and a.tail not in side:
            total -= a.lower
    return total


networks = st.integers(2, 6).flatmap(
    lambda n: st.lists(
        st.tuples(
            st.integers(0, n - 1),
            st.integers(0, n - 1),
            st.integers(0, 3),
            st.integers(0, 6),
        ),
        max_size=14,
    ).map(lambda raw: (n, raw))
)


@settings(max_examples=120, deadline=None)
@given(networks)
def test_value_equals_min_cut(data):
    n, raw = data
    arcs = [BoundedArc(u, v, Q(lo), Q(lo + w)) for u, v, lo, w in raw if u != v]
    net = FlowNetwork(list(range(n)), arcs, 0, n - 1)
    cuts = []
    middle = list(range(1, n - 1))
    for r in range(len(middle) + 1):
        for extra in itertools.combinations(middle, r):
            cuts.append(_cut_capacity(net, {0, *extra}))
    try:
        res = max_flow_bounded(net)
    except Infeasible:
        # lower bounds alone then force more than some cut can carry back
        return
    e = {v: ZERO for v in range(n)}
    for a, x in zip(arcs, res.flow):
        assert a.lower <= x <= a.upper
        e[a.head] += x
        e[a.tail] -= x
    assert all(e[v] == 0 for v in middle)
    assert res.value == e[n - 1] == min(cuts)
    assert res.value == _cut_capacity(net, res.min_cut)


instances = st.builds(
    lambda n, extra, seed: random_uncap(n, n - 1 + extra, seed),
    st.integers(2, 7),
    st.integers(0, 12),
    st.integers(0, 10**6),
)


@settings(max_examples=60, deadline=None)
@given(instances)
def test_tight_flow_bound_and_support(inst):
    start = initialize(inst, inst.initial_flow)
    mu = start.labels
    f = tight_flow(inst, inst.nodes, mu)
    for k, a in enumerate(inst.arcs):
        if f[k]:
            assert a.gain * mu[a.tail] == mu[a.head]
    assert is_conservative(inst, f, mu)
    worst = max(abs(inst.demand[j]) / mu[j] for j in inst.others())
    e = excesses(inst, f)
    assert all(e[i] / mu[i] <= inst.n * worst for i in inst.others())
