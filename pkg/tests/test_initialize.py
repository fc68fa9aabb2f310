import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import f1, f5
from gflow.core import Arc, UncapInstance, check_delta_feasible, excesses, residual_arcs
from gflow.generate import random_uncap
from gflow.initialize import cancel_flow_generating_cycles, highest_gain_labels, initialize
from gflow.rational import ONE, ZERO, Q


def two_route_instance():
    # a1 doubles what a2 carries between the same nodes
    arcs = [Arc(1, 2, Q(2)), Arc(1, 2, ONE), Arc(1, "t", ONE), Arc(2, "t", ONE)]
    return UncapInstance([1, 2, "t"], "t", arcs, {1: Q(-1), 2: ZERO}, bound=2, initial_flow=[0, 1, 0, 0])


def test_cancel_examples():
    inst = f1()
    assert cancel_flow_generating_cycles(inst, [ZERO] * 3)[0] == [0, 0, 0]
    g = f5()
    assert cancel_flow_generating_cycles(g, g.initial_flow)[0] == list(g.initial_flow)


def test_cancel_saturates_the_reverse_arc():
    inst = two_route_instance()
    g, count = cancel_flow_generating_cycles(inst, inst.initial_flow)
    # x on a1 returns 2x through the reverse of a2, which holds 1
    assert g == [Q(1, 2), 0, 0, 0]
    assert count == 1
    assert excesses(inst, g)[1] == Q(1, 2)


def test_highest_gain_labels_examples():
    assert highest_gain_labels(f1(), [ZERO] * 3) == {1: 2, 2: 2, "t": 1}
    g = f5()
    assert highest_gain_labels(g, list(g.initial_flow)) == {i: 1 for i in g.nodes}
    single = UncapInstance(["t"], "t", [], {}, bound=1)
    assert highest_gain_labels(single, []) == {"t": 1}


def test_initialize_examples():
    r = initialize(f1(), [ZERO] * 3)
    assert (r.flow, r.labels, r.delta) == ([2, 2, 0], {1: 2, 2: 2, "t": 1}, 0)
    g = f5()
    r = initialize(g, g.initial_flow)
    assert (r.flow, r.labels, r.delta) == ([0, 0, 1, 0, 0], {i: 1 for i in g.nodes}, 1)
    zero = UncapInstance([1, "t"], "t", [Arc(1, "t", Q(1, 2))], {1: ZERO}, bound=2)
    r = initialize(zero, [ZERO])
    assert (r.flow, r.delta) == ([0], 0)


def _best_cycle_gain(inst, g):
    graph = nx.DiGraph()
    for r in residual_arcs(inst, g):
        if r.tail == r.head:
            continue
        old = graph.get_edge_data(r.tail, r.head)
        if old is None or r.gain > old["gain"]:
            graph.add_edge(r.tail, r.head, gain=r.gain)
    best = ZERO
    for cycle in nx.simple_cycles(graph):
        gain = ONE
        for u, v in zip(cycle, cycle[1:] + cycle[:1]):
            gain *= graph[u][v]["gain"]
        best = max(best, gain)
    return best


instances = st.builds(
    lambda n, extra, seed: random_uncap(n, n - 1 + extra, seed),
    st.integers(2, 7),
    st.integers(0, 12),
    st.integers(0, 10**6),
)


@settings(max_examples=60, deadline=None)
@given(instances)
def test_no_generating_cycle_left_and_labels_feasible(inst):
    g, _ = cancel_flow_generating_cycles(inst, inst.initial_flow)
    assert _best_cycle_gain(inst, g) <= 1
    e = excesses(inst, g)
    assert all(e[i] >= 0 for i in inst.others())
    mu = highest_gain_labels(inst, g)
    for r in residual_arcs(inst, g):
        assert r.gain * mu[r.tail] <= mu[r.head]


@settings(max_examples=60, deadline=None)
@given(instances)
def test_initialize_conclusions(inst):
    r = initialize(inst, inst.initial_flow)
    assert check_delta_feasible(inst, r.flow, r.labels, r.delta) == []
    e = excesses(inst, r.flow)
    for i in inst.others():
        assert e[i] / r.labels[i] <= (inst.degree(i) + 2) * r.delta
    assert r.delta <= inst.n * inst.bound**2
