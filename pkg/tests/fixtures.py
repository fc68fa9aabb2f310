"""Small hand-checkable instances shared by the tests."""

from gflow.core import Arc, UncapInstance
from gflow.rational import Q


def f1() -> UncapInstance:
    arcs = [Arc(1, 2, Q(1)), Arc(2, "t", Q(1, 2)), Arc(1, "t", Q(1, 4))]
    return UncapInstance([1, 2, "t"], "t", arcs, {1: Q(-2), 2: Q(0)}, bound=8)


def f5() -> UncapInstance:
    arcs = [
        Arc(1, 2, Q(1)),
        Arc(3, 2, Q(1)),
        Arc(3, "t", Q(1)),
        Arc(1, "t", Q(1, 4)),
        Arc(2, "t", Q(1, 4)),
    ]
    demand = {1: Q(-1), 2: Q(0), 3: Q(-1)}
    return UncapInstance([1, 2, 3, "t"], "t", arcs, demand, bound=16, initial_flow=[0, 1, 0, 0, 0])


def f2():
    from gflow.transform import StdArc, StdInstance
    from gflow.rational import INF

    arcs = [StdArc("t", 1, Q(1), Q(3)), StdArc(1, "t", Q(2), INF)]
    return StdInstance([1, "t"], "t", arcs)


def conservative_labels(inst: UncapInstance, f) -> dict:
    """Highest-gain labels on the residual graph of ``f``; feasible whenever no cycle generates."""
    from gflow.initialize import highest_gain_labels

    return highest_gain_labels(inst, f)
