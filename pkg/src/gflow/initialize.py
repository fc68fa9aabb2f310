"""Starting point for the scaling loops.

Flow-generating residual cycles are cancelled first, which makes the
highest-gain labels well defined.  The tight flow for those labels is the
initial flow, and its largest relabeled excess is the initial scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import UncapInstance, check_delta_feasible, excesses, residual_arcs
from .gaincycles import best_gains_to, max_mean_gain_cycle
from .maxflow import Unbounded, tight_flow
from .rational import INF, ONE, ZERO, Rational


@dataclass
class InitResult:
    flow: list
    labels: dict
    delta: Rational
    cancellations: int


def _residual_edges(inst: UncapInstance, g: Sequence[Rational]):
    res = residual_arcs(inst, g)
    # key orders forward arcs before reverse ones of the same index
    edges = [(r.tail, r.head, r.gain, (r.arc, 0 if r.forward else 1)) for r in res]
    return res, edges


def cancel_flow_generating_cycles(inst: UncapInstance, initial: Sequence[Rational]) -> tuple[list, int]:
    """Cancel maximum-mean-gain residual cycles until none generates flow.

    Returns the new flow and the number of cancellations.
    """
    g = list(initial)
    steps = 0
    while True:
        res, edges = _residual_edges(inst, g)
        cycle = max_mean_gain_cycle(inst.nodes, edges)
        if cycle is None:
            break
        # largest amount entering the cycle at its first node before a reverse arc runs dry
        limit = INF
        carried = ONE
        for e in cycle:
            r = res[e]
            if not r.forward:
                cap = inst.arcs[r.arc].gain * g[r.arc]
                if limit == INF or cap / carried < limit:
                    limit = cap / carried
            carried *= r.gain
        if limit == INF:
            raise Unbounded("flow-generating cycle of uncapacitated arcs")
        carried = ONE
        for e in cycle:
            r = res[e]
            amount = limit * carried
            if r.forward:
                g[r.arc] += amount
            else:
                g[r.arc] -= amount / inst.arcs[r.arc].gain
            carried *= r.gain
        steps += 1
    e = excesses(inst, g)
    assert all(e[i] >= 0 for i in inst.others()), "cycle cancelling broke feasibility"
    return g, steps


def highest_gain_labels(inst: UncapInstance, g: Sequence[Rational]) -> dict:
    """mu_i = 1 / (highest residual path gain from i to the sink)."""
    res, edges = _residual_edges(inst, g)
    best = best_gains_to(inst.nodes, edges, inst.sink)
    missing = [i for i in inst.nodes if i not in best]
    assert not missing, f"nodes without a residual path to the sink: {missing}"
    mu = {i: ONE / best[i] for i in inst.nodes}
    for r in res:
        assert r.gain * mu[r.tail] <= mu[r.head], "labels infeasible on a residual arc"
    return mu


def initialize(inst: UncapInstance, initial: Sequence[Rational] | None = None) -> InitResult:
    if initial is None:
        initial = inst.initial_flow
    g, steps = cancel_flow_generating_cycles(inst, initial)
    mu = highest_gain_labels(inst, g)
    f = tight_flow(inst, inst.nodes, mu)
    e = excesses(inst, f)
    delta = max((e[i] / mu[i] for i in inst.others()), default=ZERO)
    assert not check_delta_feasible(inst, f, mu, delta)
    for i in inst.others():
        assert e[i] / mu[i] <= (inst.degree(i) + 2) * delta
    assert delta <= inst.n * inst.bound ** 2, "initial scale above n * bound^2"
    return InitResult(f, mu, delta, steps)
