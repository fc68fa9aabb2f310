"""Exact optimality certificates and a brute-force reference solver.

A pair ``(f, mu)`` passing ``check_optimality_uncap`` is optimal by LP
duality, so the tests never need an outside LP solver.  ``onaga_solve``
augments along highest-gain paths; it can take exponentially many steps
and is meant for tiny instances only.
"""

from __future__ import annotations

from collections import deque
from typing import Mapping, Sequence

from .core import UncapInstance, Violation, excesses, residual_arcs
from .gaincycles import best_gains_to
from .initialize import cancel_flow_generating_cycles
from .rational import ONE, ZERO, Rational, is_inf


class StepLimit(Exception):
    """The reference solver ran out of augmentation steps."""


def check_optimality_uncap(inst: UncapInstance, f: Sequence[Rational], mu: Mapping) -> list[Violation]:
    """Empty list iff ``f`` is optimal with ``mu`` as its finite conservative labeling."""
    out = []
    if len(f) != inst.m:
        return [Violation("shape", None, f"{len(f)} flow values for {inst.m} arcs")]
    t = inst.sink
    for i in inst.nodes:
        if i not in mu or is_inf(mu[i]) or not mu[i] > 0:
            out.append(Violation("label", i, f"label {mu.get(i)} is not a positive finite rational"))
    if mu.get(t) != ONE:
        out.append(Violation("label", t, f"sink label is {mu.get(t)}, not 1"))
    if out:
        return out
    for k, a in enumerate(inst.arcs):
        if f[k] < 0:
            out.append(Violation("negative flow", k, f"flow {f[k]}"))
        lhs = a.gain * mu[a.tail]
        if lhs > mu[a.head]:
            out.append(Violation("dual", k, f"relabeled gain {lhs / mu[a.head]} > 1"))
        elif f[k] > 0 and lhs != mu[a.head]:
            out.append(Violation("slackness", k, f"relabeled gain {lhs / mu[a.head]} != 1 on a positive arc"))
    e = excesses(inst, f)
    for i in inst.others():
        if e[i] != 0:
            out.append(Violation("excess", i, f"excess {e[i]} != 0"))
    return out


def _std_excess(std, f, i) -> Rational:
    total = ZERO
    for k, a in enumerate(std.arcs):
        if a.head == i:
            total += a.gain * f[k]
        if a.tail == i:
            total -= f[k]
    return total


def _compare_scaled(gain, mu_i, mu_j) -> int:
    """Sign of gain * mu_i - mu_j where either label may be infinite."""
    if is_inf(mu_i) and is_inf(mu_j):
        return 0
    if is_inf(mu_i):
        return 1
    if is_inf(mu_j):
        return -1
    lhs = gain * mu_i
    return (lhs > mu_j) - (lhs < mu_j)


def check_optimality_std(std, f: Sequence[Rational], mu: Mapping) -> list[Violation]:
    """Optimality conditions for the capacitated form; labels may be ``INF``.

    Two infinite labels make an arc's condition hold trivially.
    """
    out = []
    t = std.sink
    if len(f) != len(std.arcs):
        return [Violation("shape", None, f"{len(f)} flow values for {len(std.arcs)} arcs")]
    if mu.get(t) != ONE:
        out.append(Violation("label", t, f"sink label is {mu.get(t)}, not 1"))
    for i in std.nodes:
        if i not in mu or not (is_inf(mu[i]) or mu[i] > 0):
            out.append(Violation("label", i, "label must be positive or infinite"))
    if out:
        return out
    for k, a in enumerate(std.arcs):
        x = f[k]
        if x < 0 or (not is_inf(a.capacity) and x > a.capacity):
            out.append(Violation("capacity", k, f"flow {x} outside [0, {a.capacity}]"))
            continue
        sign = _compare_scaled(a.gain, mu[a.tail], mu[a.head])
        both_inf = is_inf(mu[a.tail]) and is_inf(mu[a.head])
        if both_inf:
            continue
        at_cap = not is_inf(a.capacity) and x == a.capacity
        if at_cap and x == 0:
            continue  # a zero-capacity arc constrains nothing
        if x == 0 and sign > 0:
            out.append(Violation("dual", k, "empty arc with relabeled gain above 1"))
        elif 0 < x and not at_cap and sign != 0:
            out.append(Violation("slackness", k, "arc strictly inside its bounds is not tight"))
        elif x > 0 and at_cap and sign < 0:
            out.append(Violation("slackness", k, "saturated arc with relabeled gain below 1"))
    for i in std.nodes:
        if i == t:
            continue
        e = _std_excess(std, f, i)
        if e < 0:
            out.append(Violation("feasibility", i, f"excess {e} < 0"))
        elif not is_inf(mu[i]) and e != 0:
            out.append(Violation("excess", i, f"excess {e} != 0 at a finite label"))
    return out


# ---- reference solver ------------------------------------------------------


def _canonical_labels(inst: UncapInstance, res) -> dict:
    edges = [(r.tail, r.head, r.gain, k) for k, r in enumerate(res)]
    best = best_gains_to(inst.nodes, edges, inst.sink)
    return {i: ONE / best[i] for i in inst.nodes}


def _tight_path(inst, res, mu, source):
    out: dict = {}
    for r in res:
        if r.gain * mu[r.tail] == mu[r.head]:
            out.setdefault(r.tail, []).append(r)
    via = {source: None}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == inst.sink:
            path = []
            while via[u] is not None:
                path.append(via[u])
                u = via[u].tail
            return list(reversed(path))
        for r in out.get(u, ()):
            if r.head not in via:
                via[r.head] = r
                queue.append(r.head)
    raise AssertionError(f"no tight path from {source} to the sink")


def onaga_solve(inst: UncapInstance, step_cap: int = 100_000, initial=None):
    """Highest-gain augmenting paths from excess nodes; returns ``(f, mu, steps)``.

    Raises StepLimit after ``step_cap`` augmentations.
    """
    g, _ = cancel_flow_generating_cycles(inst, inst.initial_flow if initial is None else initial)
    steps = 0
    while True:
        res = residual_arcs(inst, g)
        mu = _canonical_labels(inst, res)
        e = excesses(inst, g)
        p = next((i for i in inst.others() if e[i] > 0), None)
        if p is None:
            return g, mu, steps
        if steps >= step_cap:
            raise StepLimit(f"no optimum after {steps} augmentations")
        path = _tight_path(inst, res, mu, p)
        # amount leaving p, limited by the excess and by each reverse arc
        amount = e[p]
        carried = ONE
        for r in path:
            if not r.forward:
                room = inst.arcs[r.arc].gain * g[r.arc] / carried
                if room < amount:
                    amount = room
            carried *= r.gain
        carried = amount
        for r in path:
            if r.forward:
                g[r.arc] += carried
            else:
                g[r.arc] -= carried / inst.arcs[r.arc].gain
            carried *= r.gain
        steps += 1


def onaga_value(inst: UncapInstance, step_cap: int = 100_000) -> Rational:
    f, _, _ = onaga_solve(inst, step_cap)
    return excesses(inst, f)[inst.sink]
