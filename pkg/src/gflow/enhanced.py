"""Strongly polynomial variant of continuous scaling.

Two additions to the weak loop.  Filtration re-solves the tight network
outside ``T`` once every demand there is small against ``delta``, which
forces progress on the demands.  Abundant arcs, whose relabeled flow is so
large that they are tight in every optimal dual, are contracted.  The run
ends when one node is left (or, as a guard for small instances, when
``delta`` falls below the termination threshold).  The labels are then
expanded back through the contractions and a final tight flow gives the
primal optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    Arc,
    Constants,
    UncapInstance,
    check_delta_feasible,
    excesses,
    flow_value,
    is_conservative,
    make_conservative,
    nontight_and_reserve,
)
from .initialize import initialize
from .maxflow import optimality_residual_check, tight_flow
from .rational import INF, ZERO, Rational
from .scaling import (
    Augmented,
    Auditor,
    Extended,
    InvariantError,
    OptimalReached,
    ScalingState,
    Skipped,
    SolveResult,
    TraceHook,
    augment_on_path,
    classify,
    compute_N,
    elementary_step,
    find_extension,
    find_tight_path,
    take_snapshot,
)


@dataclass
class ContractionRecord:
    """Everything needed to undo one contraction on the dual side."""

    arc: int
    tail: object
    head: object
    gain: Rational
    sink_tail: bool
    merged: object
    removed: object
    before: UncapInstance
    arc_map: list
    origin: int


def abundant_arcs(inst: UncapInstance, f, mu, delta, const: Constants) -> list[int]:
    limit = const.abundant_factor * delta
    return [k for k, a in enumerate(inst.arcs) if f[k] / mu[a.tail] >= limit]


def contract(inst: UncapInstance, f, mu, k: int, origins: list[int]):
    """Contract the tight arc ``k``; returns (instance, flow, labels, record, origins).

    Non-tight arcs must already carry zero flow.  Arcs that become parallel
    are merged into the one with the largest gain, and their flows added.
    """
    a = inst.arcs[k]
    p, q, g = a.tail, a.head, a.gain
    if g * mu[p] != mu[q]:
        raise ValueError("only tight arcs can be contracted")
    t = inst.sink
    sink_tail = p == t
    removed, merged = (q, p) if sink_tail else (p, q)

    rewritten = []  # (tail, head, gain, flow, old index, auxiliary)
    for j, b in enumerate(inst.arcs):
        tail, head, gain, x = b.tail, b.head, b.gain, f[j]
        aux = b.auxiliary
        if not sink_tail:
            if head == p:
                head, gain, aux = q, gain * g, False
            if tail == p:
                tail, gain, x, aux = q, gain / g, g * x, False
        else:
            if head == q:
                head, gain, aux = p, gain / g, False
            if tail == q:
                tail, gain, x, aux = p, gain * g, x / g, False
        if tail == head:
            continue
        rewritten.append((tail, head, gain, x, j, aux))

    groups: dict = {}
    order = []
    for item in rewritten:
        key = (item[0], item[1]) if merged in (item[0], item[1]) else ("solo", item[4])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(item)

    nodes = [i for i in inst.nodes if i != removed]
    new_mu = {i: mu[i] for i in nodes}
    arcs, flow, new_origins = [], [], []
    arc_map: list = [None] * inst.m
    for key in order:
        items = groups[key]
        best = max(items, key=lambda it: (it[2], -it[4]))
        total = ZERO
        for it in items:
            if it[3]:
                assert it[2] == best[2], "flow on a merged arc that is not of maximal gain"
                total += it[3]
            arc_map[it[4]] = len(arcs)
        arcs.append(Arc(best[0], best[1], best[2], best[5]))
        flow.append(total)
        new_origins.append(origins[best[4]])

    demand = {i: inst.demand[i] for i in nodes}
    if not sink_tail:
        demand[q] = inst.demand[q] + g * inst.demand[p]
    new_inst = UncapInstance(nodes, t, arcs, demand, inst.bound)
    record = ContractionRecord(k, p, q, g, sink_tail, merged, removed, inst, arc_map, origins[k])
    assert is_conservative(new_inst, flow, new_mu), "contraction broke conservativeness"
    return new_inst, flow, new_mu, record, new_origins


def reverse_expand(record: ContractionRecord, mu_new: dict) -> dict:
    """Labels on the instance before the contraction, from labels after it."""
    mu = {i: mu_new[i] for i in mu_new}
    if record.sink_tail:
        mu[record.head] = record.gain
    else:
        mu[record.tail] = mu_new[record.head] / record.gain
    inst = record.before
    for a in inst.arcs:
        assert a.gain * mu[a.tail] <= mu[a.head], "expanded labels are not dual feasible"
    assert record.gain * mu[record.tail] == mu[record.head]
    return mu


def filtration(state: ScalingState) -> None:
    """Replace the flow outside T by a fresh tight flow; zero arcs entering T."""
    inst, mu, T = state.inst, state.mu, state.T
    outside = [i for i in inst.nodes if i not in T]
    fresh = tight_flow(inst, outside, mu)
    f = state.f
    for k, a in enumerate(inst.arcs):
        if a.tail not in T:
            f[k] = fresh[k] if a.head not in T else ZERO
    e = excesses(inst, f)
    _, reserve = nontight_and_reserve(inst, f, mu)
    worst = max((abs(inst.demand[j]) / mu[j] for j in outside if j != inst.sink), default=ZERO)
    for i in outside:
        if i != inst.sink:
            assert e[i] / mu[i] <= reserve[i] / mu[i] + state.const.n * worst, f"filtration bound fails at {i}"


def gamma_quantity(state: ScalingState, i):
    """``(32 m n delta, |b^mu_i|, ratio)``; the ratio is INF when b_i = 0."""
    top = 32 * state.const.m * state.const.n * state.delta
    b = abs(state.inst.demand[i]) / state.mu[i]
    return top, b, (INF if b == 0 else top / b)


def demand_set(state: ScalingState, kappa: int) -> set:
    cut = state.delta / state.const.filtration_divisor(kappa)
    return {i for i in state.inst.others() if abs(state.inst.demand[i]) / state.mu[i] >= cut}


def expand_to_original(original: UncapInstance, records: list[ContractionRecord], mu_final: dict):
    mu = dict(mu_final)
    for record in reversed(records):
        mu = reverse_expand(record, mu)
    f = tight_flow(original, original.nodes, mu)
    return f, mu


def _first(seq):
    return seq[0] if seq else None


def enhanced_continuous_scaling(
    inst: UncapInstance,
    initial=None,
    trace: TraceHook | None = None,
    strict: bool = True,
    max_iterations: int | None = None,
    audit: bool = True,
) -> SolveResult:
    """Optimal flow and labels; ``audit=False`` skips the per-iteration invariant checks."""
    original = inst
    start = initialize(inst, initial)
    const = Constants.of(inst)
    state = ScalingState(inst, const, list(start.flow), dict(start.labels), start.delta)
    auditor = Auditor(strict)
    threshold = const.termination_threshold
    records: list[ContractionRecord] = []
    origins = list(range(inst.m))
    kappa = 0
    filtrations = 0
    trace_rows: list[dict] = []
    optimal = False

    def note(msgs):
        auditor.violations.extend(msgs)
        if msgs and strict:
            raise InvariantError("; ".join(msgs))

    if state.delta == 0:
        optimal = True
    while not optimal and state.inst.n > 1 and state.delta >= threshold:
        if max_iterations is not None and state.counters.total >= max_iterations:
            raise RuntimeError("iteration limit reached")
        cur = state.inst
        before = take_snapshot(state, kappa)
        d_before = demand_set(state, kappa)
        if audit and state.counters.total >= 1:
            for i in cur.others():
                top, b, ratio = gamma_quantity(state, i)
                if ratio != INF and ratio < 1:
                    note([f"gamma ratio below 1 at {i}"])
        filtered = False
        N = compute_N(state)
        found = find_tight_path(state, N)
        entered = []
        if found is not None:
            p, q, path = found
            augment_on_path(state, p, q, path)
            state.counters.augmentations += 1
            outcome = Augmented(p, q, path)
        else:
            r = find_extension(state)
            if r is not None:
                state.T.add(r.head)
                state.counters.extensions += 1
                outcome = Extended(r.head)
            else:
                small = state.delta / const.filtration_divisor(kappa)
                if all(abs(cur.demand[i]) / state.mu[i] < small for i in cur.others() if i not in state.T):
                    filtration(state)
                    filtered = True
                    filtrations += 1
                rel = state.rel_excess()
                T0_ok = all(rel[i] >= Constants.mid(cur.degree(i)) * state.delta for i in state.T0)
                T_ok = all(rel[i] >= Constants.lo(cur.degree(i)) * state.delta for i in state.T)
                if T0_ok and T_ok:
                    state.counters.steps += 1
                    outcome = elementary_step(state)
                    optimal = isinstance(outcome, OptimalReached)
                else:
                    dropped = {i for i in state.T0 if rel[i] < Constants.mid(cur.degree(i)) * state.delta}
                    if dropped:
                        state.T0 -= dropped
                        state.T = set(state.T0)
                    outcome = Skipped()
        entered = [i for i in state.T0 if i not in before.T0]
        mid = take_snapshot(state, kappa)
        found_msgs = auditor.check(state, before, mid, outcome, entered) if audit else []

        contracted = 0
        while not optimal and state.inst.n > 1:
            k = _first(abundant_arcs(state.inst, state.f, state.mu, state.delta, const))
            if k is None:
                break
            old = state.inst
            ratio_before = {
                i: abs(old.demand[i]) / (state.mu[i] * state.delta) for i in old.others()
            }
            f0 = make_conservative(old, state.f, state.mu, state.delta)
            new_inst, f1, mu1, record, origins = contract(old, f0, state.mu, k, origins)
            records.append(record)
            state.inst, state.f, state.mu = new_inst, f1, mu1
            state.delta *= const.contraction_factor
            kappa += 1
            state.T0, state.T = set(), set()
            contracted += 1
            rel = state.rel_excess()
            msgs = []
            for i in new_inst.others():
                if not rel[i] < Constants.mid(new_inst.degree(i)) * state.delta:
                    msgs.append(f"excess of {i} too large after contraction")
                if i != record.merged:
                    ratio = abs(new_inst.demand[i]) / (state.mu[i] * state.delta)
                    if ratio * const.contraction_factor != ratio_before[i]:
                        msgs.append(f"|b^mu|/delta of {i} not divided by 16 at contraction")
            msgs += [str(v) for v in check_delta_feasible(new_inst, state.f, state.mu, state.delta)]
            note(msgs)
            found_msgs = found_msgs + msgs

        after = take_snapshot(state, kappa)
        kind = classify(before, after)
        state.counters.total += 1
        if kind == "shrinking":
            state.counters.shrinking += 1
        elif kind == "expanding":
            state.counters.expanding += 1
        else:
            state.counters.neutral += 1
        d_after = demand_set(state, kappa)
        if not contracted and not d_before <= d_after:
            note(["demand set lost a node inside a major cycle"])
        row = {
            "iter": state.counters.total,
            "kind": outcome.kind,
            "class": kind,
            "delta": str(state.delta),
            "psi": after.psi,
            "kappa": kappa,
            "D_size": len(d_after),
            "D_grew": len(d_after - d_before) > 0 and not contracted,
            "filtered": filtered,
            "contracted": contracted,
            "violations": found_msgs,
        }
        trace_rows.append(row)
        if trace is not None:
            trace(row)

    f_star, mu_star = expand_to_original(original, records, state.mu)
    witness = optimality_residual_check(original, f_star, mu_star)
    assert witness is None, f"expanded labels leave excess at {witness}"
    assert is_conservative(original, f_star, mu_star)
    result = SolveResult(
        flow=f_star,
        labels=mu_star,
        value=flow_value(original, f_star),
        delta_start=start.delta,
        delta_final=state.delta,
        counters=state.counters,
        violations=auditor.violations,
    )
    c = state.counters
    n, m = const.n, const.m
    result.bounds_ok = c.shrinking <= 195 * n * n * m and c.total <= 2 * n * (c.shrinking + 1)
    result.extra = {
        "records": records,
        "contracted_origins": [r.origin for r in records],
        "kappa": kappa,
        "filtrations": filtrations,
        "trace": trace_rows,
    }
    return result
