"""Continuous scaling for uncapacitated generalized flow.

The loop keeps a delta-feasible pair ``(f, mu)`` together with a scale
``delta`` and two node sets.  ``T0`` holds nodes with large relabeled
excess, and ``T`` the nodes reachable from ``T0`` along tight arcs of the
delta-fat graph.  Each iteration does one of three things: send delta
units of relabeled flow from ``T0`` to a low-excess node of ``T``, grow
``T`` by one node, or run an elementary step.  The elementary step raises
the labels on ``T`` and shrinks ``delta`` by a common factor.

Every iteration is audited by ``Auditor``, which records invariant
violations instead of trusting the arithmetic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import (
    Constants,
    UncapInstance,
    check_delta_feasible,
    delta_fat_arcs,
    excesses,
    flow_value,
    is_conservative,
)
from .initialize import initialize
from .maxflow import optimality_residual_check, tight_flow
from .rational import INF, ZERO, Rational, log2_at_least


class InvariantError(AssertionError):
    """A runtime invariant check failed."""


# ---- outcomes -------------------------------------------------------------


@dataclass
class Augmented:
    p: object
    q: object
    path: list
    kind: str = "augment"


@dataclass
class Extended:
    node: object
    kind: str = "extend"


@dataclass
class Stepped:
    alpha: Rational
    kind: str = "step"


@dataclass
class OptimalReached:
    kind: str = "optimal"


@dataclass
class Skipped:
    """Enhanced variant only: filtration ran and the elementary step was skipped."""

    kind: str = "skip"


@dataclass
class Counters:
    total: int = 0
    shrinking: int = 0
    expanding: int = 0
    neutral: int = 0
    augmentations: int = 0
    extensions: int = 0
    steps: int = 0


@dataclass
class ScalingState:
    inst: UncapInstance
    const: Constants
    f: list
    mu: dict
    delta: Rational
    T0: set = field(default_factory=set)
    T: set = field(default_factory=set)
    counters: Counters = field(default_factory=Counters)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    # f and mu are mutated in place all over the loop, so the memo is keyed
    # on their contents rather than invalidated by hand
    def excesses(self) -> dict:
        key = (id(self.inst), tuple(self.f))
        hit = self._memo.get("e")
        if hit is None or hit[0] != key:
            hit = (key, excesses(self.inst, self.f))
            self._memo["e"] = hit
        return hit[1]

    def rel_excess(self) -> dict:
        key = (id(self.inst), tuple(self.f), tuple(self.mu.items()))
        hit = self._memo.get("rel")
        if hit is None or hit[0] != key:
            e = self.excesses()
            hit = (key, {i: e[i] / self.mu[i] for i in self.inst.nodes})
            self._memo["rel"] = hit
        return dict(hit[1])

    def tight_fat_arcs(self) -> list:
        """Tight arcs of the delta-fat graph, forward arcs first."""
        key = (id(self.inst), tuple(self.f), tuple(self.mu.items()), self.delta)
        hit = self._memo.get("tight")
        if hit is None or hit[0] != key:
            mu = self.mu
            arcs = [
                r
                for r in delta_fat_arcs(self.inst, self.f, mu, self.delta)
                if r.gain * mu[r.tail] == mu[r.head]
            ]
            hit = (key, arcs)
            self._memo["tight"] = hit
        return hit[1]

    def ordered(self, nodes) -> list:
        return [i for i in self.inst.nodes if i in nodes]


# ---- the pieces of one iteration -------------------------------------------


def compute_N(state: ScalingState, rel: dict | None = None) -> set:
    inst = state.inst
    rel = state.rel_excess() if rel is None else rel
    low = {i for i in inst.others() if rel[i] < Constants.lo(inst.degree(i)) * state.delta}
    return low | {inst.sink}


def find_tight_path(state: ScalingState, N: set):
    """First ``p`` of ``T0`` in node order, then a shortest tight fat path to ``N & T``.

    Returns ``(p, q, path)`` or None.
    """
    targets = N & state.T
    if not targets:
        return None
    arcs = [r for r in state.tight_fat_arcs() if r.tail in state.T and r.head in state.T]
    out: dict = {}
    for r in arcs:
        out.setdefault(r.tail, []).append(r)
    for p in state.ordered(state.T0):
        via = {p: None}
        queue = deque([p])
        while queue:
            u = queue.popleft()
            if u in targets:
                path = []
                v = u
                while via[v] is not None:
                    path.append(via[v])
                    v = via[v].tail
                return p, u, list(reversed(path))
            for r in out.get(u, ()):
                if r.head not in via:
                    via[r.head] = r
                    queue.append(r.head)
    return None


def augment_on_path(state: ScalingState, p, q, path) -> None:
    """Send delta units of relabeled flow from p to q along a tight fat path."""
    inst, f, mu, delta = state.inst, state.f, state.mu, state.delta
    for r in path:
        if r.forward:
            f[r.arc] += delta * mu[r.tail]
        else:
            # r reverses arc k = (r.head -> r.tail)
            f[r.arc] -= delta * mu[r.head]
            assert f[r.arc] > 0
    rel_p = state.rel_excess()[p]
    if rel_p < Constants.mid(inst.degree(p)) * delta:
        state.T0.discard(p)
    state.T = set(state.T0)


def find_extension(state: ScalingState):
    """First tight fat arc leaving T, in arc order; returns the arc or None."""
    for r in state.tight_fat_arcs():
        if r.tail in state.T and r.head not in state.T:
            return r
    return None


def _partition(state: ScalingState):
    """Non-tight arcs inside V-T, and arcs entering T from outside."""
    inst, mu, T = state.inst, state.mu, state.T
    inner_nontight = set()
    entering = set()
    for k, a in enumerate(inst.arcs):
        if a.tail in T:
            continue
        if a.head in T:
            entering.add(k)
        elif a.gain * mu[a.tail] < mu[a.head]:
            inner_nontight.add(k)
    return inner_nontight, entering


def delta_i(state: ScalingState, i, inner_nontight=None, entering=None):
    """Largest factor keeping node i's relabeled excess within the upper threshold."""
    inst, f, mu = state.inst, state.f, state.mu
    assert i not in state.T and i != inst.sink
    if inner_nontight is None:
        inner_nontight, entering = _partition(state)
    shrunk = inner_nontight | entering
    r1 = r2 = r3 = r4 = ZERO
    for k in inst.in_arcs[i]:
        x = inst.arcs[k].gain * f[k]
        if k in inner_nontight:
            r1 += x
        else:
            r2 += x
    for k in inst.out_arcs[i]:
        if k in shrunk:
            r3 += f[k]
        else:
            r4 += f[k]
    num = Constants.hi(inst.degree(i)) * state.delta * mu[i] + r3 - r1
    den = r2 - r4 - inst.demand[i]
    assert den >= 0, f"negative denominator at node {i}"
    if den == 0:
        return INF
    value = num / den
    assert value > 1, f"delta_i <= 1 at node {i}"
    return value


def elementary_step(state: ScalingState):
    inst, f, mu = state.inst, state.f, state.mu
    T = state.T
    t = inst.sink
    _check_step_preconditions(state)
    inner_nontight, entering = _partition(state)
    outside = [i for i in inst.others() if i not in T]
    e_before = dict(state.excesses())
    alpha1 = INF
    for i in outside:
        d = delta_i(state, i, inner_nontight, entering)
        if d != INF and (alpha1 == INF or d < alpha1):
            alpha1 = d
    alpha2 = INF
    for k, a in enumerate(inst.arcs):
        if a.tail in T and a.head not in T:
            v = mu[a.head] / (a.gain * mu[a.tail])
            if alpha2 == INF or v < alpha2:
                alpha2 = v
    if alpha1 == INF and alpha2 == INF:
        assert not T
        for k in inst.out_arcs[t]:
            a = inst.arcs[k]
            if a.gain * mu[t] < mu[a.head]:
                f[k] = ZERO
        return OptimalReached()
    alpha = alpha2 if alpha1 == INF or (alpha2 != INF and alpha2 < alpha1) else alpha1
    state.delta /= alpha
    for i in T:
        mu[i] *= alpha
    for k in inner_nontight | entering:
        f[k] /= alpha
    rel = state.rel_excess()
    _check_step_postconditions(state, T, outside, rel, e_before, alpha == alpha1, alpha == alpha2)
    entered = [i for i in outside if rel[i] == Constants.hi(inst.degree(i)) * state.delta]
    state.T0.update(entered)
    state.T.update(entered)
    dropped = {i for i in state.T0 if rel[i] < Constants.mid(inst.degree(i)) * state.delta}
    if dropped:
        state.T0 -= dropped
        state.T = set(state.T0)
    return Stepped(alpha)


def _check_step_preconditions(state: ScalingState) -> None:
    inst, f, mu, delta, T = state.inst, state.f, state.mu, state.delta, state.T
    rel = state.rel_excess()
    assert inst.sink not in T
    for i in inst.others():
        if i in T:
            assert rel[i] >= Constants.lo(inst.degree(i)) * delta, f"low excess in T at {i}"
        else:
            assert rel[i] < Constants.hi(inst.degree(i)) * delta, f"excess at threshold outside T at {i}"
    for k, a in enumerate(inst.arcs):
        if a.tail in T and a.head not in T:
            assert a.gain * mu[a.tail] < mu[a.head], f"tight arc {k} leaves T"
        elif a.head in T and a.tail not in T:
            assert f[k] / mu[a.tail] <= delta, f"fat arc {k} enters T"


def _check_step_postconditions(state, T, outside, rel, e_before, by_nodes, by_arcs) -> None:
    inst, mu, delta = state.inst, state.mu, state.delta
    e = state.excesses()
    for i in outside:
        assert rel[i] <= Constants.hi(inst.degree(i)) * delta, f"excess above threshold at {i}"
    if by_nodes:
        assert any(rel[i] == Constants.hi(inst.degree(i)) * delta for i in outside)
    for i in T:
        assert e[i] <= e_before[i], f"excess grew inside T at {i}"
    if by_arcs:
        assert any(
            a.tail in T and a.head not in T and a.gain * mu[a.tail] == mu[a.head] for a in inst.arcs
        ), "no tight arc leaves T after an arc-limited step"


def potential_psi(state: ScalingState, rel: dict | None = None) -> int:
    if state.delta == 0:
        return 0
    rel = state.rel_excess() if rel is None else rel
    total = 0
    for i in state.T0:
        beta = rel[i] / state.delta
        total += int((beta - Constants.lo(state.inst.degree(i))).__floor__())
    return total


# ---- auditing --------------------------------------------------------------


@dataclass
class Snapshot:
    delta: Rational
    mu: dict
    T0: frozenset
    T: frozenset
    rel: dict
    psi: int
    kappa: int
    nodes: frozenset


def take_snapshot(state: ScalingState, kappa: int = 0) -> Snapshot:
    rel = state.rel_excess()
    return Snapshot(
        delta=state.delta,
        mu=dict(state.mu),
        T0=frozenset(state.T0),
        T=frozenset(state.T),
        rel=rel,
        psi=potential_psi(state, rel),
        kappa=kappa,
        nodes=frozenset(state.inst.nodes),
    )


def classify(before: Snapshot, after: Snapshot) -> str:
    if before.T - after.T:
        return "shrinking"
    if before.T < after.T:
        return "expanding"
    return "neutral"


class Auditor:
    """Checks the per-iteration invariants and collects violation messages."""

    def __init__(self, strict: bool = True):
        self.strict = strict
        self.violations: list[str] = []

    def check(self, state: ScalingState, before: Snapshot, after: Snapshot, outcome, entered=()) -> list[str]:
        inst = state.inst
        found = [str(v) for v in check_delta_feasible(inst, state.f, state.mu, state.delta, state.excesses())]
        same_cycle = before.kappa == after.kappa
        if same_cycle:
            if after.delta > before.delta:
                found.append("delta increased")
            for i in inst.nodes:
                if state.mu[i] < before.mu[i]:
                    found.append(f"label of {i} decreased")
            # |b^mu_i| / delta must not shrink
            for i in inst.others():
                if inst.demand[i] and state.mu[i] * after.delta > before.mu[i] * before.delta:
                    found.append(f"|b^mu|/delta decreased at {i}")
        kind = classify(before, after)
        bonus = sum(3 * inst.degree(i) + 7 for i in entered)
        if same_cycle:
            if kind == "shrinking" and after.psi - bonus > before.psi - 1:
                found.append(f"potential did not drop in a shrinking iteration ({before.psi} -> {after.psi})")
            if after.psi > before.psi + bonus:
                found.append(f"potential increased ({before.psi} -> {after.psi}, entries {bonus})")
        if isinstance(outcome, Stepped):
            alpha = outcome.alpha
            for i in inst.others():
                # beta = relabeled excess / delta, compared without dividing
                cap = max(before.rel[i], inst.degree(i) * before.delta) * alpha * alpha * after.delta
                if after.rel[i] * before.delta > cap:
                    found.append(f"beta growth bound failed at {i}")
        self.violations.extend(found)
        if found and self.strict:
            raise InvariantError("; ".join(found))
        return found


# ---- drivers -------------------------------------------------------------


TraceHook = Callable[[dict], None]


@dataclass
class SolveResult:
    flow: list
    labels: dict
    value: Rational
    delta_start: Rational
    delta_final: Rational
    counters: Counters
    violations: list
    bounds_ok: Optional[bool] = None
    extra: dict = field(default_factory=dict)


def iterate_weak(state: ScalingState):
    """One iteration of the weak loop; returns the outcome."""
    N = compute_N(state)
    found = find_tight_path(state, N)
    if found is not None:
        p, q, path = found
        augment_on_path(state, p, q, path)
        state.counters.augmentations += 1
        return Augmented(p, q, path)
    r = find_extension(state)
    if r is not None:
        state.T.add(r.head)
        state.counters.extensions += 1
        return Extended(r.head)
    state.counters.steps += 1
    return elementary_step(state)


def _entered(before: Snapshot, state: ScalingState):
    return [i for i in state.T0 if i not in before.T0]


def _emit(hook, counters, outcome, state, after, kappa, d_size, found, kind):
    if hook is None:
        return
    hook(
        {
            "iter": counters.total,
            "kind": outcome.kind,
            "class": kind,
            "delta": str(state.delta),
            "psi": after.psi,
            "kappa": kappa,
            "D_size": d_size,
            "violations": found,
        }
    )


def _count(counters: Counters, kind: str) -> None:
    counters.total += 1
    if kind == "shrinking":
        counters.shrinking += 1
    elif kind == "expanding":
        counters.expanding += 1
    else:
        counters.neutral += 1


def continuous_scaling(
    inst: UncapInstance,
    initial=None,
    trace: TraceHook | None = None,
    strict: bool = True,
    max_iterations: int | None = None,
) -> SolveResult:
    """Weakly polynomial continuous scaling; returns an optimal primal-dual pair."""
    start = initialize(inst, initial)
    const = Constants.of(inst)
    state = ScalingState(inst, const, list(start.flow), dict(start.labels), start.delta)
    auditor = Auditor(strict)
    threshold = const.termination_threshold
    outcome = None
    if state.delta > 0:
        while state.delta >= threshold:
            if max_iterations is not None and state.counters.total >= max_iterations:
                raise RuntimeError("iteration limit reached")
            before = take_snapshot(state)
            outcome = iterate_weak(state)
            after = take_snapshot(state)
            kind = classify(before, after)
            _count(state.counters, kind)
            found = auditor.check(state, before, after, outcome, _entered(before, state))
            _emit(trace, state.counters, outcome, state, after, 0, 0, found, kind)
            if isinstance(outcome, OptimalReached):
                break
    if isinstance(outcome, OptimalReached):
        f = state.f
    else:
        f = tight_flow(inst, inst.nodes, state.mu)
        witness = optimality_residual_check(inst, f, state.mu)
        assert witness is None, f"final tight flow leaves excess at {witness}"
    assert is_conservative(inst, f, state.mu)
    result = SolveResult(
        flow=f,
        labels=state.mu,
        value=flow_value(inst, f),
        delta_start=start.delta,
        delta_final=state.delta,
        counters=state.counters,
        violations=auditor.violations,
    )
    result.bounds_ok = weak_bounds_hold(result, inst)
    return result


def weak_bounds_hold(result: SolveResult, inst: UncapInstance) -> bool | None:
    """Iteration counts against 26mn log2(ratio) and 13m log2(ratio); None when delta started at 0."""
    if result.delta_start == 0:
        return None
    ratio = result.delta_start / result.delta_final
    m, n = inst.m, inst.n
    c = result.counters
    # count <= factor * log2(ratio)  <=>  2**count <= ratio**factor
    return log2_at_least(ratio, c.total, 26 * m * n) and log2_at_least(ratio, c.shrinking, 13 * m)
