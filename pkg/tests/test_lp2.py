import random

import pytest

from gflow.core import Arc
from gflow.generate import random_lp2
from gflow.lp2 import (
    FarkasCertificate,
    Feasible,
    Infeasible,
    LP2Instance,
    MonotoneInstance,
    combine_ge_le,
    minus,
    plus,
    reachable_from_gain_cycles,
    solve_lp2,
    solve_lp2m_ge,
    solve_lp2m_le,
    to_monotone,
)
from gflow.rational import INF, ZERO, Q
from oracles import fm_feasible


def two_by_two(upper=(2, 2)):
    # x0 - x1 = 0, x0 + x1 = 2
    entries = {(0, 0): 1, (1, 0): 1, (0, 1): -1, (1, 1): 1}
    return LP2Instance(2, 2, entries, [0, 2], list(upper))


def bare(nodes, arcs, demand):
    return MonotoneInstance(None, list(nodes), list(arcs), dict(demand), [])


def test_to_monotone_two_by_two():
    mono = to_monotone(two_by_two(upper=(INF, INF)))
    assert [(a.tail, a.head, a.gain) for a in mono.arcs] == [
        (minus(1), plus(0), 1),
        (minus(0), plus(1), 1),
        (plus(0), plus(1), 1),
        (minus(1), minus(0), 1),
    ]
    f = mono.image([Q(1), Q(1)])
    assert all(v == 0 for v in mono.balance(f).values())
    assert mono.recover(f) == [1, 1]


def test_to_monotone_splits_finite_bounds():
    mono = to_monotone(two_by_two())
    assert len(mono.arcs) == 8 and len(mono.slack) == 4
    f = mono.image([Q(1), Q(1)])
    assert all(v == 0 for v in mono.balance(f).values())
    assert mono.recover(f) == [1, 1]


def test_single_column_is_one_self_mirrored_arc():
    lp = LP2Instance(1, 1, {(0, 0): 1}, [0], [INF])
    mono = to_monotone(lp)
    assert [(a.tail, a.head) for a in mono.arcs] == [(minus(0), plus(0))]
    assert solve_lp2(lp) == Feasible([0])


def test_empty_instances():
    assert solve_lp2(LP2Instance(0, 0, {}, [], [])) == Feasible([])
    assert solve_lp2(LP2Instance(1, 0, {}, [0], [])) == Feasible([])
    res = solve_lp2(LP2Instance(1, 0, {}, [3], []))
    assert isinstance(res, Infeasible) and res.certificate.violations(LP2Instance(1, 0, {}, [3], [])) == []


def test_bad_instances():
    with pytest.raises(ValueError):
        LP2Instance(1, 1, {(0, 0): 0}, [0], [INF])
    with pytest.raises(ValueError):
        LP2Instance(3, 1, {(0, 0): 1, (1, 0): 1, (2, 0): 1}, [0, 0, 0], [INF])
    with pytest.raises(ValueError):
        LP2Instance(1, 1, {(0, 0): 1}, [0], [-1])
    with pytest.raises(ValueError):
        to_monotone(LP2Instance(1, 1, {}, [0], [INF]))


def test_reachable_from_gain_cycles():
    assert reachable_from_gain_cycles([1, 2], [Arc(1, 2, Q(1, 2)), Arc(2, 1, Q(2))]) == set()
    arcs = [Arc(1, 2, Q(2)), Arc(2, 1, Q(1)), Arc(2, 3, Q(1, 5))]
    assert reachable_from_gain_cycles([1, 2, 3, 4], arcs) == {1, 2, 3}


def test_ge_single_node():
    assert solve_lp2m_ge(bare([1], [], {1: Q(-1)})).feasible
    res = solve_lp2m_ge(bare([1], [], {1: Q(1)}))
    assert not res.feasible and res.y == {1: 1}


def test_le_mirrors_ge():
    assert solve_lp2m_le(bare([1], [], {1: Q(1)})).feasible
    res = solve_lp2m_le(bare([1], [], {1: Q(-1)}))
    assert not res.feasible and res.y == {1: -1}


def test_ge_uses_a_generating_cycle():
    arcs = [Arc(1, 2, Q(2)), Arc(2, 1, Q(1)), Arc(2, 3, Q(1, 2))]
    mono = bare([1, 2, 3], arcs, {1: ZERO, 2: ZERO, 3: Q(5)})
    res = solve_lp2m_ge(mono)
    assert res.feasible
    e = mono.raw_excess(res.flow)
    assert all(e[i] >= mono.demand[i] for i in mono.nodes)


def test_ge_on_a_chain():
    # 1 supplies 2 units, the chain loses half of them on the way
    arcs = [Arc(1, 2, Q(1)), Arc(2, 3, Q(1, 2))]
    ok = bare([1, 2, 3], arcs, {1: Q(-2), 2: ZERO, 3: Q(1)})
    res = solve_lp2m_ge(ok)
    e = ok.raw_excess(res.flow)
    assert all(e[i] >= ok.demand[i] for i in ok.nodes)
    short = bare([1, 2, 3], arcs, {1: Q(-2), 2: ZERO, 3: Q(2)})
    res = solve_lp2m_ge(short)
    assert not res.feasible
    # the certificate prices node 3 at the gain of the chain
    assert res.y == {1: Q(1, 2), 2: Q(1, 2), 3: 1}


def test_combine_keeps_an_exact_g():
    mono = to_monotone(two_by_two())
    g = mono.image([Q(1), Q(1)])
    assert combine_ge_le(mono, g, g) == g


def test_combine_takes_one_generating_term():
    # node 2 must receive 1; g sends nothing, f runs the gain-2 loop once
    arcs = [Arc(1, 2, Q(2)), Arc(2, 1, Q(1))]
    mono = bare([1, 2], arcs, {1: ZERO, 2: Q(1)})
    out = combine_ge_le(mono, [Q(1), Q(1)], [ZERO, ZERO])
    assert out == [1, 1]


def test_solve_examples():
    res = solve_lp2(two_by_two())
    assert isinstance(res, Feasible) and two_by_two().violations(res.x) == []
    lp = LP2Instance(1, 2, {(0, 0): 1, (0, 1): 1}, [-1], [INF, INF])
    res = solve_lp2(lp)
    assert isinstance(res, Infeasible)
    assert res.certificate.y == [-1]
    assert res.certificate.violations(lp) == []


def test_upper_bounds_can_refute():
    lp = two_by_two(upper=(Q(1, 2), 2))
    res = solve_lp2(lp)
    assert isinstance(res, Infeasible) and res.certificate.violations(lp) == []


def test_certificate_checks():
    lp = two_by_two()
    assert FarkasCertificate([0, 1]).violations(lp) == ["y.b = 2 does not exceed the box maximum 4"]
    assert FarkasCertificate([1]).violations(lp) == ["1 multipliers for 2 rows"]
    unbounded = two_by_two(upper=(INF, INF))
    assert FarkasCertificate([0, 1]).violations(unbounded) == [
        "column 0 is unbounded with y.A_c = 1 > 0",
        "column 1 is unbounded with y.A_c = 1 > 0",
    ]


def _seeded(seed):
    rng = random.Random(seed)
    return random_lp2(rng.randint(1, 6), rng.randint(1, 6), seed)


@pytest.mark.parametrize("seed", range(40))
def test_random_lp2_agrees_with_elimination(seed):
    lp = _seeded(seed)
    res = solve_lp2(lp)
    if isinstance(res, Feasible):
        assert lp.violations(res.x) == []
        assert fm_feasible(lp)
    else:
        assert res.certificate.violations(lp) == []
        assert not fm_feasible(lp)


@pytest.mark.parametrize("seed", range(20))
def test_any_feasible_monotone_flow_averages_to_a_solution(seed):
    lp = _seeded(seed)
    mono = to_monotone(lp)
    ge, le = solve_lp2m_ge(mono), solve_lp2m_le(mono)
    if not (ge.feasible and le.feasible):
        return
    f = combine_ge_le(mono, ge.flow, le.flow)
    assert lp.violations(mono.recover(f)) == []
    # swapping every column arc with its mirror keeps the flow feasible
    mirrored = list(f)
    for col in mono.columns:
        if len(col.arcs) == 2:
            k, j = col.arcs
            sk, sj = col.scales
            mirrored[k], mirrored[j] = f[j] * sk / sj, f[k] * sj / sk
    for k, (node, sk) in mono.slack.items():
        a = mono.arcs[k]
        mirrored[sk] = mono.demand[node] - a.gain * mirrored[k]
    assert all(v >= 0 for v in mirrored)
    assert all(v == 0 for v in mono.balance(mirrored).values())
    assert mono.recover(mirrored) == mono.recover(f)


@pytest.mark.parametrize("seed", range(0, 300, 6))
def test_elimination_oracle_matches_highs(seed):
    import numpy as np
    from scipy.optimize import linprog

    from gflow.rational import is_inf

    lp = _seeded(seed)
    A = np.zeros((lp.rows, lp.cols))
    for (r, c), a in lp.entries.items():
        A[r, c] = float(a)
    bounds = [(0, None if is_inf(u) else float(u)) for u in lp.upper]
    res = linprog(np.zeros(lp.cols), A_eq=A, b_eq=[float(b) for b in lp.rhs], bounds=bounds, method="highs")
    assert fm_feasible(lp) == (res.status == 0)
