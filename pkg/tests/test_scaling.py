import random

import pytest

from fixtures import f1, f5
from gflow.certify import check_optimality_uncap, onaga_solve
from gflow.core import Arc, Constants, UncapInstance, flow_value
from gflow.generate import random_uncap
from gflow.initialize import initialize
from gflow.rational import INF, ZERO, Q
from gflow.scaling import (
    Extended,
    ScalingState,
    Stepped,
    augment_on_path,
    compute_N,
    continuous_scaling,
    delta_i,
    elementary_step,
    find_extension,
    find_tight_path,
    iterate_weak,
    potential_psi,
)


def f5_state():
    inst = f5()
    r = initialize(inst, inst.initial_flow)
    return ScalingState(inst, Constants.of(inst), list(r.flow), dict(r.labels), r.delta)


def test_f5_start_has_every_node_below_the_low_threshold():
    s = f5_state()
    assert (s.f, s.delta) == ([0, 0, 1, 0, 0], 1)
    assert compute_N(s) == {1, 2, 3, "t"}
    assert [delta_i(s, i) for i in (1, 2, 3)] == [16, INF, INF]


def test_f5_first_iteration_is_a_node_limited_step():
    s = f5_state()
    out = iterate_weak(s)
    assert isinstance(out, Stepped) and out.alpha == 16
    assert s.delta == Q(1, 16)
    assert s.T0 == s.T == {1}
    assert potential_psi(s) == 13
    assert compute_N(s) == {2, 3, "t"}


def test_f5_extension_then_augmentation():
    s = f5_state()
    elementary_step(s)
    r = find_extension(s)
    assert (r.arc, r.forward, r.head) == (0, True, 2)
    s.T.add(r.head)
    p, q, path = find_tight_path(s, compute_N(s))
    assert (p, q, [x.arc for x in path]) == (1, 2, [0])
    augment_on_path(s, p, q, path)
    assert s.f == [Q(1, 16), 0, 1, 0, 0]
    e = s.excesses()
    assert (e[1], e[2], e[3]) == (Q(15, 16), Q(1, 16), 0)


def test_iterate_weak_prefers_extension_when_no_target_is_in_t():
    s = f5_state()
    elementary_step(s)
    assert isinstance(iterate_weak(s), Extended)


def test_continuous_scaling_examples():
    res = continuous_scaling(f1(), [ZERO] * 3)
    assert res.value == 1
    assert res.violations == []
    res = continuous_scaling(f5(), f5().initial_flow)
    # frozen from the label-correcting oracle
    assert res.value == Q(5, 4)
    assert check_optimality_uncap(f5(), res.flow, res.labels) == []


def test_no_demand_means_zero_value():
    inst = UncapInstance(
        [1, 2, "t"],
        "t",
        [Arc(1, 2, Q(3)), Arc(2, 1, Q(1, 4)), Arc(1, "t", Q(1)), Arc(2, "t", Q(1))],
        {1: ZERO, 2: ZERO},
        bound=12,
    )
    res = continuous_scaling(inst)
    assert res.value == 0
    assert res.delta_start == 0 and res.bounds_ok is None


def test_psi_is_zero_without_t0():
    s = f5_state()
    assert potential_psi(s) == 0


@pytest.mark.parametrize("seed", range(12))
def test_random_weak_runs_are_optimal_and_audited(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    inst = random_uncap(n, rng.randint(n - 1, 9), seed)
    rows = []
    res = continuous_scaling(inst, inst.initial_flow, trace=rows.append)
    assert res.violations == []
    assert check_optimality_uncap(inst, res.flow, res.labels) == []
    f, mu, _ = onaga_solve(inst)
    assert res.value == flow_value(inst, f)
    assert res.bounds_ok in (True, None)
    assert len(rows) == res.counters.total
    c = res.counters
    assert c.total == c.shrinking + c.expanding + c.neutral
    assert c.total == c.augmentations + c.extensions + c.steps
    assert all(r["violations"] == [] for r in rows)
    deltas = [Q(r["delta"]) for r in rows]
    assert deltas == sorted(deltas, reverse=True)
