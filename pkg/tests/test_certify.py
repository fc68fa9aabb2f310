import random

import pytest

from fixtures import f1, f2, f5
from gflow.certify import StepLimit, check_optimality_std, check_optimality_uncap, onaga_solve, onaga_value
from gflow.core import Arc, UncapInstance
from gflow.generate import random_uncap
from gflow.rational import INF, ONE, ZERO, Q


def kinds(problems):
    return [(p.kind, p.where) for p in problems]


def test_f1_certificate():
    f, mu = [Q(2), Q(2), ZERO], {1: Q(2), 2: Q(2), "t": ONE}
    assert check_optimality_uncap(f1(), f, mu) == []


def test_unit_labels_break_slackness_on_f1():
    mu = {i: ONE for i in f1().nodes}
    assert kinds(check_optimality_uncap(f1(), [Q(2), Q(2), ZERO], mu)) == [("slackness", 1)]


def test_zero_flow_leaves_excess_on_f1():
    mu = {1: Q(2), 2: Q(2), "t": ONE}
    assert kinds(check_optimality_uncap(f1(), [ZERO] * 3, mu)) == [("excess", 1)]


def test_label_checks_come_first():
    bad = check_optimality_uncap(f1(), [ZERO] * 3, {1: Q(2), 2: INF, "t": Q(2)})
    assert kinds(bad) == [("label", 2), ("label", "t")]
    assert kinds(check_optimality_uncap(f1(), [ZERO], {})) == [("shape", None)]


def test_dual_violation():
    mu = {1: Q(8), 2: Q(2), "t": ONE}
    assert ("dual", 2) in kinds(check_optimality_uncap(f1(), [Q(2), Q(2), ZERO], mu))


def test_onaga_examples():
    f, mu, _ = onaga_solve(f1())
    assert (f, mu) == ([2, 2, 0], {1: 2, 2: 2, "t": 1})
    f, mu, _ = onaga_solve(f5())
    assert f == [1, 0, 1, 0, 1]
    assert mu == {1: 4, 2: 4, 3: 1, "t": 1}
    assert onaga_value(f5()) == Q(5, 4)


def test_onaga_without_demand():
    inst = UncapInstance([1, "t"], "t", [Arc(1, "t", Q(1, 3))], {1: ZERO}, bound=3)
    assert onaga_solve(inst)[0] == [0]


def test_onaga_step_cap():
    with pytest.raises(StepLimit):
        onaga_solve(f5(), step_cap=0)


@pytest.mark.parametrize("seed", range(40))
def test_onaga_output_certifies(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 6)
    inst = random_uncap(n, rng.randint(n - 1, 14), seed)
    f, mu, _ = onaga_solve(inst)
    assert check_optimality_uncap(inst, f, mu) == []


# ---- capacitated form --------------------------------------------------------


def test_f2_certificate():
    std = f2()
    assert check_optimality_std(std, [Q(3), Q(3)], {1: Q(1, 2), "t": ONE}) == []


def test_std_examples():
    std = f2()
    # t -> 1 has relabeled gain 2 and carries nothing
    assert kinds(check_optimality_std(std, [ZERO, ZERO], {1: Q(1, 2), "t": ONE})) == [("dual", 0)]
    assert kinds(check_optimality_std(std, [Q(4), Q(4)], {1: Q(1, 2), "t": ONE})) == [("capacity", 0)]
    assert kinds(check_optimality_std(std, [Q(3), Q(1)], {1: Q(1, 2), "t": ONE})) == [("excess", 1)]
    assert kinds(check_optimality_std(std, [Q(3), Q(3)], {1: Q(2), "t": ONE})) == [
        ("slackness", 0),
        ("slackness", 1),
    ]
    assert kinds(check_optimality_std(std, [ZERO, Q(1)], {1: Q(1, 2), "t": ONE})) == [
        ("dual", 0),
        ("feasibility", 1),
    ]


def test_infinite_labels():
    from gflow.transform import StdArc, StdInstance

    # 1 holds a gain-2 loop with itself through 2; it can feed t through one capped arc
    arcs = [StdArc(1, 2, Q(2), INF), StdArc(2, 1, Q(1), INF), StdArc(1, "t", Q(1), Q(5))]
    std = StdInstance([1, 2, "t"], "t", arcs)
    mu = {1: INF, 2: INF, "t": ONE}
    assert check_optimality_std(std, [Q(5), Q(10), Q(5)], mu) == []
    assert kinds(check_optimality_std(std, [Q(5), Q(10), Q(4)], mu)) == [("slackness", 2)]
