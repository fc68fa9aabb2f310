import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import f1, f2, f5
from gflow.core import UncapInstance
from gflow.generate import random_lp2, random_std, random_uncap
from gflow.lp2 import LP2Instance
from gflow.rational import INF, Q
from gflow.textio import ParseError, Solution, format_solution, parse_instance, parse_solution, serialize
from gflow.transform import StdInstance


def shape(inst):
    if isinstance(inst, UncapInstance):
        arcs = [(a.tail, a.head, a.gain, a.auxiliary) for a in inst.arcs]
        return (list(inst.nodes), inst.sink, arcs, dict(inst.demand), inst.bound, list(inst.initial_flow))
    if isinstance(inst, StdInstance):
        return (inst.nodes, inst.sink, [(a.tail, a.head, a.gain, a.capacity) for a in inst.arcs], inst.bound)
    assert isinstance(inst, LP2Instance)
    return (inst.rows, inst.cols, inst.entries, inst.rhs, inst.upper)


@pytest.mark.parametrize("make", [f1, f2, f5])
def test_fixture_round_trip(make):
    inst = make()
    assert shape(parse_instance(serialize(inst))) == shape(inst)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["uncap", "std", "lp2"]), st.integers(2, 7), st.integers(1, 14), st.integers(0, 10**6))
def test_generated_round_trip(kind, n, m, seed):
    make = {"uncap": random_uncap, "std": random_std, "lp2": random_lp2}[kind]
    inst = make(n, m, seed)
    text = serialize(inst)
    assert shape(parse_instance(text)) == shape(inst)
    assert serialize(parse_instance(text)) == text


def test_hand_written_uncap():
    text = """problem uncap
    # F1 without a bound line
    sink t
    node 1 demand -2
    arc 1 2 gain 1
    arc 2 t gain 1/2
    arc 1 t gain 1/4
    """
    inst = parse_instance(text)
    assert shape(inst)[:4] == shape(f1())[:4]
    assert inst.bound == 8


def test_parallel_arcs_take_initial_flows_in_order():
    text = "problem uncap\nsink t\nnode 1 demand -1\narc 1 t gain 1\narc 1 t gain 1/2\ninit 1 t 0\ninit 1 t 1\n"
    assert list(parse_instance(text).initial_flow) == [0, 1]


@pytest.mark.parametrize(
    "text, line, words",
    [
        ("problem uncap\nsink t\narc 1 t gain 0\n", 3, "gains must be > 0"),
        ("problem uncap\nsink t\narc 1 2 gain 1\narc 2 t gain 1\n", 0, "node 1 has no arc to the sink"),
        ("problem uncap\nnode 1 demand 1\n", 0, "missing 'sink <id>'"),
        ("problem uncap\nsink t\nfoo 1\n", 3, "unknown directive 'foo'"),
        ("problem uncap\nsink t\narc 1 t gain x\n", 3, "bad gain"),
        ("problem uncap\nsink t\nnodes 3\narc 1 t gain 1\n", 3, "declared 3 nodes but found 2"),
        ("problem uncap\nsink t\narc 1 t gain 1\ninit 2 t 1\n", 4, "no arc 2 -> t left"),
        ("problem flow\n", 1, "unknown problem kind"),
        ("sink t\n", 1, "file must start with 'problem <kind>'"),
        ("", 0, "file must start"),
        ("problem std\nsink t\narc 1 t gain 1 cap -1\n", 3, "capacities must be nonnegative"),
        ("problem lp2\nentry 0 0 1\n", 2, "'rows <n> cols <m>' must come first"),
        ("problem lp2\nrows 1 cols 1\nentry 0 1 1\n", 3, "row 1 out of range"),
        ("problem lp2\nrows 3 cols 1\nentry 0 0 1\nentry 0 1 1\nentry 0 2 1\n", 5, "already has two nonzeros"),
        ("problem lp2\nrows 1 cols 1\nentry 0 0 0\n", 3, "entries must be nonzero"),
    ],
)
def test_parse_errors(text, line, words):
    with pytest.raises(ParseError) as err:
        parse_instance(text)
    assert err.value.line == line
    assert words in str(err.value)


def test_lp2_defaults():
    lp = parse_instance("problem lp2\nrows 2 cols 1\nentry 0 1 -3/2\n")
    assert (lp.entries, lp.rhs, lp.upper) == ({(1, 0): Q(-3, 2)}, [0, 0], [INF])


def test_solution_round_trip():
    sol = Solution(
        "optimal",
        Q(5, 4),
        [(1, 2, Q(1)), ("a", "t", Q(1, 3))],
        {1: Q(4), "t": Q(1), "z": INF},
        {0: Q(1)},
        {1: Q(-1)},
        [(1, 2)],
        [(2, "t")],
    )
    assert parse_solution(format_solution(sol)) == sol
    with pytest.raises(ParseError):
        parse_solution("value 1\n")
    with pytest.raises(ParseError):
        parse_solution("")


def test_rationals_past_the_int_digit_limit():
    # weak scaling traces carry labels with thousands of digits
    x = Q(3) ** 9000 / Q(7) ** 8000
    sol = Solution("optimal", x, [], {1: x})
    assert parse_solution(format_solution(sol)) == sol


def test_flow_vector_matches_arcs():
    sol = parse_solution("status optimal\nflow 2 t 2\nflow 1 2 2\nflow 1 t 0\n")
    assert sol.flow_vector(f1().arcs) == [2, 2, 0]
    with pytest.raises(ParseError):
        parse_solution("status optimal\nflow 1 2 2\n").flow_vector(f1().arcs)
