"""Line-oriented text formats for instances and solutions.

Every file starts with ``problem uncap|std|lp2``.  Rationals are written
``p`` or ``p/q``; node ids that look like integers are read as ints and
everything else as strings.  ``#`` starts a comment.  ``serialize`` and
``parse_instance`` are exact inverses on every instance they accept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Arc, UncapInstance
from .generate import fit_bound, gain_product
from .lp2 import LP2Instance
from .rational import INF, ZERO, fmt, is_inf, parse_bound, parse_rational
from .transform import StdArc, StdInstance


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        where = f"line {line}" if line else "input"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason


def node_id(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        words = raw.split("#", 1)[0].split()
        if words:
            yield no, words


def _number(no: int, text: str, what: str, allow_inf: bool = False):
    try:
        return parse_bound(text) if allow_inf else parse_rational(text)
    except ValueError as err:
        raise ParseError(no, f"bad {what}: {err}") from None


def _count(no: int, text: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(no, f"{what} must be a nonnegative integer") from None
    if value < 0:
        raise ParseError(no, f"{what} must be a nonnegative integer")
    return value


def _expect(no: int, words: list, shape: str) -> None:
    want = shape.split()
    ok = len(words) == len(want) and all(w.startswith("<") or w == x for w, x in zip(want, words))
    if not ok:
        raise ParseError(no, f"expected '{shape}', got '{' '.join(words)}'")


def _problem_kind(text: str) -> tuple[str, list]:
    lines = list(_lines(text))
    if not lines or lines[0][1][0] != "problem":
        raise ParseError(lines[0][0] if lines else 0, "file must start with 'problem <kind>'")
    no, words = lines[0]
    _expect(no, words, "problem <kind>")
    if words[1] not in ("uncap", "std", "lp2"):
        raise ParseError(no, f"unknown problem kind '{words[1]}'")
    return words[1], lines[1:]


@dataclass
class _Graph:
    nodes: list = field(default_factory=list)
    seen: set = field(default_factory=set)
    sink: object = None
    count: int | None = None
    count_line: int = 0
    bound: int | None = None

    def add(self, v):
        if v not in self.seen:
            self.seen.add(v)
            self.nodes.append(v)


def _graph_directive(g: _Graph, no: int, words: list) -> bool:
    head = words[0]
    if head == "nodes":
        _expect(no, words, "nodes <n>")
        g.count, g.count_line = _count(no, words[1], "node count"), no
    elif head == "sink":
        _expect(no, words, "sink <id>")
        g.sink = node_id(words[1])
    elif head == "bound":
        _expect(no, words, "bound <int>")
        g.bound = _count(no, words[1], "bound")
        if g.bound == 0:
            raise ParseError(no, "bound must be positive")
    else:
        return False
    return True


def _finish_graph(g: _Graph) -> None:
    if g.sink is None:
        raise ParseError(0, "missing 'sink <id>'")
    g.add(g.sink)
    if g.count is not None and g.count != len(g.nodes):
        raise ParseError(g.count_line, f"declared {g.count} nodes but found {len(g.nodes)}")


def _gain(no: int, text: str):
    gain = _number(no, text, "gain")
    if gain <= 0:
        raise ParseError(no, "gains must be > 0")
    return gain


def parse_uncap(lines) -> UncapInstance:
    g = _Graph()
    demand: dict = {}
    arcs: list[tuple] = []
    inits: list[tuple] = []
    for no, words in lines:
        if _graph_directive(g, no, words):
            continue
        head = words[0]
        if head == "node":
            _expect(no, words, "node <id> demand <rat>")
            v = node_id(words[1])
            g.add(v)
            demand[v] = _number(no, words[3], "demand")
        elif head == "arc":
            if len(words) == 6:
                _expect(no, words, "arc <tail> <head> gain <rat> aux")
            else:
                _expect(no, words, "arc <tail> <head> gain <rat>")
            u, v = node_id(words[1]), node_id(words[2])
            g.add(u)
            g.add(v)
            arcs.append((no, u, v, _gain(no, words[4]), len(words) == 6))
        elif head == "init":
            _expect(no, words, "init <tail> <head> <rat>")
            x = _number(no, words[3], "initial flow")
            if x < 0:
                raise ParseError(no, "initial flow must be nonnegative")
            inits.append((no, node_id(words[1]), node_id(words[2]), x))
        else:
            raise ParseError(no, f"unknown directive '{head}'")
    _finish_graph(g)
    t = g.sink
    has_sink_arc = {u for _no, u, v, _gain, _aux in arcs if v == t}
    for v in g.nodes:
        if v != t and v not in has_sink_arc:
            raise ParseError(0, f"node {v} has no arc to the sink; every node needs one (instance contract)")
    flow = [ZERO] * len(arcs)
    used: set = set()
    for no, u, v, x in inits:
        k = next((k for k, a in enumerate(arcs) if a[1] == u and a[2] == v and k not in used), None)
        if k is None:
            raise ParseError(no, f"no arc {u} -> {v} left for this initial flow")
        used.add(k)
        flow[k] = x
    bound = g.bound
    if bound is None:
        product = gain_product(a[3] for a in arcs if not a[4])
        bound = fit_bound(product, [demand.get(v, ZERO) for v in g.nodes if v != t])
    built = [Arc(u, v, gain, aux) for _no, u, v, gain, aux in arcs]
    inst = UncapInstance(g.nodes, t, built, demand, bound=bound, initial_flow=flow)
    problems = inst.invariant_violations()
    if problems:
        raise ParseError(0, "; ".join(problems))
    return inst


def parse_std(lines) -> StdInstance:
    g = _Graph()
    arcs = []
    for no, words in lines:
        if _graph_directive(g, no, words):
            continue
        head = words[0]
        if head == "node":
            _expect(no, words, "node <id>")
            g.add(node_id(words[1]))
        elif head == "arc":
            _expect(no, words, "arc <tail> <head> gain <rat> cap <cap>")
            u, v = node_id(words[1]), node_id(words[2])
            g.add(u)
            g.add(v)
            cap = _number(no, words[6], "capacity", allow_inf=True)
            if not is_inf(cap) and cap < 0:
                raise ParseError(no, "capacities must be nonnegative")
            arcs.append(StdArc(u, v, _gain(no, words[4]), cap))
        else:
            raise ParseError(no, f"unknown directive '{head}'")
    _finish_graph(g)
    return StdInstance(g.nodes, g.sink, arcs, g.bound or 1)


def parse_lp2(lines) -> LP2Instance:
    size = None
    entries: dict = {}
    rhs: dict = {}
    upper: dict = {}
    for no, words in lines:
        head = words[0]
        if head == "rows":
            _expect(no, words, "rows <n> cols <m>")
            size = (_count(no, words[1], "row count"), _count(no, words[3], "column count"))
            continue
        if size is None:
            raise ParseError(no, "'rows <n> cols <m>' must come first")
        rows, cols = size

        def index(text, top, what):
            k = _count(no, text, what)
            if k >= top:
                raise ParseError(no, f"{what} {k} out of range")
            return k

        if head == "entry":
            _expect(no, words, "entry <col> <row> <rat>")
            c, r = index(words[1], cols, "column"), index(words[2], rows, "row")
            a = _number(no, words[3], "entry")
            if a == 0:
                raise ParseError(no, "entries must be nonzero")
            if (r, c) in entries:
                raise ParseError(no, f"duplicate entry for column {c}, row {r}")
            if sum(1 for _r, cc in entries if cc == c) == 2:
                raise ParseError(no, f"column {c} already has two nonzeros")
            entries[(r, c)] = a
        elif head == "rhs":
            _expect(no, words, "rhs <row> <rat>")
            rhs[index(words[1], rows, "row")] = _number(no, words[2], "rhs")
        elif head == "ub":
            _expect(no, words, "ub <col> <cap>")
            u = _number(no, words[2], "upper bound", allow_inf=True)
            if not is_inf(u) and u < 0:
                raise ParseError(no, "upper bounds must be nonnegative")
            upper[index(words[1], cols, "column")] = u
        else:
            raise ParseError(no, f"unknown directive '{head}'")
    if size is None:
        raise ParseError(0, "missing 'rows <n> cols <m>'")
    rows, cols = size
    return LP2Instance(
        rows, cols, entries, [rhs.get(r, ZERO) for r in range(rows)], [upper.get(c, INF) for c in range(cols)]
    )


def parse_instance(text: str):
    kind, lines = _problem_kind(text)
    return {"uncap": parse_uncap, "std": parse_std, "lp2": parse_lp2}[kind](lines)


def _init_lines(arcs, flow) -> list[str]:
    # parallel arcs take initial flows in order, so zeros before a later
    # nonzero on the same endpoints must be written out
    out = []
    for k, a in enumerate(arcs):
        later = any(flow[j] and (b.tail, b.head) == (a.tail, a.head) for j, b in enumerate(arcs[k:], k))
        if later:
            out.append(f"init {a.tail} {a.head} {fmt(flow[k])}")
    return out


def serialize(inst) -> str:
    if isinstance(inst, UncapInstance):
        out = ["problem uncap", f"nodes {inst.n}", f"sink {inst.sink}", f"bound {inst.bound}"]
        out += [f"node {v} demand {fmt(inst.demand[v])}" for v in inst.nodes]
        for a in inst.arcs:
            out.append(f"arc {a.tail} {a.head} gain {fmt(a.gain)}" + (" aux" if a.auxiliary else ""))
        out += _init_lines(inst.arcs, inst.initial_flow)
    elif isinstance(inst, StdInstance):
        out = ["problem std", f"nodes {len(inst.nodes)}", f"sink {inst.sink}", f"bound {inst.bound}"]
        out += [f"node {v}" for v in inst.nodes]
        out += [f"arc {a.tail} {a.head} gain {fmt(a.gain)} cap {fmt(a.capacity)}" for a in inst.arcs]
    elif isinstance(inst, LP2Instance):
        out = ["problem lp2", f"rows {inst.rows} cols {inst.cols}"]
        out += [f"entry {c} {r} {fmt(a)}" for (r, c), a in sorted(inst.entries.items(), key=lambda e: e[0][::-1])]
        out += [f"rhs {r} {fmt(b)}" for r, b in enumerate(inst.rhs)]
        out += [f"ub {c} {fmt(u)}" for c, u in enumerate(inst.upper)]
    else:
        raise TypeError(f"cannot serialize {type(inst).__name__}")
    return "\n".join(out) + "\n"


# ---- solutions --------------------------------------------------------------


@dataclass
class Solution:
    status: str
    value: object = None
    flow: list = field(default_factory=list)  # (tail, head, amount)
    labels: dict = field(default_factory=dict)
    x: dict = field(default_factory=dict)
    y: dict = field(default_factory=dict)
    cycle: list = field(default_factory=list)  # (tail, head)
    path: list = field(default_factory=list)

    def flow_vector(self, arcs) -> list:
        """Flow values matched to ``arcs`` in order, parallel arcs taking lines in turn."""
        queue = list(self.flow)
        out = []
        for a in arcs:
            k = next((k for k, (u, v, _x) in enumerate(queue) if (u, v) == (a.tail, a.head)), None)
            if k is None:
                raise ParseError(0, f"solution has no flow for arc {a.tail} -> {a.head}")
            out.append(queue.pop(k)[2])
        if queue:
            u, v, _x = queue[0]
            raise ParseError(0, f"solution has a flow for unknown arc {u} -> {v}")
        return out


def format_solution(sol: Solution) -> str:
    out = [f"status {sol.status}"]
    if sol.value is not None:
        out.append(f"value {fmt(sol.value)}")
    out += [f"flow {u} {v} {fmt(x)}" for u, v, x in sol.flow]
    out += [f"label {i} {fmt(m)}" for i, m in sol.labels.items()]
    out += [f"x {c} {fmt(v)}" for c, v in sol.x.items()]
    out += [f"y {r} {fmt(v)}" for r, v in sol.y.items()]
    out += [f"cycle {u} {v}" for u, v in sol.cycle]
    out += [f"path {u} {v}" for u, v in sol.path]
    return "\n".join(out) + "\n"


def parse_solution(text: str) -> Solution:
    sol = None
    for no, words in _lines(text):
        head = words[0]
        if head == "status":
            _expect(no, words, "status <status>")
            sol = Solution(words[1])
            continue
        if sol is None:
            raise ParseError(no, "solution must start with 'status <status>'")
        if head == "value":
            _expect(no, words, "value <rat>")
            sol.value = _number(no, words[1], "value")
        elif head == "flow":
            _expect(no, words, "flow <tail> <head> <rat>")
            sol.flow.append((node_id(words[1]), node_id(words[2]), _number(no, words[3], "flow")))
        elif head == "label":
            _expect(no, words, "label <id> <rat>")
            sol.labels[node_id(words[1])] = _number(no, words[2], "label", allow_inf=True)
        elif head in ("x", "y"):
            _expect(no, words, f"{head} <index> <rat>")
            target = sol.x if head == "x" else sol.y
            target[_count(no, words[1], "index")] = _number(no, words[2], head)
        elif head in ("cycle", "path"):
            _expect(no, words, f"{head} <tail> <head>")
            getattr(sol, head).append((node_id(words[1]), node_id(words[2])))
        else:
            raise ParseError(no, f"unknown directive '{head}'")
    if sol is None:
        raise ParseError(0, "empty solution")
    return sol
