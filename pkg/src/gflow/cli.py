"""``gflow`` command line.

Exit codes: 0 solved or feasible, 1 infeasible or a failed check,
2 unbounded, 3 bad input, 4 internal assertion failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .certify import check_optimality_std, check_optimality_uncap
from .core import UncapInstance
from .enhanced import enhanced_continuous_scaling
from .generate import random_lp2, random_std, random_uncap
from .lp2 import FarkasCertificate, Feasible, LP2Instance, solve_lp2
from .scaling import continuous_scaling
from .textio import ParseError, Solution, format_solution, parse_instance, parse_solution, serialize
from .transform import StdInstance, UnboundedStd, solve_standard, uncapacitate

OK, INFEASIBLE, UNBOUNDED, BAD_INPUT, INTERNAL = 0, 1, 2, 3, 4


class Finished(Exception):
    def __init__(self, code: int):
        self.code = code


def _read(path: str):
    try:
        return parse_instance(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise click.FileError(path, str(err)) from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _flow_lines(arcs, flow) -> list:
    return [(a.tail, a.head, x) for a, x in zip(arcs, flow)]


def _unbounded(err: UnboundedStd, std: StdInstance) -> Solution:
    def ends(ks):
        return [(std.arcs[k].tail, std.arcs[k].head) for k in ks]

    return Solution("unbounded", cycle=ends(err.cycle), path=ends(err.path))


def _lp2_solution(lp: LP2Instance, certificate: bool) -> tuple[Solution, int]:
    res = solve_lp2(lp)
    if isinstance(res, Feasible):
        return Solution("feasible", x=dict(enumerate(res.x))), OK
    y = dict(enumerate(res.certificate.y)) if certificate else {}
    return Solution("infeasible", y=y), INFEASIBLE


@click.group()
def cli():
    """Exact generalized maximum flow and two-variable-per-column feasibility."""


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--algorithm", type=click.Choice(["weak", "strong"]), default="strong", show_default=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="write one JSON record per iteration")
@click.option("--check", is_flag=True, help="certify the answer before printing it")
def solve(path, algorithm, trace_path, check):
    """Solve an uncap, std or lp2 instance."""
    inst = _read(path)
    if isinstance(inst, LP2Instance):
        sol, code = _lp2_solution(inst, certificate=True)
        _write(None, format_solution(sol))
        raise Finished(code)
    sink = open(trace_path, "w", encoding="utf-8") if trace_path else None

    def hook(row):
        sink.write(json.dumps(row, default=str) + "\n")

    try:
        if isinstance(inst, UncapInstance):
            solver = enhanced_continuous_scaling if algorithm == "strong" else continuous_scaling
            res = solver(inst, inst.initial_flow, trace=hook if sink else None)
            if check:
                problems = check_optimality_uncap(inst, res.flow, res.labels)
                assert not problems, [str(p) for p in problems]
            sol = Solution("optimal", res.value, _flow_lines(inst.arcs, res.flow), dict(res.labels))
        else:
            try:
                res = solve_standard(inst, algorithm, trace=hook if sink else None)
            except UnboundedStd as err:
                _write(None, format_solution(_unbounded(err, inst)))
                raise Finished(UNBOUNDED) from None
            if check:
                problems = check_optimality_std(inst, res.flow, res.labels)
                assert not problems, [str(p) for p in problems]
            sol = Solution("optimal", res.value, _flow_lines(inst.arcs, res.flow), dict(res.labels))
    finally:
        if sink:
            sink.close()
    _write(None, format_solution(sol))


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--certificate", is_flag=True, help="print the Farkas multipliers when infeasible")
def lp2(path, certificate):
    """Decide feasibility of an lp2 instance."""
    inst = _read(path)
    if not isinstance(inst, LP2Instance):
        raise click.UsageError("expected 'problem lp2'")
    sol, code = _lp2_solution(inst, certificate)
    _write(None, format_solution(sol))
    raise Finished(code)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "out", type=click.Path(dir_okay=False), help="output file (default: stdout)")
def transform(path, out):
    """Rewrite a std instance as an equivalent uncap instance."""
    std = _read(path)
    if not isinstance(std, StdInstance):
        raise click.UsageError("expected 'problem std'")
    try:
        inst, _init, _ = uncapacitate(std)
    except UnboundedStd as err:
        _write(None, format_solution(_unbounded(err, std)))
        raise Finished(UNBOUNDED) from None
    _write(out, serialize(inst))


@cli.command()
@click.option("--kind", type=click.Choice(["uncap", "std", "lp2"]), required=True)
@click.option("--nodes", type=click.IntRange(min=1), required=True, help="nodes, or rows for lp2")
@click.option("--arcs", type=click.IntRange(min=0), required=True, help="arcs, or columns for lp2")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--bits", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("-o", "out", type=click.Path(dir_okay=False), help="output file (default: stdout)")
def gen(kind, nodes, arcs, seed, bits, out):
    """Write a seeded random instance."""
    make = {"uncap": random_uncap, "std": random_std, "lp2": random_lp2}[kind]
    _write(out, serialize(make(nodes, arcs, seed, bits)))


@cli.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.argument("solution", type=click.Path(exists=True, dir_okay=False))
def check(instance, solution):
    """Certify a solution file against an instance; exit 0 iff it passes."""
    inst = _read(instance)
    sol = parse_solution(Path(solution).read_text(encoding="utf-8"))
    problems = [str(p) for p in _verify(inst, sol)]
    for p in problems:
        click.echo(p)
    if problems:
        raise Finished(INFEASIBLE)
    click.echo("ok")


def _verify(inst, sol: Solution) -> list:
    if isinstance(inst, LP2Instance):
        if sol.status == "feasible":
            if sorted(sol.x) != list(range(inst.cols)):
                return [f"expected one x line per column, got {len(sol.x)}"]
            return inst.violations([sol.x[c] for c in range(inst.cols)])
        if sol.status == "infeasible":
            if not sol.y:
                return ["no certificate given (rerun lp2 with --certificate)"]
            return FarkasCertificate([sol.y.get(r, 0) for r in range(inst.rows)]).violations(inst)
        return [f"status {sol.status} does not apply to lp2"]
    if sol.status != "optimal":
        return [f"cannot certify status {sol.status}"]
    f = sol.flow_vector(inst.arcs)
    if isinstance(inst, UncapInstance):
        return check_optimality_uncap(inst, f, sol.labels)
    return check_optimality_std(inst, f, sol.labels)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="gflow", standalone_mode=False)
    except Finished as done:
        return done.code
    except click.exceptions.Exit as done:
        return done.exit_code
    except click.Abort:
        return BAD_INPUT
    except (click.ClickException, ParseError, ValueError) as err:
        click.echo(f"error: {err.format_message() if isinstance(err, click.ClickException) else err}", err=True)
        return BAD_INPUT
    except AssertionError as err:
        click.echo(f"internal error: {err}", err=True)
        return INTERNAL
    return OK


if __name__ == "__main__":
    sys.exit(main())
