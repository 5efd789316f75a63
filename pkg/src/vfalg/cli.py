"""The ``vf`` command line.

Every command reads a model file (``--model PATH``) and prints either
aligned human-readable text or, with ``--format records``, one JSON object
per line with the fields ``command``, ``name``, ``status`` and ``payload``.

Exit status: 0 on success, 1 when a mandatory check fails, 2 for invalid
input (usage, parse or domain errors).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import parse_model
from .errors import ParseError, VFError
from .exprparse import format_sfn, parse_state
from .verify import parse_suite, suite_passed, vx_verify
from .vertex import vx_contour, vx_embed, vx_greens, vx_npoint, vx_mode, vx_twisted_product, vx_Y

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class _Output:
    def __init__(self, command, fmt, stream):
        self.command = command
        self.fmt = fmt
        self.stream = stream
        self.rows = []

    def add(self, name, status, payload):
        self.rows.append((name, status, payload))

    def flush(self):
        if self.fmt == "records":
            for name, status, payload in self.rows:
                rec = {"command": self.command, "name": name, "status": status,
                       "payload": payload}
                print(json.dumps(rec, ensure_ascii=False), file=self.stream)
            return
        width = max((len(n) for n, _, _ in self.rows), default=0)
        for name, status, payload in self.rows:
            if status in ("ok", ""):
                print(f"{name}: {payload}" if name else payload, file=self.stream)
            else:
                print(f"{name.ljust(width)}  {status:<5}  {payload}".rstrip(), file=self.stream)


def _states(text, model):
    parts = [p.strip() for p in text.split(";")]
    if not text.strip() or not all(parts):
        raise ParseError("--states takes a ';'-separated list of state expressions")
    return [parse_state(p, model) for p in parts]


def _state_lines(u):
    """``(slot text, coefficient text)`` for every term of a state vector."""
    from .exprparse import format_basis
    from .vertex import _assign_key

    rows = []
    for assign in sorted(u.terms, key=_assign_key):
        slots = " (x) ".join(f"[{format_basis(u.model, b) or '1'}]@x{v}" for v, b in assign)
        rows.append((slots, format_sfn(u.terms[assign])))
    return rows


def _emit_state(out, u):
    rows = _state_lines(u)
    if not rows:
        out.add("", "ok", "0")
    for slots, coeff in rows:
        out.add(slots, "ok", coeff)


def cmd_ope(args, model, out):
    a = parse_state(args.a, model)
    b = parse_state(args.b, model)
    series = vx_Y(a, b, args.order)
    lines = series.lines()
    if not lines:
        out.add("", "ok", "0")
    for label, coeff in lines:
        out.add(label, "ok", coeff)
    for n in args.n or ():
        out.add(f"a_({n})b", "ok", str(vx_mode(a, n, b)))


def cmd_modes(args, model, out):
    a = parse_state(args.a, model)
    b = parse_state(args.b, model)
    if args.n:
        wanted = sorted(set(args.n), reverse=True)
        cutoff = max(-n - 1 for n in wanted)
        series = vx_Y(a, b, cutoff)
    else:
        series = vx_Y(a, b, 0)
        wanted = sorted((-e[0] - 1 for e in series.terms), reverse=True)
    for n in wanted:
        out.add(f"a_({n})b", "ok", str(series.coefficient((-n - 1,))))


def cmd_product(args, model, out):
    u = vx_twisted_product(vx_embed(parse_state(args.a, model), 1),
                           vx_embed(parse_state(args.b, model), 2))
    _emit_state(out, u)


def cmd_npoint(args, model, out):
    _emit_state(out, vx_npoint(_states(args.states, model)))


def cmd_greens(args, model, out):
    if args.states:
        states = _states(args.states, model)
    else:
        states = [parse_state(args.a, model)] * args.n
    out.add("", "ok", format_sfn(vx_greens(states)))


def cmd_integrate(args, model, out):
    states = _states(args.states, model)
    u = vx_npoint(states)
    _emit_state(out, vx_contour(u, args.over, args.around))


def cmd_verify(args, model, out, config):
    names, expect = parse_suite(args.suite)
    expect = expect or config.expectation
    reports = vx_verify(names, model, degree=args.degree, series_cutoff=args.order,
                        seed=args.seed, expect=expect, samples=args.samples)
    for rep in reports:
        payload = f"{rep.checked} cases"
        if rep.inputs:
            payload += f", {rep.inputs}"
        for k, v in rep.witness.items():
            payload += f"; {k}={v}"
        if rep.detail:
            payload += f"; {rep.detail}"
        out.add(rep.name, rep.status, payload)
    return EXIT_OK if suite_passed(reports) else EXIT_CHECK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vf", description="Exact computations in bicharacter-twisted vertex algebras.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, metavar="PATH", help="model file")
    common.add_argument("--format", choices=("human", "records"), default="human")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ope", parents=[common], help="print Y(a, x) b up to x^order")
    p.add_argument("--a", required=True, metavar="EXPR")
    p.add_argument("--b", required=True, metavar="EXPR")
    p.add_argument("--order", type=int, default=2, metavar="N")
    p.add_argument("--n", type=int, action="append", metavar="N",
                   help="also print the mode a_(N) b (repeatable)")

    p = sub.add_parser("modes", parents=[common], help="print the modes a_(n) b")
    p.add_argument("--a", required=True, metavar="EXPR")
    p.add_argument("--b", required=True, metavar="EXPR")
    p.add_argument("--n", type=int, action="append", metavar="N",
                   help="mode index (repeatable); default: every n >= -1 with a nonzero mode")

    p = sub.add_parser("product", parents=[common], help="the twisted product a@x1 o b@x2")
    p.add_argument("--a", required=True, metavar="EXPR")
    p.add_argument("--b", required=True, metavar="EXPR")

    p = sub.add_parser("npoint", parents=[common], help="left-associated n-point product")
    p.add_argument("--states", required=True, metavar="LIST", help="';'-separated states")

    p = sub.add_parser("greens", parents=[common], help="Green's function of n states")
    p.add_argument("--states", metavar="LIST", help="';'-separated states")
    p.add_argument("--n", type=int, metavar="N", help="use N copies of --a instead")
    p.add_argument("--a", default="PHI{1,0}", metavar="EXPR")

    p = sub.add_parser("integrate", parents=[common],
                       help="residue of the n-point product in x_over around x_around")
    p.add_argument("--states", required=True, metavar="LIST", help="';'-separated states")
    p.add_argument("--over", type=int, default=1, metavar="I")
    p.add_argument("--around", type=int, default=2, metavar="J")

    p = sub.add_parser("verify", parents=[common], help="run exact verification checks")
    p.add_argument("--suite", default="all", metavar="LIST",
                   help="comma-separated checks, 'all', and optionally expect:braided")
    p.add_argument("--degree", type=int, default=3, metavar="N")
    p.add_argument("--order", type=int, default=6, metavar="N", help="series cutoff")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None, metavar="N",
                   help="random triples per sampled check")
    return parser


_COMMANDS = {
    "ope": cmd_ope, "modes": cmd_modes, "product": cmd_product, "npoint": cmd_npoint,
    "greens": cmd_greens, "integrate": cmd_integrate,
}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if args.command == "greens" and not args.states and args.n is None:
        print("vf greens: give --states or --n", file=stderr)
        return EXIT_INPUT
    out = _Output(args.command, args.format, stdout)
    try:
        config = parse_model(args.model)
    except ParseError as exc:
        print(f"vf {args.command}: {args.model}: {exc}", file=stderr)
        return EXIT_INPUT
    except VFError as exc:
        print(f"vf {args.command}: {exc}", file=stderr)
        return EXIT_INPUT
    try:
        model = config.build()
        if args.command == "verify":
            status = cmd_verify(args, model, out, config)
        else:
            _COMMANDS[args.command](args, model, out)
            status = EXIT_OK
    except VFError as exc:
        print(f"vf {args.command}: {exc}", file=stderr)
        return EXIT_INPUT
    out.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
