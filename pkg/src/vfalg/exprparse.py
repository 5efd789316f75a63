"""Text grammar shared by S-expressions and state expressions.

Both languages use the same operator grammar::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := ("+" | "-") unary | power
    power := atom ("^" ["-"] INT)?
    atom  := INT | "q" | "x" INT | "(" expr ")"
           | "E{" int ("," int)* "}" | "A{" INT "," INT "}" | "PHI{" INT "," INT "}"

Variables ``x<n>`` belong to S-expressions; ``E``, ``A`` and ``PHI`` belong to
state expressions.  Formatting functions emit text in the same grammar, so
printing and re-parsing is the identity on canonical values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DomainError, ParseError, UsageError
from .scalar import ONE, ScalarQ
from .sfield import (
    FactorKey, SingularFn, _divide, _divides, _mono_exp,
)

_TOKEN = re.compile(r"\s*(?:(\d+)|(PHI|E|A|q|x\d+)|([-+*/^(){},]))")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "name", "op", "end"
    text: str
    pos: int


def tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(Token("int", m.group(1), start))
        elif m.group(2):
            tokens.append(Token("name", m.group(2), start))
        else:
            tokens.append(Token("op", m.group(3), start))
        pos = m.end()
    tokens.append(Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.k = 0

    @property
    def tok(self):
        return self.tokens[self.k]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, 1, tok.pos + 1)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.k += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def integer(self, signed=False):
        neg = signed and self.accept("-")
        if self.tok.kind != "int":
            raise self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        v = int(self.tok.text)
        self.k += 1
        return -v if neg else v

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok
            self.k += 1
            rhs = self.term()
            node = ("add" if op.text == "+" else "sub", op.pos, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok
            self.k += 1
            rhs = self.unary()
            node = ("mul" if op.text == "*" else "div", op.pos, node, rhs)
        return node

    def unary(self):
        tok = self.tok
        if self.accept("-"):
            return ("neg", tok.pos, self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        tok = self.tok
        if self.accept("^"):
            node = ("pow", tok.pos, node, self.integer(signed=True))
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "int":
            self.k += 1
            return ("num", tok.pos, int(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.k += 1
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.k += 1
            if tok.text == "q":
                return ("q", tok.pos)
            if tok.text.startswith("x"):
                idx = int(tok.text[1:])
                if idx < 1:
                    raise self.error("variable indices start at 1", tok)
                return ("x", tok.pos, idx)
            self.expect("{")
            if tok.text == "E":
                coords = [self.integer(signed=True)]
                while self.accept(","):
                    coords.append(self.integer(signed=True))
                self.expect("}")
                return ("E", tok.pos, tuple(coords))
            a = self.integer()
            self.expect(",")
            b = self.integer()
            self.expect("}")
            return (tok.text, tok.pos, a, b)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_ast(text):
    return _Parser(text).parse()


def _walk(node):
    yield node
    for child in node[2:]:
        if isinstance(child, tuple) and child and isinstance(child[0], str):
            yield from _walk(child)


# -- factoring numerators --------------------------------------------------

def _sign_abs(c: ScalarQ):
    """Split a single-term scalar into (is_negative, absolute value)."""
    if c.is_single_term() and c._num and c._num[0][1] < 0:
        return True, -c
    return False, c


def factor_numerator(num, varset):
    """Write a Laurent numerator as ``unit * monomial * prod factor**power``.

    Returns ``(unit, monomial, {FactorKey: power})``; raises DomainError when a
    factor outside the admissible family ``x_i - q^n x_j`` remains.
    """
    if not num:
        raise DomainError("zero has no factorization")
    vars_ = sorted({v for m in num for v, _ in m})
    lo = min(c.q_span()[0] for c in num.values())
    hi = max(c.q_span()[1] for c in num.values())
    span = hi - lo
    dens = {c._den for c in num.values()}
    bound = span + sum(len(d) - 1 for d in dens) + 1
    powers = {}
    for a in range(len(vars_)):
        for b in range(a + 1, len(vars_)):
            i, j = vars_[a], vars_[b]
            for n in sorted(range(-bound, bound + 1), key=abs):
                key = FactorKey(i, j, n)
                while len(num) > 1 and _divides(num, key):
                    num = _divide(num, key)
                    powers[key] = powers.get(key, 0) + 1
    if len(num) != 1:
        rest = SingularFn(num, (), frozenset(varset))
        raise DomainError(
            f"denominator factor {format_sfn(rest)} is not a product of admissible "
            "factors (x_i - q^n*x_j)")
    (mono, unit), = num.items()
    return unit, mono, powers


# -- evaluation into S ------------------------------------------------------

def _sfn_vars(node):
    return {n[2] for n in _walk(node) if n[0] == "x"}


def _eval_sfn(node, varset, text):
    kind = node[0]
    if kind == "num":
        return SingularFn.const(node[2], varset)
    if kind == "q":
        return SingularFn.const(ScalarQ.q_power(1), varset)
    if kind == "x":
        return SingularFn.var(node[2], varset)
    if kind in ("E", "A", "PHI"):
        raise ParseError(f"state generator {kind}{{...}} is not allowed in an S-expression",
                         1, node[1] + 1)
    if kind == "neg":
        return -_eval_sfn(node[2], varset, text)
    if kind == "pow":
        base = _eval_sfn(node[2], varset, text)
        try:
            return base ** node[3]
        except (DomainError, ZeroDivisionError) as exc:
            raise ParseError(str(exc), 1, node[1] + 1) from None
    lhs = _eval_sfn(node[2], varset, text)
    rhs = _eval_sfn(node[3], varset, text)
    if kind == "add":
        return lhs + rhs
    if kind == "sub":
        return lhs - rhs
    if kind == "mul":
        return lhs * rhs
    try:
        return lhs / rhs
    except (DomainError, ZeroDivisionError) as exc:
        raise ParseError(str(exc), 1, node[1] + 1) from None


def parse_sfn(text, varset=None):
    """Parse an S-expression into a canonical :class:`SingularFn`.

    ``varset`` defaults to the variables mentioned in the text.
    """
    ast = parse_ast(text)
    used = _sfn_vars(ast)
    vs = frozenset(used if varset is None else varset)
    if not used <= vs:
        extra = sorted(used - vs)
        raise ParseError(f"variable x{extra[0]} is outside the variable set {sorted(vs)}")
    return _eval_sfn(ast, vs, text)


# -- evaluation into H(M) ----------------------------------------------------

def _is_scalar_node(node):
    return all(n[0] in ("num", "q", "neg", "add", "sub", "mul", "div", "pow") for n in _walk(node))


def _eval_scalar(node):
    kind = node[0]
    if kind == "num":
        return ScalarQ(node[2])
    if kind == "q":
        return ScalarQ.q_power(1)
    if kind == "neg":
        return -_eval_scalar(node[2])
    if kind == "pow":
        base = _eval_scalar(node[2])
        if not base and node[3] < 0:
            raise ParseError("division by zero", 1, node[1] + 1)
        return base ** node[3]
    a, b = _eval_scalar(node[2]), _eval_scalar(node[3])
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if not b:
        raise ParseError("division by zero", 1, node[1] + 1)
    return a / b


def _eval_state(node, model):
    kind = node[0]
    pos = node[1] + 1
    if _is_scalar_node(node):
        return model.one() * _eval_scalar(node)
    try:
        if kind == "x":
            raise ParseError(f"variable x{node[2]} is not allowed in a state expression", 1, pos)
        if kind == "E":
            if model.rank == 0:
                raise ParseError("E{...} needs a lattice part; this model has only free fields",
                                 1, pos)
            return model.e(node[2])
        if kind == "A":
            return model.a(node[2], node[3])
        if kind == "PHI":
            return model.phi(node[2], node[3])
    except UsageError as exc:
        raise ParseError(str(exc), 1, pos) from None
    if kind == "neg":
        return -_eval_state(node[2], model)
    if kind == "pow":
        if node[3] < 0:
            raise ParseError("negative powers of states are not defined", 1, pos)
        return _eval_state(node[2], model) ** node[3]
    if kind == "div":
        if not _is_scalar_node(node[3]):
            raise ParseError("states can only be divided by scalars", 1, pos)
        d = _eval_scalar(node[3])
        if not d:
            raise ParseError("division by zero", 1, pos)
        return _eval_state(node[2], model) * d.inverse()
    lhs = _eval_state(node[2], model)
    rhs = _eval_state(node[3], model)
    if kind == "add":
        return lhs + rhs
    if kind == "sub":
        return lhs - rhs
    return lhs * rhs


def parse_state(text, model):
    """Parse a state expression into a canonical HMElement of ``model``."""
    return _eval_state(parse_ast(text), model)


def parse_scalar(text):
    ast = parse_ast(text)
    if not _is_scalar_node(ast):
        raise ParseError("expected a scalar expression in q")
    return _eval_scalar(ast)


# -- formatting ---------------------------------------------------------------

def _join_terms(items):
    """``items``: list of (negative, body); returns a signed sum."""
    if not items:
        return "0"
    neg, body = items[0]
    out = ("-" if neg else "") + body
    for neg, body in items[1:]:
        out += (" - " if neg else " + ") + body
    return out


def _coeff_term(c, body):
    """Signed text for ``c * body`` where ``body`` may be empty."""
    neg, a = _sign_abs(c)
    if a.is_single_term():
        if not body:
            return neg, str(a)
        if a.is_one:
            return neg, body
        return neg, f"{a}*{body}"
    if not body:
        return False, f"({c})"
    return False, f"({c})*{body}"


def _mono_text(mono):
    return "*".join(f"x{v}" if e == 1 else f"x{v}^{e}" for v, e in mono)


def format_sfn(f: SingularFn) -> str:
    if f.is_zero:
        return "0"
    vs = sorted(f.varset | f.used_vars())

    def order(mono):
        return (-sum(e for _, e in mono), [-_mono_exp(mono, v) for v in vs])

    items = [_coeff_term(f.num[m], _mono_text(m)) for m in sorted(f.num, key=order)]
    num = _join_terms(items)
    if not f.den:
        return num
    den = "*".join(str(k) + (f"^{m}" if m > 1 else "") for k, m in f.den)
    if len(items) > 1:
        num = f"({num})"
    return f"{num}/({den})"


def format_basis(model, b) -> str:
    from .hopf import LATTICE

    parts = []
    if any(b.alpha):
        parts.append("E{" + ",".join(str(x) for x in b.alpha) + "}")
    gens = list(b.gens)
    k = 0
    while k < len(gens):
        g = gens[k]
        mult = 1
        while k + mult < len(gens) and gens[k + mult] == g:
            mult += 1
        kind, idx, order = g
        text = f"A{{{idx},{order}}}" if kind == LATTICE else f"PHI{{{idx},{order}}}"
        parts.append(text + (f"^{mult}" if mult > 1 else ""))
        k += mult
    return "*".join(parts)


def basis_sort_key(b):
    return (b.degree, b.gens, b.alpha)


def format_state(u) -> str:
    items = [_coeff_term(u.terms[b], format_basis(u.model, b))
             for b in sorted(u.terms, key=basis_sort_key)]
    return _join_terms(items)
