"""Model files.

A model file has one ``[section]`` header followed by ``key = value`` lines;
``#`` starts a comment.  Recognised keys::

    kind       = lattice | freefield | mixed
    mode       = classical | quantum          (default classical)
    gram       = 2 1; 1 2                     (rows separated by ';')
    nfields    = 2                            (optional, inferred from prop)
    prop[i][j] = 1/((x1-x2)^2)                (entries default to 0)
    cocycle    = standard | trivial           (default standard)
    max_degree = 12
    expect     = symmetric | braided          (default chosen from the model)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError, UsageError, VFError
from .exprparse import parse_sfn
from .hopf import Model, make_model
from .sfield import SingularFn

_KEYS = ("kind", "mode", "gram", "nfields", "cocycle", "max_degree", "expect")
_PROP = re.compile(r"prop\[\s*(\d+)\s*\]\[\s*(\d+)\s*\]$")
_SECTION = re.compile(r"\[\s*([A-Za-z_][\w.-]*)\s*\]$")


@dataclass
class ModelConfig:
    name: str
    kind: str
    mode: str = "classical"
    gram: tuple = ()
    propagator: tuple = ()
    cocycle: str = "standard"
    max_degree: int | None = None
    expect: str | None = None
    source: str = "<string>"
    lines: dict = field(default_factory=dict)

    def build(self) -> Model:
        return make_model(self.gram, self.propagator, self.mode, self.cocycle, self.max_degree)

    @property
    def expectation(self):
        """``braided`` unless the model is known to be symmetric."""
        if self.expect:
            return self.expect
        return "braided" if self.mode == "quantum" else "symmetric"


def _strip_comment(line):
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _parse_int(text, line, col, what):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {text!r}", line, col) from None


def _parse_gram(value, line, col):
    rows = []
    offset = col
    for chunk in value.split(";"):
        entries = []
        for m in re.finditer(r"\S+", chunk):
            entries.append(_parse_int(m.group(), line, offset + m.start(), "Gram entry"))
        if not entries:
            raise ParseError("empty Gram row", line, offset)
        rows.append(tuple(entries))
        offset += len(chunk) + 1
    n = len(rows)
    for k, row in enumerate(rows, 1):
        if len(row) != n:
            raise ParseError(f"Gram row {k} has {len(row)} entries, expected {n}", line, col)
    for i in range(n):
        for j in range(i):
            if rows[i][j] != rows[j][i]:
                raise ParseError(
                    f"Gram matrix is not symmetric: entry ({i + 1},{j + 1}) = {rows[i][j]} "
                    f"but ({j + 1},{i + 1}) = {rows[j][i]}", line, col)
    return tuple(rows)


def parse_model_text(text, source="<string>") -> ModelConfig:
    """Parse and validate model-file text."""
    name = None
    values = {}
    where = {}
    props = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        if body.startswith("["):
            m = _SECTION.match(body)
            if not m:
                raise ParseError("malformed section header", lineno, indent + 1)
            if name is not None:
                raise ParseError("only one [section] is allowed", lineno, indent + 1)
            name = m.group(1)
            continue
        if name is None:
            raise ParseError("expected a [section] header before settings", lineno, indent + 1)
        if "=" not in body:
            raise ParseError("expected 'key = value'", lineno, indent + 1)
        key, _, value = body.partition("=")
        key = key.strip()
        vcol = indent + len(body) - len(body.partition("=")[2].lstrip()) + 1
        value = value.strip()
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno, vcol)
        m = _PROP.match(key)
        if m:
            ij = (int(m.group(1)), int(m.group(2)))
            if ij in props:
                raise ParseError(f"duplicate entry {key}", lineno, indent + 1)
            props[ij] = (value, lineno, vcol)
            continue
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, indent + 1)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, indent + 1)
        values[key] = value
        where[key] = (lineno, vcol)
    if name is None:
        raise ParseError("empty model file: expected a [section] header", 1, 1)

    def pos(key):
        return where.get(key, (None, None))

    kind = values.get("kind")
    if kind is None:
        raise ParseError("missing required key 'kind'")
    if kind not in ("lattice", "freefield", "mixed"):
        raise ParseError(f"kind must be lattice, freefield or mixed, got {kind!r}", *pos("kind"))
    mode = values.get("mode", "classical")
    if mode not in ("classical", "quantum"):
        raise ParseError(f"mode must be classical or quantum, got {mode!r}", *pos("mode"))
    cocycle = values.get("cocycle", "standard")
    if cocycle not in ("standard", "trivial"):
        raise ParseError(f"cocycle must be standard or trivial, got {cocycle!r}", *pos("cocycle"))
    expect = values.get("expect")
    if expect is not None and expect not in ("symmetric", "braided"):
        raise ParseError(f"expect must be symmetric or braided, got {expect!r}", *pos("expect"))
    max_degree = None
    if "max_degree" in values:
        max_degree = _parse_int(values["max_degree"], *pos("max_degree"), "max_degree")
        if max_degree < 1:
            raise ParseError("max_degree must be positive", *pos("max_degree"))

    gram = ()
    if "gram" in values:
        gram = _parse_gram(values["gram"], *pos("gram"))
        for i, row in enumerate(gram):
            if row[i] % 2:
                raise ParseError(
                    f"diagonal entry ({i + 1},{i + 1}) = {row[i]} is odd; odd lattices "
                    "give vertex superalgebras, which are not supported", *pos("gram"))
    if kind in ("lattice", "mixed") and not gram:
        raise ParseError(f"a {kind} model needs a 'gram' entry")
    if kind == "freefield" and gram:
        raise ParseError("a freefield model takes no 'gram' entry", *pos("gram"))

    nfields = 0
    if "nfields" in values:
        nfields = _parse_int(values["nfields"], *pos("nfields"), "nfields")
        if nfields < 1:
            raise ParseError("nfields must be positive", *pos("nfields"))
    if props:
        biggest = max(max(ij) for ij in props)
        if nfields and biggest > nfields:
            (i, j), (_, ln, col) = max(props.items(), key=lambda kv: max(kv[0]))
            raise ParseError(f"prop[{i}][{j}] exceeds nfields = {nfields}", ln, 1)
        nfields = max(nfields, biggest)
    if kind == "lattice" and (props or nfields):
        raise ParseError("a lattice model takes no propagator entries")
    if kind in ("freefield", "mixed") and not nfields:
        raise ParseError(f"a {kind} model needs propagator entries prop[i][j]")
    table = [[SingularFn.zero((1, 2)) for _ in range(nfields)] for _ in range(nfields)]
    for (i, j), (text_value, ln, col) in sorted(props.items()):
        if i < 1 or j < 1:
            raise ParseError("propagator indices start at 1", ln, 1)
        try:
            f = parse_sfn(text_value, (1, 2))
        except ParseError as exc:
            column = None if exc.column is None else col + exc.column - 1
            raise ParseError(f"prop[{i}][{j}]: {exc.message}", ln, column) from None
        except VFError as exc:
            raise ParseError(f"prop[{i}][{j}]: {exc}", ln, col) from None
        if mode == "classical" and any(k.n for k, _ in f.den):
            raise ParseError(f"prop[{i}][{j}]: q-shifted poles need mode = quantum", ln, col)
        table[i - 1][j - 1] = f
    config = ModelConfig(name, kind, mode, gram, tuple(tuple(r) for r in table), cocycle,
                         max_degree, expect, source)
    try:
        config.build()
    except UsageError as exc:
        raise ParseError(str(exc)) from None
    return config


def parse_model(path) -> ModelConfig:
    """Read and validate a model file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    except OSError as exc:
        raise UsageError(f"cannot read model file {path}: {exc.strerror}") from None
    return parse_model_text(text, str(path))
