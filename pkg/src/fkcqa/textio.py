"""Problem and database text formats.

Problem files::

    schema N/3 key 1
    schema O/1 key 1
    query N(x, 'c', y), O(y)
    fk N[3] -> O

Bare lowercase identifiers in a query are variables; quoted strings and
numerals are constants.  Database files hold one fact per line, e.g.
``N(a, 'c', b)``; every term there is a constant.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import Atom, Const, Database, Fact, ForeignKey, Query, RelationSchema, UsageError, Var

RESERVED = ("⊥", "⊤", "◦")

_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_TOKEN = re.compile(r"""\s*(?:(?P<str>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")|(?P<num>-?\d+(?:\.\d+)?)|"""
                    r"""(?P<name>[^\s(),'"\[\]#]+'*)|(?P<punct>[(),]))""")


class ParseError(UsageError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}" + (f", column {col}" if col is not None else "") if line else ""
        super().__init__(f"{where}: {msg}" if where else msg)


@dataclass
class ProblemSpec:
    schemas: dict = field(default_factory=dict)
    query: Query = None
    fks: list = field(default_factory=list)


def _strip_comment(line: str) -> str:
    out, quote = [], None
    for ch in line:
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
            out.append(ch)
        elif ch == "#":
            break
        else:
            out.append(ch)
    return "".join(out)


def _lines(text: str) -> list:
    # str.splitlines would also split on form feeds etc. inside quoted values
    return text.replace("\r\n", "\n").split("\n")


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def _tokens(text: str, lineno: int, offset: int):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", lineno, offset + pos + 1)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), offset + start + 1))
        pos = m.end()
    return out


def _check_reserved(value: str, lineno, col, reserved=RESERVED):
    if reserved and value.startswith(reserved):
        raise ParseError(f"identifier {value!r} uses a reserved prefix", lineno, col)


def _parse_atoms(toks, lineno, schemas, ground: bool, reserved=RESERVED):
    atoms, i = [], 0
    while i < len(toks):
        kind, val, col = toks[i]
        if kind != "name":
            raise ParseError(f"expected a relation name, got {val!r}", lineno, col)
        if val not in schemas:
            raise ParseError(f"undeclared relation {val}", lineno, col)
        rel = schemas[val]
        if i + 1 >= len(toks) or toks[i + 1][1] != "(":
            raise ParseError("expected '('", lineno, col)
        i += 2
        terms = []
        while True:
            if i >= len(toks):
                raise ParseError("unterminated atom", lineno)
            k, v, c = toks[i]
            if k == "str":
                v = _unquote(v)
                _check_reserved(v, lineno, c, reserved)
                terms.append(v if ground else Const(v))
            elif k == "num":
                terms.append(v if ground else Const(v))
            elif k == "name":
                _check_reserved(v, lineno, c, reserved)
                if ground:
                    terms.append(v)
                elif re.fullmatch(r"[a-z_][A-Za-z0-9_']*", v):
                    terms.append(Var(v))
                else:
                    raise ParseError(f"{v!r} is neither a variable (lowercase) nor a quoted constant", lineno, c)
            else:
                raise ParseError(f"expected a term, got {v!r}", lineno, c)
            i += 1
            if i >= len(toks):
                raise ParseError("unterminated atom", lineno)
            if toks[i][1] == ")":
                i += 1
                break
            if toks[i][1] != ",":
                raise ParseError("expected ',' or ')'", lineno, toks[i][2])
            i += 1
        if len(terms) != rel.arity:
            raise ParseError(f"{rel.name} expects {rel.arity} terms, got {len(terms)}", lineno, col)
        atoms.append(Fact(rel, tuple(terms)) if ground else Atom(rel, tuple(terms)))
        if i < len(toks):
            if toks[i][1] != ",":
                raise ParseError("expected ',' between atoms", lineno, toks[i][2])
            i += 1
    return atoms


def parse_problem(text: str) -> ProblemSpec:
    spec = ProblemSpec()
    query_lines, fk_lines = [], []
    for lineno, raw in enumerate(_lines(text), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        word = line.split(None, 1)[0]
        rest = line[len(word):]
        if word == "schema":
            m = re.fullmatch(rf"\s*({_NAME})\s*/\s*(\d+)\s+key\s+(\d+)\s*", rest)
            if not m:
                raise ParseError("expected 'schema NAME/ARITY key K'", lineno)
            name, n, k = m.group(1), int(m.group(2)), int(m.group(3))
            if name in spec.schemas:
                raise ParseError(f"relation {name} declared twice", lineno)
            try:
                spec.schemas[name] = RelationSchema(name, n, k)
            except UsageError as e:
                raise ParseError(str(e), lineno) from None
        elif word == "query":
            query_lines.append((lineno, rest, len(raw) - len(raw.lstrip()) + len(word)))
        elif word == "fk":
            fk_lines.append((lineno, rest))
        else:
            raise ParseError(f"unknown directive {word!r}", lineno, 1)
    if not query_lines:
        raise ParseError("no query given")
    atoms = []
    for lineno, rest, off in query_lines:
        atoms += _parse_atoms(_tokens(rest, lineno, off), lineno, spec.schemas, ground=False)
    if not atoms:
        raise ParseError("empty query")
    names = [a.name for a in atoms]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ParseError(f"relation(s) {', '.join(dup)} used twice: only self-join-free queries are in scope")
    spec.query = Query(atoms)
    for lineno, rest in fk_lines:
        m = re.fullmatch(rf"\s*({_NAME})\s*\[\s*(\d+)\s*\]\s*->\s*({_NAME})\s*", rest)
        if not m:
            raise ParseError("expected 'fk NAME[I] -> NAME'", lineno)
        src, pos, tgt = m.group(1), int(m.group(2)), m.group(3)
        for r in (src, tgt):
            if r not in spec.schemas:
                raise ParseError(f"undeclared relation {r}", lineno)
        if spec.schemas[tgt].key_len != 1:
            raise ParseError(f"{tgt} has key length {spec.schemas[tgt].key_len}; a unary foreign key needs 1", lineno)
        try:
            spec.fks.append(ForeignKey(spec.schemas[src], pos, spec.schemas[tgt]))
        except UsageError as e:
            raise ParseError(str(e), lineno) from None
    return spec


def parse_db(text: str, schemas: dict, allow_reserved: bool = False) -> Database:
    facts = []
    for lineno, raw in enumerate(_lines(text), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        toks = _tokens(line, lineno, 0)
        facts += _parse_atoms(toks, lineno, schemas, ground=True, reserved=() if allow_reserved else RESERVED)
    return Database(facts)


def format_value(v: str) -> str:
    # bare only when the value lexes back as exactly one name or number token
    m = _TOKEN.match(v)
    if m and m.end() == len(v) and m.lastgroup in ("name", "num") and m.group(m.lastgroup) == v:
        return v
    return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_fact(f: Fact) -> str:
    return f"{f.name}({', '.join(format_value(v) for v in f.values)})"


def serialize_db(db: Database) -> str:
    return "".join(format_fact(f) + "\n" for f in db)


def format_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    return "'" + t.value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_atom(a: Atom) -> str:
    return f"{a.name}({', '.join(format_term(t) for t in a.terms)})"


def serialize_problem(spec: ProblemSpec) -> str:
    lines = [f"schema {r.name}/{r.arity} key {r.key_len}" for r in spec.schemas.values()]
    lines.append("query " + ", ".join(format_atom(a) for a in spec.query))
    lines += [f"fk {fk.source.name}[{fk.pos}] -> {fk.target.name}" for fk in spec.fks]
    return "\n".join(lines) + "\n"


def problem(text: str):
    """Shorthand returning (query, fks) for a problem text."""
    spec = parse_problem(text)
    return spec.query, spec.fks
