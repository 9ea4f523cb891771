"""Schemas, queries, foreign keys, databases and the basic predicates over them.

Every value here is immutable.  Constants inside facts are plain strings;
inside query atoms they are wrapped in :class:`Const` so that they can be told
apart from :class:`Var` without guessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union


class UsageError(ValueError):
    """Raised when an operation is called outside its contract."""


@dataclass(frozen=True, order=True)
class RelationSchema:
    name: str
    arity: int
    key_len: int

    def __post_init__(self):
        if not (1 <= self.key_len <= self.arity):
            raise UsageError(f"{self.name}: need 1 <= key <= arity, got [{self.arity},{self.key_len}]")

    def __str__(self):
        return f"{self.name}/{self.arity} key {self.key_len}"


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    value: str

    def __str__(self):
        return repr(self.value)


Term = Union[Var, Const]


def term_sort_key(t: Term):
    return (0, t.name) if isinstance(t, Var) else (1, t.value)


@dataclass(frozen=True)
class Atom:
    rel: RelationSchema
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) != self.rel.arity:
            raise UsageError(f"atom over {self.rel.name} needs {self.rel.arity} terms")

    @property
    def name(self) -> str:
        return self.rel.name

    @property
    def key(self) -> tuple:
        return self.terms[: self.rel.key_len]

    @property
    def nonkey(self) -> tuple:
        return self.terms[self.rel.key_len:]

    def term_at(self, pos: int) -> Term:
        """Term at 1-based position ``pos``."""
        return self.terms[pos - 1]

    @property
    def vars(self) -> frozenset:
        return frozenset(t for t in self.terms if isinstance(t, Var))

    @property
    def key_vars(self) -> frozenset:
        return frozenset(t for t in self.key if isinstance(t, Var))

    @property
    def consts(self) -> frozenset:
        return frozenset(t.value for t in self.terms if isinstance(t, Const))

    def __str__(self):
        k = self.rel.key_len
        parts = [str(t) for t in self.terms]
        return f"{self.name}({', '.join(parts[:k])} | {', '.join(parts[k:])})" if k < len(parts) \
            else f"{self.name}({', '.join(parts)})"

    def __lt__(self, other):
        return self.name < other.name


@dataclass(frozen=True)
class Fact:
    rel: RelationSchema
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.rel.arity:
            raise UsageError(f"fact over {self.rel.name} needs {self.rel.arity} values")

    @property
    def name(self) -> str:
        return self.rel.name

    @property
    def key(self) -> tuple:
        return self.values[: self.rel.key_len]

    @property
    def block_id(self) -> tuple:
        return (self.rel.name, self.key)

    def __str__(self):
        return f"{self.name}({', '.join(self.values)})"

    def sort_key(self):
        return (self.name, self.values)


@dataclass(frozen=True)
class ForeignKey:
    """Unary foreign key ``source[pos] -> target``; target must have key length 1."""

    source: RelationSchema
    pos: int
    target: RelationSchema

    def __post_init__(self):
        if not (1 <= self.pos <= self.source.arity):
            raise UsageError(f"position {self.pos} out of range for {self.source.name}")
        if self.target.key_len != 1:
            raise UsageError(f"foreign key into {self.target.name} needs key length 1")

    @property
    def weak(self) -> bool:
        return self.pos <= self.source.key_len

    @property
    def strong(self) -> bool:
        return not self.weak

    @property
    def trivial(self) -> bool:
        return self.source == self.target and self.pos == 1

    def sort_key(self):
        return (self.source.name, self.pos, self.target.name)

    def __str__(self):
        return f"{self.source.name}[{self.pos}]->{self.target.name}"


def sorted_fks(fks: Iterable[ForeignKey]) -> list:
    return sorted(fks, key=ForeignKey.sort_key)


@dataclass(frozen=True)
class Query:
    atoms: frozenset

    def __init__(self, atoms: Iterable[Atom] = ()):
        atoms = frozenset(atoms)
        names = [a.name for a in atoms]
        if len(names) != len(set(names)):
            raise UsageError("query is not self-join-free")
        object.__setattr__(self, "atoms", atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(sorted(self.atoms, key=lambda a: a.name))

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, a):
        return a in self.atoms

    @cached_property
    def by_name(self) -> dict:
        return {a.name: a for a in self.atoms}

    def atom(self, name: str) -> Atom:
        return self.by_name[name]

    def has(self, name: str) -> bool:
        return name in self.by_name

    @cached_property
    def vars(self) -> frozenset:
        return frozenset().union(*(a.vars for a in self.atoms))

    @cached_property
    def consts(self) -> frozenset:
        return frozenset().union(*(a.consts for a in self.atoms))

    @property
    def relations(self) -> list:
        return [a.rel for a in self]

    def without(self, *names: str) -> "Query":
        return Query(a for a in self.atoms if a.name not in names)

    def __str__(self):
        return "{" + ", ".join(str(a) for a in self) + "}"


@dataclass(frozen=True)
class Database:
    facts: frozenset

    def __init__(self, facts: Iterable[Fact] = ()):
        object.__setattr__(self, "facts", frozenset(facts))

    def __iter__(self):
        return iter(sorted(self.facts, key=Fact.sort_key))

    def __len__(self):
        return len(self.facts)

    def __contains__(self, f):
        return f in self.facts

    def __or__(self, other):
        return Database(self.facts | _facts(other))

    def __sub__(self, other):
        return Database(self.facts - _facts(other))

    def __and__(self, other):
        return Database(self.facts & _facts(other))

    def __xor__(self, other):
        return Database(self.facts ^ _facts(other))

    def __le__(self, other):
        return self.facts <= _facts(other)

    @cached_property
    def by_relation(self) -> dict:
        out: dict = {}
        for f in self.facts:
            out.setdefault(f.name, []).append(f)
        return out

    def of(self, name: str) -> list:
        return self.by_relation.get(name, [])

    @cached_property
    def block_map(self) -> dict:
        out: dict = {}
        for f in self.facts:
            out.setdefault(f.block_id, set()).add(f)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def key_index(self) -> frozenset:
        """(relation name, first key value) pairs present; enough for unary FK targets."""
        return frozenset((f.name, f.values[0]) for f in self.facts)

    @cached_property
    def adom(self) -> frozenset:
        return frozenset(v for f in self.facts for v in f.values)

    def restrict(self, names: Iterable[str]) -> "Database":
        names = set(names)
        return Database(f for f in self.facts if f.name in names)

    def __str__(self):
        return "{" + ", ".join(str(f) for f in self) + "}"


def _facts(x) -> frozenset:
    return x.facts if isinstance(x, Database) else frozenset(x)


def key_equal(a: Fact, b: Fact) -> bool:
    return a.name == b.name and a.key == b.key


def blocks(db: Database) -> list:
    return [db.block_map[k] for k in sorted(db.block_map)]


def satisfies_pk(db: Database) -> bool:
    return all(len(b) == 1 for b in db.block_map.values())


def dangling(db: Database, f: Fact, fk: ForeignKey) -> bool:
    if f.name != fk.source.name:
        raise UsageError(f"{f} is not a {fk.source.name}-fact")
    return (fk.target.name, f.values[fk.pos - 1]) not in db.key_index


def dangling_any(db: Database, f: Fact, fks: Iterable[ForeignKey]) -> bool:
    return any(dangling(db, f, fk) for fk in fks if fk.source.name == f.name)


def satisfies_fk(db: Database, fks: Iterable[ForeignKey]) -> bool:
    fks = list(fks)
    return not any(dangling(db, f, fk) for fk in fks for f in db.of(fk.source.name))


def consistent(db: Database, fks: Iterable[ForeignKey]) -> bool:
    return satisfies_pk(db) and satisfies_fk(db, fks)


# ---------------------------------------------------------------- valuations

def match_atom(atom: Atom, fact: Fact, theta: Mapping) -> dict | None:
    """Extend ``theta`` so that it maps ``atom`` onto ``fact``; None if impossible."""
    if atom.name != fact.name:
        return None
    out = dict(theta)
    for t, v in zip(atom.terms, fact.values):
        if isinstance(t, Const):
            if t.value != v:
                return None
        else:
            seen = out.get(t)
            if seen is None:
                out[t] = v
            elif seen != v:
                return None
    return out


def apply_valuation(atom: Atom, theta: Mapping) -> Fact:
    return Fact(atom.rel, tuple(t.value if isinstance(t, Const) else theta[t] for t in atom.terms))


def valuations(db: Database, atoms: Sequence[Atom], theta: Mapping | None = None) -> Iterator[dict]:
    """All valuations mapping every atom of ``atoms`` into ``db``, extending ``theta``."""
    theta = dict(theta or {})
    todo = list(atoms)
    if not todo:
        yield theta
        return
    # most-constrained atom first
    todo.sort(key=lambda a: -sum(1 for t in a.terms if isinstance(t, Const) or t in theta))
    first, rest = todo[0], todo[1:]
    for f in db.of(first.name):
        ext = match_atom(first, f, theta)
        if ext is not None:
            yield from valuations(db, rest, ext)


def query_eval(db: Database, q: Query) -> tuple:
    """(True, witness) if some valuation maps q into db, else (False, None)."""
    for theta in valuations(db, list(q)):
        return True, theta
    return False, None


def satisfies(db: Database, q: Query) -> bool:
    return query_eval(db, q)[0]


def freeze(q: Query, prefix: str = "") -> Database:
    """Canonical database of q: every variable becomes a constant named after it."""
    return Database(apply_valuation(a, {v: prefix + v.name for v in a.vars}) for a in q)


def is_about(fks: Iterable[ForeignKey], q: Query) -> tuple:
    """(ok, diagnostics) telling whether fks is about q."""
    problems = []
    fks = list(fks)
    for fk in fks:
        for r in (fk.source, fk.target):
            if not q.has(r.name):
                problems.append(f"{fk}: relation {r.name} does not occur in the query")
            elif q.atom(r.name).rel != r:
                problems.append(f"{fk}: signature of {r.name} differs from the query's")
    if problems:
        return False, problems
    frozen = freeze(q, prefix="\x00")
    for fk in fks:
        for f in frozen.of(fk.source.name):
            if dangling(frozen, f, fk):
                problems.append(f"{fk}: the query atom {q.atom(fk.source.name)} is dangling")
    return not problems, problems


def substitute(q: Query, vars: Sequence[Var], consts: Sequence[str]) -> Query:
    if len(vars) != len(consts):
        raise UsageError("substitution needs sequences of equal length")
    mapping = {}
    for v, c in zip(vars, consts):
        if v not in q.vars:
            raise UsageError(f"variable {v} does not occur in the query")
        mapping[v] = Const(c.value if isinstance(c, Const) else c)
    return Query(Atom(a.rel, tuple(mapping.get(t, t) for t in a.terms)) for a in q)


def substitute_map(q: Query, mapping: Mapping) -> Query:
    """Like :func:`substitute` but silently ignores variables absent from q."""
    m = {v: (c if isinstance(c, Const) else Const(c)) for v, c in mapping.items()}
    return Query(Atom(a.rel, tuple(m.get(t, t) for t in a.terms)) for a in q)
