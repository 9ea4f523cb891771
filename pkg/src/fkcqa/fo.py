"""First-order formulas, their evaluation, and the rewriting for the fk-free base case."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .analysis import attack_graph, is_acyclic
from .model import Atom, Const, Database, Query, UsageError, Var, match_atom, substitute_map


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    terms: tuple

    def __str__(self):
        return f"{self.name}({', '.join(map(_t, self.terms))})"


@dataclass(frozen=True)
class Eq(Formula):
    left: object
    right: object

    def __str__(self):
        return f"{_t(self.left)} = {_t(self.right)}"


@dataclass(frozen=True)
class And(Formula):
    parts: tuple

    def __str__(self):
        return "(" + " & ".join(map(str, self.parts)) + ")" if self.parts else "true"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Exists(Formula):
    vars: tuple
    body: Formula

    def __str__(self):
        return f"EXISTS {', '.join(v.name for v in self.vars)}. {self.body}" if self.vars else str(self.body)


@dataclass(frozen=True)
class Forall(Formula):
    vars: tuple
    body: Formula

    def __str__(self):
        return f"FORALL {', '.join(v.name for v in self.vars)}. {self.body}" if self.vars else str(self.body)


def _t(t):
    return t.name if isinstance(t, Var) else repr(t.value)


def _val(t, env):
    return env[t] if isinstance(t, Var) else t.value


def evaluate(phi: Formula, db: Database, env: dict | None = None, domain=None) -> bool:
    """Active-domain evaluation."""
    env = env or {}
    if domain is None:
        domain = sorted(db.adom | _consts(phi))
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Rel):
        vals = tuple(_val(t, env) for t in phi.terms)
        return any(f.values == vals for f in db.of(phi.name))
    if isinstance(phi, Eq):
        return _val(phi.left, env) == _val(phi.right, env)
    if isinstance(phi, And):
        return all(evaluate(p, db, env, domain) for p in phi.parts)
    if isinstance(phi, Implies):
        return not evaluate(phi.left, db, env, domain) or evaluate(phi.right, db, env, domain)
    if isinstance(phi, (Exists, Forall)):
        want_all = isinstance(phi, Forall)
        for combo in itertools.product(domain, repeat=len(phi.vars)):
            ok = evaluate(phi.body, db, {**env, **dict(zip(phi.vars, combo))}, domain)
            if want_all and not ok:
                return False
            if not want_all and ok:
                return True
        return want_all
    raise TypeError(phi)


def _consts(phi) -> set:
    if isinstance(phi, Rel):
        return {t.value for t in phi.terms if isinstance(t, Const)}
    if isinstance(phi, Eq):
        return {t.value for t in (phi.left, phi.right) if isinstance(t, Const)}
    if isinstance(phi, And):
        return set().union(*(_consts(p) for p in phi.parts)) if phi.parts else set()
    if isinstance(phi, Implies):
        return _consts(phi.left) | _consts(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return _consts(phi.body)
    return set()


# ------------------------------------------------------------------ base case

def unattacked_atom(q: Query) -> Atom:
    g = attack_graph(q)
    for a in q:
        if not g.incoming(a.name):
            return a
    raise UsageError("attack graph is cyclic")


def require_acyclic(q: Query):
    if not is_acyclic(attack_graph(q))[0]:
        raise UsageError("the base case needs an acyclic attack graph")


def base_certain(q: Query, db: Database) -> bool:
    """Is q true in every primary-key repair of db?  q must have an acyclic attack graph."""
    require_acyclic(q)
    return _base(q, db)


def _base(q: Query, db: Database) -> bool:
    if len(q) == 0:
        return True
    f = unattacked_atom(q)
    rest = q.without(f.name)
    blocks: dict = {}
    for fact in db.of(f.name):
        blocks.setdefault(fact.key, []).append(fact)
    for key in sorted(blocks):
        ok = True
        # a fact of the block that F cannot match falsifies q in some repair
        for fact in sorted(blocks[key], key=lambda x: x.values):
            mu = match_atom(f, fact, {})
            if mu is None or not _base(substitute_map(rest, mu), db):
                ok = False
                break
        if ok:
            return True
    return False


class _Names:
    def __init__(self):
        self.n = itertools.count(1)

    def fresh(self) -> Var:
        return Var(f"z{next(self.n)}")


def base_formula(q: Query) -> Formula:
    """Closed formula equivalent to :func:`base_certain` for q."""
    require_acyclic(q)
    used = {v.name for v in q.vars}
    names = _Names()

    def fresh():
        while True:
            v = names.fresh()
            if v.name not in used:
                return v

    def build(q: Query, bound: frozenset) -> Formula:
        if len(q) == 0:
            return Top()
        # bound variables behave like constants for the attack graph
        frozen = substitute_map(q, {v: Const(f"\x00{v.name}") for v in bound & q.vars})
        f_frozen = unattacked_atom(frozen)
        f = q.atom(f_frozen.name)
        key_new = tuple(sorted(f.key_vars - bound))
        zs = tuple(fresh() for _ in f.nonkey)
        key_terms = f.key
        inner_new = tuple(sorted(f.vars - bound - set(key_new)))
        eqs = tuple(Eq(z, t) for z, t in zip(zs, f.nonkey))
        rest = build(q.without(f.name), bound | f.vars)
        return Exists(key_new, And((
            Exists(zs, Rel(f.name, key_terms + zs)),
            Forall(zs, Implies(Rel(f.name, key_terms + zs), Exists(inner_new, And(eqs + (rest,))))),
        )))

    return build(q, frozenset())
