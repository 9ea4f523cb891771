"""Random queries, foreign keys and databases for property tests and demos."""

from __future__ import annotations

import random

from .model import Atom, Const, Database, Fact, ForeignKey, Query, RelationSchema, Var, is_about

VARS = [Var(n) for n in ("x", "y", "z", "u")]
CONSTS = ["c", "d"]


def random_query(rng: random.Random, max_atoms: int = 3, max_arity: int = 3, const_rate: float = 0.15) -> Query:
    atoms = []
    for i in range(rng.randint(1, max_atoms)):
        n = rng.randint(1, max_arity)
        k = rng.randint(1, n)
        rel = RelationSchema("ABCDE"[i], n, k)
        terms = [Const(rng.choice(CONSTS)) if rng.random() < const_rate else rng.choice(VARS) for _ in range(n)]
        atoms.append(Atom(rel, tuple(terms)))
    return Query(atoms)


def candidate_fks(q: Query) -> list:
    """Every unary fk about q."""
    out = []
    atoms = sorted(q, key=lambda a: a.name)
    for a in atoms:
        for b in atoms:
            if b.rel.key_len != 1:
                continue
            for i in range(1, a.rel.arity + 1):
                if a.term_at(i) == b.term_at(1):
                    out.append(ForeignKey(a.rel, i, b.rel))
    return out


def random_fks(rng: random.Random, q: Query, max_fks: int = 2, allow_trivial: bool = False) -> list:
    cands = [fk for fk in candidate_fks(q) if allow_trivial or not fk.trivial]
    rng.shuffle(cands)
    fks = cands[: rng.randint(0, min(max_fks, len(cands)))]
    assert is_about(fks, q)[0]
    return fks


def random_db(rng: random.Random, q: Query, max_facts: int = 8, domain=("a", "b", "c")) -> Database:
    values = sorted(set(domain) | set(q.consts))
    facts = set()
    # fixed iteration orders keep the output a function of the rng state
    atoms = sorted(q, key=lambda a: a.name)
    for _ in range(rng.randint(0, max_facts)):
        a = rng.choice(atoms)
        if rng.random() < 0.6:
            theta = {v: rng.choice(values) for v in sorted(a.vars, key=lambda v: v.name)}
            vals = tuple(t.value if isinstance(t, Const) else theta[t] for t in a.terms)
        else:
            vals = tuple(rng.choice(values) for _ in a.terms)
        facts.add(Fact(a.rel, vals))
    return Database(facts)


def random_instance(rng: random.Random, **kw):
    q = random_query(rng)
    return q, random_fks(rng, q)


def random_linked_instance(rng: random.Random, max_atoms: int = 4, max_arity: int = 3, const_rate: float = 0.2):
    """Like :func:`random_instance` but biased toward strong foreign keys:
    targets get a single-variable key that is then planted at non-key
    positions of other atoms."""
    q = random_query(rng, max_atoms, max_arity, const_rate)
    atoms = {a.name: list(a.terms) for a in q}
    rels = {a.name: a.rel for a in q}
    names = sorted(atoms)
    for _ in range(rng.randint(1, 3)):
        src, tgt = rng.choice(names), rng.choice(names)
        s, t = rels[src], rels[tgt]
        if src == tgt or t.key_len != 1 or s.arity == s.key_len:
            continue
        if not isinstance(atoms[tgt][0], Var):
            atoms[tgt][0] = rng.choice(VARS)
        atoms[src][rng.randint(s.key_len, s.arity - 1)] = atoms[tgt][0]
    q = Query(Atom(rels[n], tuple(atoms[n])) for n in names)
    cands = [fk for fk in candidate_fks(q) if not fk.trivial]
    strong = [fk for fk in cands if fk.strong]
    rng.shuffle(strong)
    weak = [fk for fk in cands if fk.weak]
    fks = strong[: rng.randint(1, 3)] if strong else []
    if weak and rng.random() < 0.3:
        fks.append(rng.choice(weak))
    return q, fks
