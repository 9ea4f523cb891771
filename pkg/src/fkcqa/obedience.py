"""Obedience of position sets, fk types and disobedience witnesses.

A set P of non-key positions of an atom F is obedient when replacing the terms
at P by fresh variables, and dropping every atom reachable from P in the
dependency graph, yields a query still entailing q under the foreign keys.
The syntactic test (four conditions on the dependency graph) is the decision
procedure; :func:`semantic_entails` is an independent chase-based oracle.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .analysis import Position, all_positions, dependency_graph, on_cycle, pos_closure
from .model import (
    Atom, Const, Database, Fact, ForeignKey, Query, UsageError, Var,
    apply_valuation, dangling, is_about, satisfies, satisfies_fk,
)

BOTTOM = "⊥"
TOP = "⊤"


@dataclass
class ObedienceVerdict:
    obedient: bool
    violations: list = field(default_factory=list)  # (condition, detail) pairs

    @property
    def violated_conditions(self) -> set:
        return {c for c, _ in self.violations}


class FkType(enum.Enum):
    WEAK = "weak"
    O_O = "o->o"
    D_D = "d->d"
    D_O = "d->o"


def nonkey_positions(atom: Atom) -> frozenset:
    return frozenset(Position(atom.name, i) for i in range(atom.rel.key_len + 1, atom.rel.arity + 1))


def _check_positions(P, q: Query):
    rels = {p.rel for p in P}
    if len(rels) > 1:
        raise UsageError("positions must belong to a single relation")
    for p in P:
        if not q.has(p.rel):
            raise UsageError(f"relation {p.rel} is not in the query")
        a = q.atom(p.rel)
        if not (a.rel.key_len < p.index <= a.rel.arity):
            raise UsageError(f"{p} is not a non-key position")


def fk_closure_atoms(P: Iterable[Position], q: Query, fks: Iterable[ForeignKey]) -> frozenset:
    closure = pos_closure(P, fks)
    rels = {p.rel for p in closure}
    return frozenset(a for a in q.atoms if a.name in rels)


def fk_closure_of(atom: Atom, q: Query, fks) -> frozenset:
    """fkclosure(R, q, FK) using all non-key positions of R."""
    return fk_closure_atoms(nonkey_positions(atom), q, fks)


def _term_at(q: Query, p: Position):
    return q.atom(p.rel).term_at(p.index) if q.has(p.rel) else None


def syntactic_obedient(P: Iterable[Position], q: Query, fks: Iterable[ForeignKey]) -> ObedienceVerdict:
    P = frozenset(P)
    fks = list(fks)
    _check_positions(P, q)
    g = dependency_graph(fks)
    closure = pos_closure(P, fks)
    complement = all_positions(q.relations) - closure
    out = []
    for p in sorted(P):
        cyc = on_cycle(p, g)
        if cyc:
            out.append(("I", {"position": p, "cycle": cyc}))
    for p in sorted(closure):
        t = _term_at(q, p)
        if isinstance(t, Const):
            out.append(("II", {"position": p, "constant": t.value}))
    occ: dict = {}
    for p in sorted(all_positions(q.relations)):
        t = _term_at(q, p)
        if isinstance(t, Var):
            occ.setdefault(t, []).append(p)
    for v in sorted(occ):
        inside = [p for p in occ[v] if p in closure]
        outside = [p for p in occ[v] if p in complement]
        if inside and outside:
            out.append(("III", {"variable": v.name, "closure_position": inside[0], "complement_position": outside[0]}))
        nonkey = [p for p in inside if p.index > q.atom(p.rel).rel.key_len]
        if len(nonkey) >= 2:
            out.append(("IV", {"variable": v.name, "positions": (nonkey[0], nonkey[1])}))
    return ObedienceVerdict(not out, out)


def atom_obedient(atom: Atom, q: Query, fks) -> ObedienceVerdict:
    return syntactic_obedient(nonkey_positions(atom), q, fks)


def fresh_var(p: Position) -> Var:
    return Var(f"_{p.rel}{p.index}")


def freshened(atom: Atom, P: Iterable[Position]) -> Atom:
    """F_P: the atom with fresh variables at the positions of P."""
    idx = {p.index for p in P if p.rel == atom.name}
    return Atom(atom.rel, tuple(fresh_var(Position(atom.name, i)) if i in idx else t
                                for i, t in enumerate(atom.terms, 1)))


def obedience_premise(P: Iterable[Position], q: Query, fks) -> Query:
    """(q minus fkclosure(P)) plus F_P."""
    P = frozenset(P)
    if not P:
        return q
    rel = next(iter(P)).rel
    drop = {a.name for a in fk_closure_atoms(P, q, fks)}
    return Query([a for a in q if a.name not in drop] + [freshened(q.atom(rel), P)])


class BudgetExceeded(RuntimeError):
    """A bounded search could not finish within its budget."""


def default_chase_budget(q: Query) -> int:
    return len(all_positions(q.relations)) * (len(q) + 2)


def _freeze_injective(q: Query) -> tuple:
    theta = {v: f"◦{v.name}" for v in q.vars}
    return Database(apply_valuation(a, theta) for a in q), theta


def semantic_entails(q_from: Query, q_to: Query, fks, depth_budget: int | None = None,
                     max_facts: int = 2000) -> bool:
    """Decide q_from |=_FK q_to by chasing the canonical database of q_from.

    Raises BudgetExceeded when the chase is still growing at the depth bound
    (or has more than ``max_facts`` facts) and no match has been found yet.
    """
    fks = list(fks)
    if depth_budget is None:
        depth_budget = default_chase_budget(q_to if len(q_to) >= len(q_from) else q_from)
    db, _ = _freeze_injective(q_from)
    facts = set(db.facts)
    counter = itertools.count()
    for _ in range(depth_budget + 1):
        current = Database(facts)
        if satisfies(current, q_to):
            return True
        new = {}
        for fk in fks:
            for f in current.of(fk.source.name):
                key = f.values[fk.pos - 1]
                if dangling(current, f, fk) and (fk.target.name, key) not in new:
                    nulls = tuple(f"◦n{next(counter)}" for _ in range(fk.target.arity - 1))
                    new[(fk.target.name, key)] = Fact(fk.target, (key,) + nulls)
        if not new:
            return False
        facts |= set(new.values())
        if len(facts) > max_facts:
            raise BudgetExceeded(f"chase grew beyond {max_facts} facts")
    if satisfies(Database(facts), q_to):
        return True
    raise BudgetExceeded(f"chase still growing after {depth_budget} rounds")


def semantic_obedient(P: Iterable[Position], q: Query, fks, depth_budget: int | None = None,
                      max_facts: int = 2000) -> bool:
    return semantic_entails(obedience_premise(P, q, fks), q, fks, depth_budget, max_facts)


def fk_type(fk: ForeignKey, q: Query, fks) -> FkType:
    if fk.weak:
        return FkType.WEAK
    src = atom_obedient(q.atom(fk.source.name), q, fks).obedient
    tgt = atom_obedient(q.atom(fk.target.name), q, fks).obedient
    if src and tgt:
        return FkType.O_O
    if not src and not tgt:
        return FkType.D_D
    if not src and tgt:
        return FkType.D_O
    raise AssertionError(f"{fk}: strong fk from an obedient atom into a disobedient one")


# --------------------------------------------------------------- witnesses

@dataclass
class Witness:
    db: Database
    gadget: Database  # the facts added by the chase
    case: str  # a, b or c
    restricted: bool  # True when the restricted chase variant alone sufficed


def _chase_candidates(f: Fact, fk: ForeignKey, pool, case, anchor):
    """Value tuples for the generated U-fact, restricted variant first."""
    a = f.values[fk.pos - 1]
    m = fk.target.arity
    U = fk.target.name
    restricted = []
    if case == "a":
        (R, i) = anchor
        vals = [a] * (m - 1)
        if U == R and 2 <= i <= m:
            for alt in pool:
                if alt != a:
                    v = list(vals)
                    v[i - 2] = alt
                    restricted.append(tuple(v))
        else:
            restricted.append(tuple(vals))
    elif case == "c":
        (R, i), (S, j) = anchor
        C = [c for c in pool if c not in (BOTTOM, TOP)] or [TOP]
        for combo in itertools.product(C, repeat=m - 1):
            v = list(combo)
            if U == R and 2 <= i <= m:
                v[i - 2] = BOTTOM
            if U == S and 2 <= j <= m:
                v[j - 2] = BOTTOM
            restricted.append(tuple(v))
    restricted = list(dict.fromkeys(restricted))
    full = [v for v in itertools.product(pool, repeat=m - 1) if v not in restricted]
    return [(a,) + v for v in restricted], [(a,) + v for v in full]


def disobedience_witness(P: Iterable[Position], q: Query, fks, max_nodes: int = 20000) -> Witness:
    """Database satisfying FK and (q minus fkclosure(P)) plus F_P, yet falsifying q."""
    P = frozenset(P)
    fks = sorted(fks, key=ForeignKey.sort_key)
    verdict = syntactic_obedient(P, q, fks)
    if verdict.obedient:
        raise UsageError("positions are obedient; no witness exists")
    conds = verdict.violated_conditions
    rel = next(iter(P)).rel
    premise = obedience_premise(P, q, fks)
    base, theta = _freeze_injective(premise)
    F = q.atom(rel)
    fp = freshened(F, P)
    b = {p: theta[fresh_var(p)] for p in P}
    C = sorted(b.values())
    # q* over the frozen valuation: F with b_i at the P positions
    qtheta = dict(theta)
    for v in q.vars:
        qtheta.setdefault(v, f"◦{v.name}")
    star = {apply_valuation(a, qtheta) for a in q if a.name != rel}
    star.add(Fact(F.rel, tuple(b.get(Position(rel, i), None) or
                               (t.value if isinstance(t, Const) else qtheta[t])
                               for i, t in enumerate(F.terms, 1))))
    if "I" in conds:
        case = "a"
        anchor = next(d["position"] for c, d in verdict.violations if c == "I")
        anchor = (anchor.rel, anchor.index)
    elif conds & {"II", "III"}:
        case, anchor = "b", None
    else:
        case = "c"
        p1, p2 = min(tuple(sorted(d["positions"])) for c, d in verdict.violations if c == "IV")
        anchor = ((p1.rel, p1.index), (p2.rel, p2.index))
    pool = C + [BOTTOM, TOP]
    budget = [max_nodes]

    def check(facts) -> Database | None:
        # db minus q* first; when an atom left in the premise references a
        # dropped closure atom, the q* facts have to stay as well
        for gadget in (Database(facts - star), Database(facts - base.facts)):
            db = Database(base.facts | gadget.facts)
            if satisfies_fk(db, fks) and satisfies(db, premise) and not satisfies(db, q):
                return gadget
        return None

    def search(facts, use_full):
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("witness search exhausted its node budget")
        cur = Database(facts)
        for fk in fks:
            for f in sorted(cur.of(fk.source.name), key=Fact.sort_key):
                if dangling(cur, f, fk):
                    restricted, full = _chase_candidates(f, fk, pool, case, anchor)
                    for vals in restricted + (full if use_full else []):
                        got = search(facts | {Fact(fk.target, vals)}, use_full)
                        if got is not None:
                            return got
                    return None
        return check(facts)

    for use_full in (False, True):
        got = search(frozenset(star), use_full)
        if got is not None:
            return Witness(Database(base.facts | got.facts), got, case, not use_full)
    raise BudgetExceeded("no witness found")


def verify_witness(w: Witness, P, q: Query, fks) -> bool:
    premise = obedience_premise(P, q, fks)
    return satisfies_fk(w.db, fks) and satisfies(w.db, premise) and not satisfies(w.db, q)
