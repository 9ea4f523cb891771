"""Brute-force ⊕-repairs under primary keys and unary foreign keys.

A repair r keeps at most one fact per block of db (the set D = r ∩ db) and
inserts facts I = r \\ db.  Every inserted fact is reachable from D through
foreign-key references (otherwise dropping it gives a closer instance), so the
candidates are produced by fixing D and then chasing dangling references,
choosing the values of each inserted fact from

* the active domain of db and the constants of q,
* fresh constants ⊥1, ⊥2, ... taken in first-use order (bounded pool).

Minimality is decided exactly.  ``is_repair`` does it literally over all
subsets of db ⊕ r; the search uses an equivalent test based on the fact that
foreign-key satisfaction is preserved under union, so the largest FK-consistent
subset of a pk-consistent set is a fixpoint computation.

``oracle_certain`` looks for a falsifying repair.  Inserted values at
non-key positions that feed no foreign key only matter for query matches, and
an orphan constant there never helps q to match, so that search fills such
positions with distinct orphans (⊤1, ⊤2, ...) instead of branching over them.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .model import (
    Database, Fact, ForeignKey, Query, UsageError, consistent, key_equal, satisfies,
    satisfies_fk, satisfies_pk, valuations,
)
from .analysis import all_positions

FRESH = "⊥"
MINIMALITY_COST = 20
ORPHAN = "⊤"


class Answer(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RepairBudget:
    max_fresh_constants: int
    max_chase_depth: int
    max_candidate_facts: int = 64
    max_search_nodes: int = 50_000  # search steps; keeps pathological self-references bounded

    def __post_init__(self):
        if min(self.max_fresh_constants, self.max_chase_depth, self.max_candidate_facts, self.max_search_nodes) < 1:
            raise UsageError("budgets must be positive")

    def doubled(self) -> "RepairBudget":
        return RepairBudget(2 * self.max_fresh_constants, 2 * self.max_chase_depth,
                            2 * self.max_candidate_facts, 2 * self.max_search_nodes)


def default_budget(db: Database, q: Query | None, fks) -> RepairBudget:
    rels = {f.rel for f in db.facts}
    for fk in fks:
        rels |= {fk.source, fk.target}
    if q is not None:
        rels |= set(q.relations)
    return RepairBudget(
        max_fresh_constants=max(1, len(db) + (len(q) if q is not None else 0)),
        max_chase_depth=max(1, len(all_positions(rels))),
        max_candidate_facts=64,
        # the search space grows with the number of blocks
        max_search_nodes=50_000 + 20_000 * max(0, len(db) - 8),
    )


@dataclass
class RepairSet:
    repairs: list = field(default_factory=list)
    exhausted: bool = True


@dataclass
class OracleResult:
    answer: Answer
    exhausted: bool
    counterexample: Database | None = None
    candidates: int = 0

    def __eq__(self, other):
        if isinstance(other, Answer):
            return self.answer == other
        return NotImplemented


# ------------------------------------------------------------------ helpers

class _Inst:
    """Small mutable instance with the ``of`` and ``key_index`` views that
    :func:`fkcqa.model.valuations` needs."""

    def __init__(self, facts=()):
        self.rel: dict = {}
        self.keys: dict = {}
        for f in facts:
            self.add(f)

    def add(self, f: Fact):
        self.rel.setdefault(f.name, []).append(f)
        self.keys[(f.name, f.values[0])] = self.keys.get((f.name, f.values[0]), 0) + 1

    def pop(self, f: Fact):
        self.rel[f.name].remove(f)
        k = (f.name, f.values[0])
        self.keys[k] -= 1
        if not self.keys[k]:
            del self.keys[k]

    def of(self, name):
        return self.rel.get(name, [])

    def has_key(self, name, value) -> bool:
        return (name, value) in self.keys


def _holds(inst, q: Query) -> bool:
    for _ in valuations(inst, list(q)):
        return True
    return False


def greatest_fk_subset(facts: Iterable[Fact], fks) -> frozenset:
    """Largest subset of ``facts`` with no dangling fact (FK satisfaction is union-closed)."""
    out = set(facts)
    by_src: dict = {}
    for fk in fks:
        by_src.setdefault(fk.source.name, []).append(fk)
    while True:
        keys = {(f.name, f.values[0]) for f in out}
        bad = {f for f in out for fk in by_src.get(f.name, ())
               if (fk.target.name, f.values[fk.pos - 1]) not in keys}
        if not bad:
            return frozenset(out)
        out -= bad


def is_minimal(db: Database, r: Database, fks) -> bool:
    """Exact ⊕-minimality of a consistent r, via greatest FK-consistent subsets."""
    fks = list(fks)
    D = r.facts & db.facts
    I = r.facts - db.facts
    for a in I:
        if D <= greatest_fk_subset(D | (I - {a}), fks):
            return False
    used = {f.block_id for f in D}
    empty = [sorted(b, key=Fact.sort_key) for k, b in sorted(db.block_map.items()) if k not in used]
    for choice in itertools.product(*[[None] + b for b in empty]):
        A = {f for f in choice if f is not None}
        if not A:
            continue
        ids = {f.block_id for f in A}
        X = D | A | {f for f in I if f.block_id not in ids}
        G = greatest_fk_subset(X, fks)
        if D <= G and G & A:
            return False
    return True


def is_repair(db: Database, r: Database, fks, cap: int = 20) -> bool:
    """Literal definition: r consistent and no strict subset of db ⊕ r flips db into a consistent instance."""
    fks = list(fks)
    if not consistent(r, fks):
        return False
    diff = sorted((db ^ r).facts, key=Fact.sort_key)
    if len(diff) > cap:
        raise BudgetExceededError(f"|db ⊕ r| = {len(diff)} exceeds the cap {cap}")
    for size in range(len(diff)):
        for X in itertools.combinations(diff, size):
            if consistent(db ^ set(X), fks):
                return False
    return True


class BudgetExceededError(RuntimeError):
    pass


def closer_or_equal(db: Database, r: Database, s: Database) -> bool:
    """r is ⊕-closer to db than s (or equally close)."""
    return (db ^ r) <= (db ^ s)


def relevant_facts(db: Database, q: Query) -> frozenset:
    out = set()
    for theta in valuations(db, list(q)):
        out |= {f for f in (_apply(a, theta) for a in q)}
    return frozenset(out)


def _apply(atom, theta):
    from .model import apply_valuation
    return apply_valuation(atom, theta)


def canonical(r: Database) -> tuple:
    """Canonical form up to renaming of fresh (⊥/⊤) constants."""
    fresh = sorted({v for f in r.facts for v in f.values if v.startswith((FRESH, ORPHAN))})
    if not fresh:
        return tuple(sorted(f.sort_key() for f in r.facts))
    best = None
    perms = itertools.permutations(range(len(fresh))) if len(fresh) <= 6 else [range(len(fresh))]
    for perm in perms:
        ren = {c: f"\x01{i:03d}" for c, i in zip(fresh, perm)}
        form = tuple(sorted((f.name, tuple(ren.get(v, v) for v in f.values)) for f in r.facts))
        if best is None or form < best:
            best = form
    return best


# ------------------------------------------------------------------ search

class _Search:
    def __init__(self, db: Database, fks, budget: RepairBudget, q: Query | None, falsify: bool, nodes: int = 0):
        self.db = db
        self.fks = sorted(set(fks), key=ForeignKey.sort_key)
        self.budget = budget
        self.q = q
        self.falsify = falsify
        self.truncated = False
        self.by_src: dict = {}
        for fk in self.fks:
            self.by_src.setdefault(fk.source.name, []).append(fk)
        self.fk_positions = {(fk.source.name, fk.pos) for fk in self.fks}
        self.targets = {fk.target.name for fk in self.fks}
        base = set(db.adom) | (set(q.consts) if q is not None else set())
        self.base_values = sorted(base)
        self.blocks = [sorted(b, key=Fact.sort_key) for _, b in sorted(db.block_map.items())]
        self.nodes = nodes
        self.out_of_nodes = False

    # D: one fact or none per block
    def kept_sets(self):
        inst = _Inst()
        chosen: list = []

        def rec(i):
            if self._out_of_nodes():
                return
            if i == len(self.blocks):
                if not self._hopeless(chosen, inst):
                    yield list(chosen)
                return
            block = self.blocks[i]
            for f in block:
                inst.add(f)
                chosen.append(f)
                if not (self.falsify and _holds(inst, self.q)):
                    yield from rec(i + 1)
                chosen.pop()
                inst.pop(f)
            yield from rec(i + 1)

        yield from rec(0)

    def _out_of_nodes(self) -> bool:
        self.nodes += 1
        if self.nodes > self.budget.max_search_nodes:
            self.truncated = self.out_of_nodes = True
            return True
        return False

    def _hopeless(self, chosen, inst) -> bool:
        """An emptied block of a non-target relation with a fact whose references D already satisfies."""
        used = {f.block_id for f in chosen}
        for block in self.blocks:
            if block[0].block_id in used or block[0].name in self.targets:
                continue
            for f in block:
                if all(inst.has_key(fk.target.name, f.values[fk.pos - 1]) for fk in self.by_src.get(f.name, ())):
                    return True
        return False

    def _first_dangling(self, inst, order):
        for f in order:
            for fk in self.by_src.get(f.name, ()):
                if not inst.has_key(fk.target.name, f.values[fk.pos - 1]):
                    return f, fk
        return None

    def completions(self, kept):
        """Insertion sets completing ``kept`` into a consistent instance."""
        inst = _Inst(kept)
        order = list(kept)
        depth = {f: 0 for f in kept}
        inserted: list = []
        state = {"fresh": 0, "orphan": 0}
        dbfacts = self.db.facts

        def rec():
            if self._out_of_nodes():
                return
            hit = self._first_dangling(inst, order)
            if hit is None:
                yield list(inserted)
                return
            f, fk = hit
            d = depth[f] + 1
            if d > self.budget.max_chase_depth or len(inserted) >= self.budget.max_candidate_facts:
                self.truncated = True
                return
            key = f.values[fk.pos - 1]
            target = fk.target
            slots = []
            for j in range(2, target.arity + 1):
                if not self.falsify or (target.name, j) in self.fk_positions:
                    slots.append("pool")
                else:
                    slots.append("orphan")
            for values, nf, no in self._value_choices(slots, state["fresh"], state["orphan"]):
                new = Fact(target, (key,) + values)
                if new in dbfacts:
                    continue
                saved = dict(state)
                state["fresh"], state["orphan"] = nf, no
                inst.add(new)
                order.append(new)
                inserted.append(new)
                depth[new] = d
                if not (self.falsify and _holds(inst, self.q)):
                    yield from rec()
                del depth[new]
                inserted.pop()
                order.pop()
                inst.pop(new)
                state.update(saved)

        yield from rec()

    def _value_choices(self, slots, fresh, orphan):
        """Value tuples for the given slots with canonical fresh numbering."""
        if not slots:
            yield (), fresh, orphan
            return
        head, rest = slots[0], slots[1:]
        if head == "orphan":
            val = f"{ORPHAN}{orphan + 1}"
            for tail, nf, no in self._value_choices(rest, fresh, orphan + 1):
                yield (val,) + tail, nf, no
            return
        options = self.base_values + [f"{FRESH}{i}" for i in range(1, fresh + 1)]
        for v in options:
            for tail, nf, no in self._value_choices(rest, fresh, orphan):
                yield (v,) + tail, nf, no
        if fresh < self.budget.max_fresh_constants:
            v = f"{FRESH}{fresh + 1}"
            for tail, nf, no in self._value_choices(rest, fresh + 1, orphan):
                yield (v,) + tail, nf, no
        else:
            self.truncated = True

    def candidates(self):
        for kept in self.kept_sets():
            for ins in self.completions(kept):
                # a minimality check costs about as much as a few dozen search steps
                self.nodes += MINIMALITY_COST
                if self._out_of_nodes():
                    return
                r = Database(list(kept) + ins)
                if is_minimal(self.db, r, self.fks):
                    yield r


def _relevant_db(db: Database, q: Query | None, fks) -> Database:
    if q is None:
        return db
    names = {a.name for a in q} | {fk.source.name for fk in fks} | {fk.target.name for fk in fks}
    return db.restrict(names)


def candidate_universe(db: Database, fks, budget: RepairBudget | None = None, q: Query | None = None) -> frozenset:
    """db plus every fact inserted by some repair candidate that passes the minimality test."""
    fks = list(fks)
    budget = budget or default_budget(db, q, fks)
    out = set(db.facts)
    if consistent(db, fks):
        return frozenset(out)
    s = _Search(db, fks, budget, q, falsify=False)
    for r in s.candidates():
        out |= r.facts
        if len(out) > budget.max_candidate_facts:
            raise BudgetExceededError(f"candidate universe exceeds {budget.max_candidate_facts} facts")
    return frozenset(out)


def enumerate_repairs(db: Database, fks, budget: RepairBudget | None = None, q: Query | None = None) -> RepairSet:
    fks = list(fks)
    budget = budget or default_budget(db, q, fks)
    if consistent(db, fks):
        # nothing is closer to db than db itself
        return RepairSet([db], exhausted=True)
    s = _Search(db, fks, budget, q, falsify=False)
    seen = {}
    for r in s.candidates():
        seen.setdefault(canonical(r), r)
    return RepairSet([seen[k] for k in sorted(seen)], exhausted=not s.truncated)


def oracle_certain(db: Database, q: Query, fks, budget: RepairBudget | None = None) -> OracleResult:
    """yes / no / unknown: is q true in every ⊕-repair of db?"""
    fks = list(fks)
    db = _relevant_db(db, q, fks)
    budget = budget or default_budget(db, q, fks)
    if consistent(db, fks):
        if satisfies(db, q):
            return OracleResult(Answer.YES, True, None, 1)
        return OracleResult(Answer.NO, True, db, 1)
    # Iterative deepening: shallow levels come first so that a falsifying
    # repair with short insertion chains is found before the search dives
    # into long ones.  A level that finishes without hitting any limit is exact.
    nodes = n = 0
    for level in _levels(budget):
        s = _Search(db, fks, level, q, falsify=True, nodes=nodes)
        for r in s.candidates():
            n += 1
            if not satisfies(r, q):
                return OracleResult(Answer.NO, not s.truncated, r, n)
        if not s.truncated:
            return OracleResult(Answer.YES, True, None, n)
        if s.out_of_nodes:
            break
        nodes = s.nodes
    return OracleResult(Answer.UNKNOWN, False, None, n)


def _levels(budget: RepairBudget):
    top = min(budget.max_chase_depth, budget.max_fresh_constants, budget.max_candidate_facts // 8)
    for k in range(1, top + 1):
        yield RepairBudget(k, k, 8 * k, budget.max_search_nodes)
    yield budget


def pk_repairs(db: Database):
    """Subset-repairs w.r.t. primary keys only: one fact per block."""
    blocks = [sorted(b, key=Fact.sort_key) for _, b in sorted(db.block_map.items())]
    for choice in itertools.product(*blocks):
        yield Database(choice)


def pk_certain(db: Database, q: Query) -> bool:
    return all(satisfies(r, q) for r in pk_repairs(db))


# ------------------------------------------------------- pre-repair variant

def _orphans(inst: Database) -> set:
    counts: dict = {}
    nonkey_only = {}
    for f in inst.facts:
        for i, v in enumerate(f.values, 1):
            counts[v] = counts.get(v, 0) + 1
            nonkey_only[v] = nonkey_only.get(v, True) and i > f.rel.key_len
    return {v for v, c in counts.items() if c == 1 and nonkey_only[v]}


def irrelevantly_dangling(r: Database, db: Database, fks, q: Query) -> bool:
    from .analysis import Position
    from .obedience import syntactic_obedient
    fks = list(fks)
    orph = _orphans(r | db)
    for fk in fks:
        for f in r.of(fk.source.name):
            if (fk.target.name, f.values[fk.pos - 1]) in r.key_index:
                continue
            P = {Position(f.name, i) for i in range(f.rel.key_len + 1, f.rel.arity + 1)
                 if f.values[i - 1] in orph and f.values[i - 1] not in q.consts}
            if Position(f.name, fk.pos) not in P:
                return False
            if syntactic_obedient(P, q, fks).obedient:
                return False
    return True


def pre_repair_certain(db: Database, q: Query, fks) -> Answer:
    """Certainty via pre-repairs drawn from the pk-consistent subsets of db.

    Within this family the cap-order minimality is exact, because anything
    closer to db than a subset of db is again a subset of db.
    """
    fks = list(fks)
    db = _relevant_db(db, q, fks)
    blocks = [sorted(b, key=Fact.sort_key) for _, b in sorted(db.block_map.items())]
    good = []
    for choice in itertools.product(*[[None] + b for b in blocks]):
        r = Database(f for f in choice if f is not None)
        if irrelevantly_dangling(r, db, fks, q):
            good.append(r)
    maximal = [r for r in good if not any(r.facts < s.facts for s in good)]
    return Answer.YES if all(satisfies(r, q) for r in maximal) else Answer.NO
