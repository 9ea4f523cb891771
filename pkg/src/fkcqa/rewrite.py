"""Reduction pipeline deciding certainty(q, FK) for FO-classified inputs.

The plan first closes FK under logical implication, then removes the weak
foreign keys, then the o->o and d->d ones, and finally alternates constant-key
steps (for an atom whose key holds no variable) with d->o steps until no
foreign key is left.  What remains is a primary-key-only problem with an
acyclic attack graph, decided by :func:`fkcqa.fo.base_certain`.

Each step is a database transformation plus a query simplification, except
the constant-key step, which branches over the facts of one block and
continues on a query where the bound variables are replaced by a single
placeholder constant.  A renaming of the database keeps that continuation
independent of the actual key values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import attack_graph, is_acyclic, lclosure
from .fo import base_certain, base_formula
from .interference import find_block_interference
from .model import (
    Const, Database, Fact, ForeignKey, Query, UsageError, Var, dangling, dangling_any, is_about,
    match_atom, sorted_fks, substitute_map, valuations,
)
from .obedience import FkType, fk_closure_of, fk_type

WEAK = "WeakRemoval"
OPO = "OPO"
DPD = "DPD"
DPO = "DPO"
CONST_KEY = "ConstantKey"

PLACEHOLDER = "◦b"


@dataclass(frozen=True)
class Step:
    kind: str
    query_before: Query
    fks_before: frozenset
    query_after: Query
    fks_after: frozenset
    fk: ForeignKey | None = None
    relation: str | None = None  # S for weak removal, N for constant-key
    substituted: tuple = ()  # constant-key: variables replaced by the placeholder

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "fk": str(self.fk) if self.fk else None,
            "relation": self.relation,
            "substituted": [v.name for v in self.substituted],
            "query_after": str(self.query_after),
            "fks_after": [str(f) for f in sorted_fks(self.fks_after)],
        }


@dataclass
class ReductionPlan:
    query: Query
    fks: frozenset
    steps: list = field(default_factory=list)
    base_query: Query | None = None

    def to_json(self) -> dict:
        return {
            "query": str(self.query),
            "fks": [str(f) for f in sorted_fks(self.fks)],
            "steps": [s.to_json() for s in self.steps],
            "base_query": str(self.base_query),
            "base_formula": str(base_formula(self.base_query)),
        }


# ---------------------------------------------------------------- the steps

def _rels(q: Query) -> set:
    return {a.name for a in q}


def step_weak_removal(q: Query, fks, S: str | None) -> Step:
    """Drop every weak fk referencing S; with S=None drop the remaining trivial fks."""
    fks = frozenset(fks)
    if S is None:
        if any(fk.weak and not fk.trivial for fk in fks):
            raise UsageError("non-trivial weak foreign keys remain")
        return Step(WEAK, q, fks, q, frozenset(fk for fk in fks if not fk.weak))
    if lclosure(fks, q.relations) != fks:
        raise UsageError("weak removal needs a logically closed set of foreign keys")
    if not any(fk.weak and not fk.trivial and fk.target.name == S for fk in fks):
        raise UsageError(f"no non-trivial weak foreign key references {S}")
    rest = frozenset(fk for fk in fks if not (fk.weak and fk.target.name == S))
    # re-adding the trivial fks keeps the set closed for the next removal
    return Step(WEAK, q, fks, q, lclosure(rest, q.relations), relation=S)


def _all_strong(fks):
    if any(fk.weak for fk in fks):
        raise UsageError("all foreign keys must be strong")


def step_opo(q: Query, fks, fk: ForeignKey) -> Step:
    fks = frozenset(fks)
    _all_strong(fks)
    if fk_type(fk, q, fks) != FkType.O_O:
        raise UsageError(f"{fk} is not of type o->o")
    S = q.atom(fk.target.name)
    # an atom without non-key positions has an empty fkclosure, which also qualifies
    if not {a.name for a in fk_closure_of(S, q, fks)} <= {S.name}:
        raise UsageError(f"fkclosure of {S.name} reaches other atoms")
    return Step(OPO, q, fks, q.without(S.name), fks - {fk}, fk=fk)


def step_dpd(q: Query, fks, fk: ForeignKey) -> Step:
    fks = frozenset(fks)
    _all_strong(fks)
    if fk_type(fk, q, fks) != FkType.D_D:
        raise UsageError(f"{fk} is not of type d->d")
    return Step(DPD, q, fks, q, fks - {fk}, fk=fk)


def _check_dpo_context(q: Query, fks):
    _all_strong(fks)
    for g in fks:
        if fk_type(g, q, fks) != FkType.D_O:
            raise UsageError(f"{g} is not of type d->o")
    if not is_acyclic(attack_graph(q))[0]:
        raise UsageError("attack graph is cyclic")
    if find_block_interference(q, fks):
        raise UsageError("block-interference present")


def step_dpo(q: Query, fks, fk: ForeignKey) -> Step:
    fks = frozenset(fks)
    _check_dpo_context(q, fks)
    if any(not a.key_vars for a in q):
        raise UsageError("every atom needs a variable in its key")
    if fk not in fks:
        raise UsageError(f"{fk} not in the foreign key set")
    return Step(DPO, q, fks, q.without(fk.target.name), fks - {fk}, fk=fk)


def step_constant_key(q: Query, fks, N: str) -> Step:
    fks = frozenset(fks)
    _check_dpo_context(q, fks)
    atom = q.atom(N)
    if atom.key_vars:
        raise UsageError(f"{N} has variables in its key")
    drop = {a.name for a in fk_closure_of(atom, q, fks)} | {N}
    q0 = q.without(*drop)
    fks0 = frozenset(fk for fk in fks if fk.source.name not in drop and fk.target.name not in drop)
    xs = tuple(sorted(atom.vars & q0.vars))
    q_after = substitute_map(q0, {x: Const(PLACEHOLDER) for x in xs})
    return Step(CONST_KEY, q, fks, q_after, fks0, relation=N, substituted=tuple(sorted(atom.vars)))


# --------------------------------------------------------- db transforms

def relevant_blocks(db: Database, atoms, rel: str) -> set:
    """Block ids of ``rel`` containing a fact in θ(atoms) ⊆ db for some θ."""
    atoms = list(atoms)
    target = next(a for a in atoms if a.name == rel)
    out = set()
    for theta in valuations(db, atoms):
        from .model import apply_valuation
        out.add(apply_valuation(target, theta).block_id)
    return out


def transform(step: Step, db: Database) -> Database:
    """Database transformation of a non-branching step."""
    q, fks = step.query_before, step.fks_before
    if step.kind in (WEAK, DPD):
        return db
    if step.kind == OPO:
        R = step.fk.source.name
        keep = relevant_blocks(db, fk_closure_of(q.atom(R), q, fks), R)
        return Database(f for f in db.facts
                        if f.name in _rels(step.query_after) and (f.name != R or f.block_id in keep))
    if step.kind == DPO:
        N = step.fk.source.name
        out_fks = [g for g in fks if g.source.name == N]
        good = {f.block_id for f in db.of(N) if not dangling_any(db, f, out_fks)}
        return Database(f for f in db.facts
                        if f.name in _rels(step.query_after) and (f.name != N or f.block_id in good))
    raise UsageError(f"{step.kind} has no plain database transformation")


def rename_for_placeholder(q0: Query, theta: dict, db: Database) -> Database:
    """Map db so that q0 with θ applied to the bound variables becomes q0 with
    the placeholder constant there.  At a position holding a bound variable x,
    θ(x) goes to the placeholder and any other value a to a tagged constant;
    every other position is left unchanged.  The map is injective per
    position, and positions linked by a foreign key hold the same term, so
    keys, joins and references are all preserved."""
    bound = set(theta)
    out = []
    for f in db.facts:
        if not q0.has(f.name):
            continue
        a = q0.atom(f.name)
        vals = []
        for t, v in zip(a.terms, f.values):
            if isinstance(t, Var) and t in bound:
                vals.append(PLACEHOLDER if v == theta[t] else f"◦({v}|{t.name})")
            else:
                vals.append(v)
        out.append(Fact(f.rel, tuple(vals)))
    return Database(out)


# --------------------------------------------------------------- planning

def _check_invariants(q: Query, fks):
    ok, problems = is_about(fks, q)
    assert ok, f"about-ness lost: {problems}"
    assert is_acyclic(attack_graph(q))[0], "attack graph became cyclic"
    assert not find_block_interference(q, fks), "block-interference appeared"


def build_plan(q: Query, fks) -> ReductionPlan:
    from .classify import FO, classify
    fks = frozenset(fks)
    c = classify(q, fks)
    if c.verdict != FO:
        raise UsageError(f"not FO-rewritable: {sorted(c.hardness_marks)}")
    plan = ReductionPlan(q, fks)
    cur = lclosure(fks, q.relations)

    def push(step):
        nonlocal q, cur
        plan.steps.append(step)
        q, cur = step.query_after, step.fks_after
        _check_invariants(q, cur)

    removed = False
    while True:
        weak = sorted({fk.target.name for fk in cur if fk.weak and not fk.trivial})
        if not weak:
            break
        push(step_weak_removal(q, cur, weak[0]))
        removed = True
    if removed:
        push(step_weak_removal(q, cur, None))
    else:
        # only the trivial fks added by the closure: nothing to record
        cur = frozenset(fk for fk in cur if not fk.weak)

    while cur:
        types = {fk: fk_type(fk, q, cur) for fk in sorted_fks(cur)}
        dd = [fk for fk, t in types.items() if t == FkType.D_D]
        oo = [fk for fk, t in types.items() if t == FkType.O_O
              and not any(g.source.name == fk.target.name for g in cur)]
        if dd:
            push(step_dpd(q, cur, dd[0]))
        elif oo:
            push(step_opo(q, cur, oo[0]))
        else:
            assert all(t == FkType.D_O for t in types.values()), types
            constant = [a.name for a in q if not a.key_vars]
            if constant:
                push(step_constant_key(q, cur, constant[0]))
            else:
                push(step_dpo(q, cur, sorted_fks(cur)[0]))
    assert is_acyclic(attack_graph(q))[0]
    plan.base_query = q
    return plan


# -------------------------------------------------------------- evaluation

def certain_eval(plan: ReductionPlan, db: Database) -> bool:
    names = _rels(plan.query)
    for f in db.facts:
        if f.name in names and plan.query.atom(f.name).rel != f.rel:
            raise UsageError(f"{f} does not match the plan's schema")
    return _run(plan, 0, db.restrict(names))


def _run(plan: ReductionPlan, i: int, db: Database) -> bool:
    if i == len(plan.steps):
        return base_certain(plan.base_query, db.restrict(_rels(plan.base_query)))
    return reduce_step(plan.steps[i], db, lambda d: _run(plan, i + 1, d))


def reduce_step(step: Step, db: Database, decide) -> bool:
    """Answer for the problem before ``step`` on db, given ``decide`` for the
    problem after it.  Plain steps call ``decide`` once on the transformed
    database; the constant-key step calls it once per fact of the block."""
    if step.kind != CONST_KEY:
        return decide(transform(step, db))
    q, fks = step.query_before, step.fks_before
    atom = q.atom(step.relation)
    key = tuple(t.value for t in atom.key)
    block = sorted((f for f in db.of(atom.name) if f.key == key), key=Fact.sort_key)
    if not block:
        return False
    out_fks = [g for g in fks if g.source.name == atom.name]
    if all(dangling_any(db, f, out_fks) for f in block):
        return False
    drop = {atom.name} | {a.name for a in fk_closure_of(atom, q, fks)}
    q0 = q.without(*drop)
    sub_db = db.restrict(_rels(q0))
    for f in block:
        theta = match_atom(atom, f, {})
        if theta is None:
            return False
        bound = {x: theta[x] for x in step.substituted if x in q0.vars}
        if not decide(rename_for_placeholder(q0, bound, sub_db)):
            return False
    return True


def certain(q: Query, fks, db: Database) -> bool:
    return certain_eval(build_plan(q, fks), db)
