import random

import pytest
from hypothesis import given, settings, strategies as st

from fkcqa.analysis import attack_graph, is_acyclic, lclosure
from fkcqa.classify import FO, classify
from fkcqa.interference import find_block_interference
from fkcqa.model import Database, ForeignKey, Query, UsageError, is_about, satisfies
from fkcqa.oracle import Answer, oracle_certain
from fkcqa.rewrite import (
    CONST_KEY, DPD, DPO, OPO, WEAK, build_plan, certain, certain_eval, reduce_step, step_constant_key,
    step_dpd, step_dpo, step_opo, step_weak_removal, transform,
)
from fkcqa.sampling import random_db, random_instance, random_linked_instance
from fkcqa.textio import parse_db, problem

from conftest import load_db, load_problem

seeds = st.integers(min_value=0, max_value=10**6)


def oracle_yes(db, q, fks):
    a = oracle_certain(db, q, fks).answer
    assert a != Answer.UNKNOWN
    return a == Answer.YES


def test_weak_only():
    q, fks = problem("schema R/2 key 1\nschema S/2 key 1\nquery R(x, y), S(x, z)\nfk R[1] -> S")
    plan = build_plan(q, fks)
    assert [s.kind for s in plan.steps] == [WEAK, WEAK]
    assert plan.steps[-1].fks_after == frozenset()
    assert all(s.query_after == q for s in plan.steps)


def test_weak_removal_needs_closed_set():
    q, fks = problem("schema R/2 key 1\nschema S/2 key 1\nquery R(x, y), S(x, z)\nfk R[1] -> S")
    with pytest.raises(UsageError):
        step_weak_removal(q, fks, "S")
    closed = lclosure(fks, q.relations)
    assert step_weak_removal(q, closed, "S").fks_after == lclosure([], q.relations)


def test_step_type_errors():
    q1, q2 = load_problem("q1"), load_problem("q2")
    with pytest.raises(UsageError):
        step_dpd(q1.query, q1.fks, q1.fks[0])
    with pytest.raises(UsageError):
        step_opo(q2.query, q2.fks, q2.fks[0])
    with pytest.raises(UsageError):
        step_constant_key(q1.query, q1.fks, "N")


def test_rst_chain_plan_preserves_answers():
    spec = load_problem("rst_chain")
    db = load_db("rst_chain", spec)
    plan = build_plan(spec.query, spec.fks)
    assert certain_eval(plan, db) == oracle_yes(db, spec.query, spec.fks)
    # every intermediate problem agrees with the oracle on the transformed db
    for s in plan.steps:
        if s.kind == CONST_KEY:
            break
        assert oracle_yes(db, s.query_before, s.fks_before) == certain_eval(plan, db)
        db = transform(s, db)


def test_opo_relevance_deletion():
    spec = load_problem("q1")
    schemas = spec.schemas
    step = step_opo(spec.query, spec.fks, spec.fks[0])
    assert step.query_after == spec.query.without("O")
    db = parse_db("N(a, 1, b)\nN(e, 1, f)\nO(f, 2)\n", schemas)
    out = transform(step, db)
    assert {str(f) for f in out} == {"N(e, 1, f)"}
    assert oracle_yes(db, spec.query, spec.fks) == oracle_yes(out, step.query_after, step.fks_after)
    consistent = parse_db("N(e, 1, f)\nO(f, 2)\n", schemas)
    assert satisfies(transform(step, consistent), step.query_after)


def test_gamma_dpo():
    spec = load_problem("gamma")
    db = load_db("gamma", spec)
    plan = build_plan(spec.query, spec.fks)
    assert [s.kind for s in plan.steps] == [DPO]
    out = transform(plan.steps[0], db)
    assert not out.of("O")
    assert {str(f) for f in out.of("N")} == {"N(c, d1, d2)", "N(c, p1, p2)"}
    assert out.of("Y") == db.of("Y")
    assert certain_eval(plan, db) == oracle_yes(db, spec.query, spec.fks)


def test_q1_is_its_own_rewriting():
    spec = load_problem("q1")
    db = load_db("q1_yes", spec)
    plan = build_plan(spec.query, spec.fks)
    assert [s.kind for s in plan.steps] == [OPO]
    assert certain_eval(plan, db) and satisfies(db, spec.query)
    assert oracle_yes(db, spec.query, spec.fks)


def test_q3_plan_matches_oracle():
    spec = load_problem("q3")
    plan = build_plan(spec.query, spec.fks)
    rng = random.Random(3)
    for _ in range(30):
        db = random_db(rng, spec.query)
        assert certain_eval(plan, db) == oracle_yes(db, spec.query, spec.fks)


def test_empty_fk_plan():
    q = load_problem("q1").query
    plan = build_plan(q, [])
    assert plan.steps == [] and plan.base_query == q


def test_hard_input_rejected():
    spec = load_problem("q2")
    with pytest.raises(UsageError):
        build_plan(spec.query, spec.fks)


def test_schema_mismatch():
    spec = load_problem("q1")
    other = problem("schema N/2 key 1\nquery N(x, y)")[0]
    with pytest.raises(UsageError):
        certain_eval(build_plan(spec.query, spec.fks), parse_db("N(a, b)\n", {"N": other.atom("N").rel}))


# the asymmetric treatment of O and P under N[2] -> O
ASYM = load_problem("asym")
ASYM_DB = load_db("asym", ASYM)


def _asym(text):
    return parse_db(text, ASYM.schemas)


@pytest.mark.parametrize("text,want", [
    ("N(c, a)\nN(c, b)\nO(a)\nP(a)\nP(b)\n", True),
    ("N(c, a)\nN(c, b)\nO(a)\nP(b)\n", False),
    ("N(c, a)\nN(c, b)\nO(a)\nP(a)\n", False),
    ("O(a)\nP(a)\nP(b)\n", False),
    ("N(c, a)\nN(c, b)\nP(a)\nP(b)\n", False),
    ("N(c, a)\nN(c, b)\nO(a)\nO(b)\nP(a)\nP(b)\n", True),
])
def test_asymmetry(text, want):
    db = _asym(text)
    assert certain(ASYM.query, ASYM.fks, db) == want
    assert oracle_yes(db, ASYM.query, ASYM.fks) == want


def test_plan_json():
    spec = load_problem("gamma")
    data = build_plan(spec.query, spec.fks).to_json()
    assert data["steps"][0]["kind"] == DPO and data["steps"][0]["fk"] == "N[2]->O"
    assert data["base_query"] and data["base_formula"]


def _fo_instance(rng):
    fam = random_linked_instance if rng.random() < 0.7 else random_instance
    for _ in range(50):
        q, fks = fam(rng)
        if classify(q, fks).verdict == FO:
            return q, fks
    return None


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_plan_invariants(seed):
    got = _fo_instance(random.Random(seed))
    if got is None:
        return
    q, fks = got
    plan = build_plan(q, fks)
    assert plan.steps == [] or plan.steps[-1].fks_after == frozenset()
    for s in plan.steps:
        assert is_about(s.fks_after, s.query_after)[0]
        assert is_acyclic(attack_graph(s.query_after))[0]
        assert not find_block_interference(s.query_after, s.fks_after)
    for a, b in zip(plan.steps, plan.steps[1:]):
        assert a.query_after == b.query_before and a.fks_after == b.fks_before


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_steps_preserve_oracle_answer(seed):
    rng = random.Random(seed)
    got = _fo_instance(rng)
    if got is None:
        return
    plan = build_plan(*got)
    for s in plan.steps:
        db = random_db(rng, s.query_before)
        before = oracle_certain(db, s.query_before, s.fks_before).answer
        if before == Answer.UNKNOWN:
            continue
        unknown = []

        def decide(d):
            a = oracle_certain(d, s.query_after, s.fks_after).answer
            unknown.append(a == Answer.UNKNOWN)
            return a == Answer.YES
        after = reduce_step(s, db, decide)
        if not any(unknown):
            assert (before == Answer.YES) == after, s.kind


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_rewriting_matches_oracle(seed):
    rng = random.Random(seed)
    got = _fo_instance(rng)
    if got is None:
        return
    q, fks = got
    db = random_db(rng, q)
    a = oracle_certain(db, q, fks).answer
    if a != Answer.UNKNOWN:
        assert certain(q, fks, db) == (a == Answer.YES)
